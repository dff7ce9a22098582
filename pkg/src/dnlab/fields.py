"""Number fields by minimal polynomial: embeddings, exact norms, units, regulators.

Also home to rational recognition, used to certify "equal up to a rational"
claims numerically.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import sympy

from .arith import DomainError
from .report import VerificationReport

_X = sympy.Symbol("x")


# ---------------------------------------------------------------------------
# exact linear algebra over Q

def _solve(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    n = len(A)
    M = [list(map(Fraction, row)) + [Fraction(v)] for row, v in zip(A, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular system")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _charpoly(A: list[list[Fraction]]) -> list[Fraction]:
    """Characteristic polynomial det(xI - A), highest degree first (Faddeev-LeVerrier)."""
    n = len(A)
    coeffs = [Fraction(1)]
    Mk = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        # M_k = A M_{k-1} + c_{k-1} I
        prev = Mk
        Mk = [[sum(A[i][t] * prev[t][j] for t in range(n)) + (coeffs[-1] if i == j else 0)
               for j in range(n)] for i in range(n)]
        AM = [[sum(A[i][t] * Mk[t][j] for t in range(n)) for j in range(n)] for i in range(n)]
        coeffs.append(-sum(AM[i][i] for i in range(n)) / k)
    return coeffs


def rational_reconstruct(x: float, max_den: int = 10 ** 6, tol: float = 1e-8) -> Fraction | None:
    q = Fraction(x).limit_denominator(max_den)
    return q if abs(float(q) - x) <= tol * max(1.0, abs(x)) else None


# ---------------------------------------------------------------------------
# fields and elements

class NumberField:
    """Q[x]/(m(x)) for a monic irreducible integer polynomial m of degree <= 6."""

    def __init__(self, minpoly: Sequence[int], name: str = "K", check: bool = True):
        coeffs = [int(c) for c in minpoly]
        if not coeffs or coeffs[0] != 1:
            raise DomainError(f"minimal polynomial {coeffs} must be monic (highest degree first)")
        self.minpoly = tuple(coeffs)
        self.degree = len(coeffs) - 1
        self.name = name
        if self.degree < 1:
            raise DomainError("degree must be positive")
        if check:
            if self.degree > 6:
                raise DomainError("only degree <= 6 is supported")
            if not sympy.Poly(coeffs, _X).is_irreducible:
                raise DomainError(f"{self.poly_str()} is reducible")
        self.roots = _ordered_roots(coeffs)
        r1 = int(sum(1 for z in self.roots if z.imag == 0))
        self.signature = (r1, (self.degree - r1) // 2)
        # embeddings: reals, then one representative (positive imaginary part) per pair
        self.embeddings = np.array([z for z in self.roots if z.imag >= 0])
        self._vieta_check()
        # multiplication-by-x matrix on the power basis (column j = x * x^j)
        n = self.degree
        low = list(reversed(coeffs))[:-1]  # m = x^n + sum low[k] x^k
        C = [[Fraction(0)] * n for _ in range(n)]
        for j in range(n - 1):
            C[j + 1][j] = Fraction(1)
        for i in range(n):
            C[i][n - 1] = Fraction(-low[i])
        self._companion = C
        self.pairs: list[tuple[int, int]] | None = None
        self.parents: tuple["NumberField", "NumberField"] | None = None

    # ----------------------------------------------------------------------
    def poly_str(self) -> str:
        return str(sympy.Poly(list(self.minpoly), _X).as_expr())

    def __repr__(self):
        return f"NumberField({self.name}: {self.poly_str()})"

    def _vieta_check(self) -> None:
        rebuilt = np.poly(self.roots).real
        err = np.max(np.abs(rebuilt - np.array(self.minpoly, dtype=float)))
        scale = max(1.0, float(np.max(np.abs(self.minpoly))))
        if err > 1e-12 * scale * 10 ** self.degree:
            raise DomainError(f"root refinement failed Vieta check (error {err:.2e})")

    @property
    def n_embeddings(self) -> int:
        return sum(self.signature)

    def embedding_weights(self) -> np.ndarray:
        r1, r2 = self.signature
        return np.array([1.0] * r1 + [2.0] * r2)

    def __call__(self, coords) -> "FieldElem":
        return FieldElem(self, coords)

    def gen(self) -> "FieldElem":
        return self([0, 1] + [0] * (self.degree - 2)) if self.degree > 1 else self([0])

    def one(self) -> "FieldElem":
        return self([1])

    def power_basis(self) -> list["FieldElem"]:
        return [self([0] * k + [1]) for k in range(self.degree)]

    def polynomial_in_gen(self, poly_low_first: Sequence) -> "FieldElem":
        out = self([0])
        g = self.gen()
        p = self.one()
        for c in poly_low_first:
            out = out + p * Fraction(c)
            p = p * g
        return out

    def to_dict(self) -> dict:
        return {"name": self.name, "minpoly": list(self.minpoly), "signature": list(self.signature)}


def _ordered_roots(coeffs: Sequence[int]) -> np.ndarray:
    roots = np.roots(np.array(coeffs, dtype=float))
    roots = np.array([_newton(coeffs, complex(z)) for z in roots])
    out = []
    for z in roots:
        if abs(z.imag) < 1e-10:
            out.append(complex(z.real, 0.0))
        else:
            out.append(z)
    reals = sorted((z for z in out if z.imag == 0), key=lambda z: -z.real)
    upper = sorted((z for z in out if z.imag > 0), key=lambda z: (-z.real, -z.imag))
    cplx = []
    for z in upper:
        cplx.extend([z, z.conjugate()])
    return np.array(reals + cplx)


def _newton(coeffs, z: complex, steps: int = 8) -> complex:
    p = np.poly1d(np.array(coeffs, dtype=float))
    dp = p.deriv()
    for _ in range(steps):
        d = dp(z)
        if d == 0:
            break
        step = p(z) / d
        z = z - step
        if abs(step) < 1e-17 * max(1.0, abs(z)):
            break
    return complex(z)


class FieldElem:
    __slots__ = ("field", "coords")

    def __init__(self, K: NumberField, coords):
        c = [Fraction(v) for v in coords]
        if len(c) > K.degree:
            raise DomainError("too many coordinates for the power basis")
        self.field = K
        self.coords = tuple(c + [Fraction(0)] * (K.degree - len(c)))

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "FieldElem":
        if isinstance(other, FieldElem):
            if other.field is not self.field:
                raise DomainError("elements of different fields")
            return other
        return FieldElem(self.field, [other])

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElem(self.field, [a + b for a, b in zip(self.coords, o.coords)])

    __radd__ = __add__

    def __neg__(self):
        return FieldElem(self.field, [-a for a in self.coords])

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        n = self.field.degree
        prod = [Fraction(0)] * (2 * n - 1)
        for i, a in enumerate(self.coords):
            if a:
                for j, b in enumerate(o.coords):
                    if b:
                        prod[i + j] += a * b
        low = list(reversed(self.field.minpoly))
        for k in range(2 * n - 2, n - 1, -1):
            t = prod[k]
            if t:
                for i in range(n):
                    prod[k - n + i] -= t * low[i]
        return FieldElem(self.field, prod[:n])

    __rmul__ = __mul__

    def matrix(self) -> list[list[Fraction]]:
        """Matrix of multiplication by self on the power basis (columns = images)."""
        cols = []
        e = self
        g = self.field.gen()
        for _ in range(self.field.degree):
            cols.append(e.coords)
            e = e * g
        return [[cols[j][i] for j in range(self.field.degree)] for i in range(self.field.degree)]

    def inverse(self) -> "FieldElem":
        if self.is_zero():
            raise ZeroDivisionError("zero has no inverse")
        e1 = [Fraction(1)] + [Fraction(0)] * (self.field.degree - 1)
        return FieldElem(self.field, _solve(self.matrix(), e1))

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = FieldElem(self.field, [other])
        if not isinstance(other, FieldElem):
            return NotImplemented
        return self.field is other.field and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def is_zero(self) -> bool:
        return not any(self.coords)

    # invariants ------------------------------------------------------------
    def conjugates(self) -> np.ndarray:
        """Values at all complex roots of the minimal polynomial."""
        c = np.array([float(v) for v in self.coords])
        V = np.vander(self.field.roots, self.field.degree, increasing=True)
        return V @ c

    def embed(self) -> np.ndarray:
        """Values at the r1 + r2 embeddings."""
        c = np.array([float(v) for v in self.coords])
        V = np.vander(self.field.embeddings, self.field.degree, increasing=True)
        return V @ c

    def norm_float(self) -> float:
        return float(np.prod(self.conjugates()).real)

    def charpoly(self) -> list[Fraction]:
        return _charpoly(self.matrix())

    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.charpoly())

    def log_vector(self) -> np.ndarray:
        """Weighted logs (1 for real, 2 for complex embeddings)."""
        return self.field.embedding_weights() * np.log(np.abs(self.embed()))

    def to_dict(self) -> dict:
        return {"field": self.field.name, "coords": [str(c) for c in self.coords]}

    def __repr__(self):
        terms = [f"{c}*x^{k}" if k else f"{c}" for k, c in enumerate(self.coords) if c]
        return " + ".join(terms) if terms else "0"


def nf_create(minpoly: Sequence[int], name: str = "K") -> NumberField:
    return NumberField(minpoly, name)


def exact_norm(e: FieldElem) -> Fraction:
    """Norm via the resultant Res(m, a) of the minimal polynomial and the element polynomial."""
    den = math.lcm(*[c.denominator for c in e.coords])
    num = [int(c * den) for c in e.coords]
    if not any(num):
        return Fraction(0)
    m = sympy.Poly(list(e.field.minpoly), _X)
    a = sympy.Poly(list(reversed(num)), _X)
    res = sympy.resultant(m, a)
    return Fraction(int(res), den ** e.field.degree)


# ---------------------------------------------------------------------------
# composita

def compositum(K1: NumberField, K2: NumberField, name: str = "K1K2") -> tuple[NumberField, FieldElem, FieldElem]:
    """Field generated by theta = a + k b (smallest k >= 1 giving degree n1 n2).

    Returns the field and the images of the two generators.  ``field.pairs``
    records, for every root of the compositum, the indices of the roots of
    K1 and K2 it restricts to.
    """
    y = sympy.Symbol("y")
    m1 = sympy.Poly(list(K1.minpoly), _X).as_expr()
    m2 = sympy.Poly(list(K2.minpoly), y).as_expr()
    for k in range(1, 20):
        res = sympy.Poly(sympy.resultant(m1.subs(_X, _X - k * y), m2, y), _X)
        if res.is_irreducible:
            break
    else:
        raise DomainError("no primitive element a + k b found")
    L = NumberField([int(c) for c in res.all_coeffs()], name)
    pairs = []
    for t in L.roots:
        best = min(((abs(t - (a + k * b)), i, j) for i, a in enumerate(K1.roots)
                    for j, b in enumerate(K2.roots)))
        if best[0] > 1e-8:
            raise DomainError("could not match compositum roots")
        pairs.append((best[1], best[2]))
    L.pairs = pairs
    L.parents = (K1, K2)
    a = _element_from_values(L, np.array([K1.roots[i] for i, _ in pairs]))
    b = (L.gen() - a) / k
    _assert_root(K1, a)
    _assert_root(K2, b)
    return L, a, b


def _element_from_values(K: NumberField, values: np.ndarray, max_den: int = 10 ** 6) -> FieldElem:
    V = np.vander(K.roots, K.degree, increasing=True)
    c = np.linalg.solve(V, values)
    if np.max(np.abs(c.imag)) > 1e-6:
        raise DomainError(f"reconstruction produced non-real coordinates {c}")
    coords = []
    for v in c.real:
        q = rational_reconstruct(float(v), max_den, 1e-8)
        if q is None:
            raise DomainError(f"rational reconstruction failed for coordinates {c.real}")
        coords.append(q)
    return K(coords)


def _assert_root(K: NumberField, e: FieldElem) -> None:
    acc = FieldElem(e.field, [0])
    for c in K.minpoly:
        acc = acc * e + c
    if not acc.is_zero():
        raise DomainError("reconstructed generator is not a root of its minimal polynomial")


def embed_subfield(elem: FieldElem, image_of_gen: FieldElem) -> FieldElem:
    """Map an element of a subfield into a field where its generator goes to image_of_gen."""
    out = image_of_gen.field([0])
    p = image_of_gen.field.one()
    for c in elem.coords:
        out = out + p * c
        p = p * image_of_gen
    return out


def relative_norm(e: FieldElem, which: int = 0, max_den: int = 10 ** 6, tol: float = 1e-8) -> FieldElem:
    """Norm from a compositum down to parent ``which`` (0 or 1), by grouping embeddings."""
    L = e.field
    if L.pairs is None or L.parents is None:
        raise DomainError("relative norms need a compositum built by compositum()")
    sub = L.parents[which]
    vals = e.conjugates()
    prods = np.ones(sub.degree, dtype=complex)
    for r, pair in enumerate(L.pairs):
        prods[pair[which]] *= vals[r]
    V = np.vander(sub.roots, sub.degree, increasing=True)
    c = np.linalg.solve(V, prods)
    coords = []
    for v in c:
        q = rational_reconstruct(float(v.real), max_den, tol)
        if q is None or abs(v.imag) > tol * max(1.0, abs(v)):
            raise DomainError(f"relative norm reconstruction failed; float products {prods}")
        coords.append(q)
    return sub(coords)


# ---------------------------------------------------------------------------
# units and regulators

def unit_search(K: NumberField, coeff_bound: int, basis: Sequence[FieldElem] | None = None,
                denominators: Sequence[int] = (1, 2)) -> list[FieldElem]:
    """Integral units sum(c_k b_k)/d with |c_k| <= coeff_bound, up to torsion and inversion.

    ``basis`` defaults to the power basis.  Candidates are filtered by the
    floating-point norm, then certified by the exact norm and an integrality
    test.  Results are sorted by the size of their log vector.
    """
    basis = list(basis) if basis is not None else K.power_basis()
    n = len(basis)
    B = np.array([b.conjugates() for b in basis])  # n x degree
    rng = np.arange(-coeff_bound, coeff_bound + 1)
    grid = np.array(np.meshgrid(*[rng] * n, indexing="ij")).reshape(n, -1).T
    vals = grid @ B
    logabs = np.sum(np.log(np.abs(vals) + 1e-300), axis=1)
    found: dict[tuple, FieldElem] = {}
    rejected: set[tuple] = set()
    emb_idx = [int(np.argmin(np.abs(K.roots - z))) for z in K.embeddings]
    for d in denominators:
        target = K.degree * math.log(d)
        hits = np.nonzero(np.abs(logabs - target) < 1e-7)[0]
        for h in hits:
            c = grid[h]
            if d > 1 and all(int(v) % d == 0 for v in c):
                continue
            if not any(c):
                continue
            lv = K.embedding_weights() * np.log(np.abs(vals[h][emb_idx] / d))
            if np.max(np.abs(lv)) < 1e-9:
                continue  # torsion
            key = tuple(np.round(lv, 6))
            neg = tuple(np.round(-lv, 6))
            if key in found or neg in found or key in rejected:
                continue
            e = sum((b * int(ck) for b, ck in zip(basis, c) if ck), K([0])) * Fraction(1, d)
            if not e.is_integral() or abs(exact_norm(e)) != 1:
                rejected.add(key)
                continue
            found[key] = e
    return sorted(found.values(), key=lambda u: (float(np.linalg.norm(u.log_vector())),
                                                 [float(c) for c in u.coords]))


def unit_lattice_basis(units: Sequence[FieldElem], max_den: int = 1000) -> list[int]:
    """Indices of a subset of ``units`` generating the same lattice of log vectors.

    Greedy: take units in order, keep those that are not an integer
    combination of the units kept so far; a unit with a non-integral
    rational combination is kept and the earlier unit it refines is flagged.
    """
    kept: list[int] = []
    vecs: list[np.ndarray] = []
    for i, u in enumerate(units):
        v = u.log_vector()[:-1] if len(u.log_vector()) > 1 else u.log_vector()
        if not vecs:
            kept.append(i)
            vecs.append(v)
            continue
        A = np.array(vecs).T
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        resid = np.linalg.norm(A @ coef - v)
        if resid > 1e-8 * max(1.0, np.linalg.norm(v)):
            kept.append(i)
            vecs.append(v)
            continue
        if all(abs(c - round(c)) < 1e-7 for c in coef):
            continue
        # rational but non-integral combination: the lattice is larger than the
        # span of the kept units; replacing is left to the caller
        kept.append(i)
        vecs.append(v)
    return kept


@dataclass
class UnitSystem:
    field: NumberField
    units: list[FieldElem]

    def log_matrix(self) -> np.ndarray:
        return np.array([u.log_vector() for u in self.units])

    def regulator_matrix(self, drop: int | None = None) -> np.ndarray:
        L = self.log_matrix()
        r = self.field.n_embeddings - 1
        if len(self.units) != r:
            raise DomainError(f"need {r} units, got {len(self.units)}")
        drop = r if drop is None else drop
        return np.delete(L, drop, axis=1)

    def regulator(self, drop: int | None = None) -> float:
        if self.field.n_embeddings == 1:
            return 1.0
        return abs(float(np.linalg.det(self.regulator_matrix(drop))))

    def independent(self, tol: float = 1e-10) -> bool:
        return self.regulator() > tol

    def to_dict(self) -> dict:
        return {"field": self.field.to_dict(), "units": [u.to_dict() for u in self.units],
                "regulator": self.regulator()}


def regulator(units: UnitSystem, drop: int | None = None) -> float:
    reg = units.regulator(drop)
    if reg < 1e-10:
        raise DomainError("units are dependent (regulator below 1e-10)")
    return reg


# ---------------------------------------------------------------------------
# rational recognition

@dataclass(frozen=True)
class Recognition:
    value: Fraction | None
    near_miss: bool
    error: float | None
    x: float


def continued_fraction_convergents(x: float, max_terms: int = 64):
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    t = x
    for _ in range(max_terms):
        a = math.floor(t)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        yield Fraction(h1, k1)
        frac = t - a
        if frac < 1e-15:
            return
        t = 1 / frac


def recognize(x: float, max_den: int, tol: float) -> Recognition:
    if not math.isfinite(x):
        raise DomainError("cannot recognize a non-finite value")
    if max_den < 1:
        raise DomainError("max_den must be positive")
    scale = max(1.0, abs(x))
    best = None
    near = False
    for q in continued_fraction_convergents(x):
        if q.denominator > max_den:
            break
        err = abs(x - float(q)) / scale
        if err <= tol:
            return Recognition(q, False, err, x)
        if err <= 10 * tol:
            near = True
        if best is None or err < best[0]:
            best = (err, q)
    return Recognition(None, near, best[0] if best else None, x)


def recognize_rational(x: float, max_den: int, tol: float) -> Fraction | None:
    return recognize(x, max_den, tol).value


def baker_heuristic(u_log: float, v_log: float, max_den: int, tol: float = 1e-8,
                    name: str = "log u / log v") -> VerificationReport:
    """Expect no small rational relation between two unit logarithms."""
    if u_log <= 0 or v_log <= 0:
        raise DomainError("both logarithms must be positive")
    rep = VerificationReport(f"independence heuristic: {name}")
    r = recognize(u_log / v_log, max_den, tol)
    rep.flag(f"{name} has no rational approximation with denominator <= {max_den}",
             r.value is None, {"ratio": u_log / v_log, "found": r.value, "near_miss": r.near_miss},
             ["continued fraction convergents", f"tol {tol}"])
    return rep


def field_json(K: NumberField, units: Sequence[FieldElem] = ()) -> str:
    return json.dumps({"field": K.to_dict(), "units": [u.to_dict() for u in units]}, sort_keys=True)
