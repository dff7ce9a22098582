"""Finite-level model of the p-adic Weil representation.

A point of V_p is (a, b, nu) with nu in the completion F_p of the real quadratic
field, and lambda = [[a, nu], [nu', b]]. Functions are stored on a product of
four cyclic axes (a, b, n1, n2). Axis i has a window (k_i, m_i): support in
p^-k_i Z_p, invariance under p^m_i Z_p, so it carries p^(k_i + m_i) points,
index t standing for t / p^k_i.

Three coordinate systems for nu:

* ``diag``, p not dividing D: nu = n1 + n2 sqrt(D), Q = ab - n1^2 + D n2^2.
* ``split``, p split in F: nu -> (n1, n2) = (nu_P, nu_P'), lambda is a plain
  2x2 matrix [[a, n1], [n2, b]] and Q = ab - n1 n2.
* ``ramified``, D = p: the lattice Z_p^2 + d^-1 has nu = n2 + n1/sqrt(p) and
  Q = p(ab - Nm nu) = p ab + n1^2 - p n2^2.

Separated elements (`SchwartzElem`) carry sums of hyp(a, b) * norm(n1, n2).
Exact rational-valued elements on small windows (`ExactFunction`) are dense
integer arrays with a common Fraction scale.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .arith import DirichletCharacter, DomainError, gauss_sum, is_prime, kronecker
from .qfield import QuadFieldElement, UnsupportedConfiguration
from .report import VerificationReport

RANK_CAP = 64
MAX_POINTS = 2_000_000
# omega(w) phi(x) = gamma * integral phi(y) psi(FT_SIGN * (x, y)) dy
FT_SIGN = -1


class WindowOverflow(DomainError):
    """Raised when a requested window exceeds the configured size."""


def vp(n: int, p: int) -> int:
    if n == 0:
        return 10 ** 9
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_frac(t: Fraction, p: int) -> int:
    t = Fraction(t)
    return vp(t.numerator, p) - vp(t.denominator, p) if t else 10 ** 9


def padic_residue(t, p: int, prec: int) -> int | None:
    """Integer r with t = r mod p^prec in Z_p, or None if t is not p-integral."""
    t = Fraction(t)
    if vp(t.denominator, p):
        return None
    mod = p ** prec
    return t.numerator * pow(t.denominator, -1, mod) % mod


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


# --------------------------------------------------------------------------- models

@dataclass(frozen=True)
class FiniteModel:
    p: int
    kind: str                      # "generic" | "level" | "ramified"
    D: int
    windows: tuple                 # ((k, m),) * 4 for axes a, b, n1, n2
    coords: str = "diag"           # "diag" | "split" | "ramified"
    character: DirichletCharacter | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.p == 2 or not is_prime(self.p):
            raise UnsupportedConfiguration(f"p = {self.p} must be an odd prime")
        if self.kind not in ("generic", "level", "ramified"):
            raise DomainError(f"unknown model kind {self.kind!r}")
        if any(k < 0 or m < 0 for k, m in self.windows):
            raise DomainError("window exponents must be non-negative")
        s = self.sizes
        if max(s[0] * s[1], s[2] * s[3]) > MAX_POINTS:
            raise WindowOverflow(f"factor grids {s} exceed {MAX_POINTS} points")

    @classmethod
    def generic(cls, p: int, D: int, k: int = 1, m: int | None = None, split: bool = False):
        if D % p == 0:
            raise DomainError(f"p = {p} divides D = {D}; use a ramified model")
        if split and kronecker(D, p) != 1:
            raise DomainError(f"p = {p} is not split in Q(sqrt {D})")
        m = k if m is None else m
        return cls(p, "generic", D, ((k, m),) * 4, "split" if split else "diag")

    @classmethod
    def level(cls, p: int, D: int, character: DirichletCharacter, k: int = 1, m: int | None = None):
        if D % p == 0:
            raise DomainError(f"p = {p} divides D = {D}")
        if character.modulus != p or character.is_trivial():
            raise DomainError("the local character must be a nontrivial character mod p")
        m = k if m is None else m
        return cls(p, "level", D, ((k, m),) * 4, "diag", character)

    @classmethod
    def ramified(cls, p: int, k: int = 1, m: int = 0):
        if p % 4 != 1:
            raise UnsupportedConfiguration("the ramified model needs D = p = 1 mod 4")
        if k < 1:
            raise DomainError("ramified windows need k >= 1")
        w = (k, m)
        return cls(p, "ramified", p, (w, w, (k - 1, m), w), "ramified")

    # geometry
    @property
    def sizes(self) -> tuple:
        return tuple(self.p ** (k + m) for k, m in self.windows)

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    @property
    def cell_volume(self) -> Fraction:
        """Volume of one grid cell with vol(L) = 1."""
        return Fraction(1, self.p ** sum(m for _, m in self.windows))

    @property
    def form(self) -> dict:
        """Coefficients of Q: c_ab * ab + (c_1 n1^2 + c_2 n2^2 or c_12 n1 n2)."""
        if self.coords == "split":
            return {"ab": 1, "12": -1}
        if self.coords == "ramified":
            return {"ab": self.p, "1": 1, "2": -self.p}
        return {"ab": 1, "1": -1, "2": self.D}

    @property
    def pairs(self) -> list:
        """(axis, axis, coefficient) of the bilinear form (x, y) = Q(x+y) - Q(x) - Q(y)."""
        f = self.form
        if "12" in f:
            return [(0, 1, f["ab"]), (2, 3, f["12"])]
        return [(0, 1, f["ab"]), (2, 2, 2 * f["1"]), (3, 3, 2 * f["2"])]

    def chi_V(self, a: int) -> int:
        return legendre(a, self.p) if self.kind == "ramified" else 1

    def with_windows(self, windows) -> "FiniteModel":
        return replace(self, windows=tuple(tuple(w) for w in windows))

    def compatible(self, other: "FiniteModel") -> bool:
        return (self.p, self.kind, self.D, self.windows, self.coords) == \
            (other.p, other.kind, other.D, other.windows, other.coords)

    def grid(self) -> np.ndarray:
        """All index vectors, shape (size, 4), in C order."""
        return np.indices(self.sizes).reshape(4, -1).T

    def values(self, idx) -> tuple:
        return tuple(Fraction(int(t), self.p ** k) for t, (k, _) in zip(idx, self.windows))

    def index(self, coords) -> tuple | None:
        """Grid index of a rational point, or None if it lies outside the support."""
        out = []
        for t, (k, m) in zip(coords, self.windows):
            r = padic_residue(Fraction(t) * self.p ** k, self.p, k + m)
            if r is None:
                return None
            out.append(r)
        return tuple(out)

    def Q(self, coords) -> Fraction:
        a, b, n1, n2 = (Fraction(c) for c in coords)
        f = self.form
        if "12" in f:
            return f["ab"] * a * b + f["12"] * n1 * n2
        return f["ab"] * a * b + f["1"] * n1 * n1 + f["2"] * n2 * n2

    def descriptor(self) -> dict:
        d = {"p": self.p, "kind": self.kind, "D": self.D, "coords": self.coords,
             "windows": [list(w) for w in self.windows]}
        if self.character is not None:
            d["character"] = self.character.to_dict()
        return d

    # nu <-> coordinates
    def nu(self, n1, n2) -> QuadFieldElement:
        if self.coords == "split":
            raise DomainError("split coordinates do not carry a field element")
        if self.coords == "ramified":
            return QuadFieldElement(self.D, 2 * Fraction(n2), 2 * Fraction(n1) / self.D)
        return QuadFieldElement(self.D, 2 * Fraction(n1), 2 * Fraction(n2))

    def nu_coords(self, nu: QuadFieldElement) -> tuple:
        X, Y = Fraction(nu.x), Fraction(nu.y)
        if self.coords == "ramified":
            return self.D * Y / 2, X / 2
        return X / 2, Y / 2


def axis_indicator(p: int, window, center=Fraction(0), valuation: int = 0) -> np.ndarray:
    """1-D indicator of center + p^valuation Z_p on an axis window."""
    k, m = window
    if valuation > m or valuation < -k:
        raise WindowOverflow(f"p^{valuation} Z_p does not fit the window {window}")
    t = np.arange(p ** (k + m))
    c = padic_residue(Fraction(center) * p ** k, p, k + m)
    if c is None:
        return np.zeros(len(t))
    return ((t - c) % p ** (k + valuation) == 0).astype(float)


# --------------------------------------------------------------------------- elements

class SchwartzElem:
    """Separated function sum_r hyp[r](a, b) * norm[r](n1, n2)."""

    def __init__(self, model: FiniteModel, hyp, norm, cap: int = RANK_CAP):
        hyp = np.asarray(hyp, dtype=complex)
        norm = np.asarray(norm, dtype=complex)
        s = model.sizes
        if hyp.ndim == 2:
            hyp, norm = hyp[None], norm[None]
        if hyp.shape[1:] != s[:2] or norm.shape[1:] != s[2:] or len(hyp) != len(norm):
            raise DomainError(f"term shapes {hyp.shape}, {norm.shape} do not match window {s}")
        self.model, self.hyp, self.norm, self.cap = model, hyp, norm, cap
        if self.rank > cap:
            self._compact_inplace()
            if self.rank > cap:
                raise DomainError(f"separated rank {self.rank} exceeds the cap {cap}")

    @classmethod
    def zero(cls, model: FiniteModel) -> "SchwartzElem":
        s = model.sizes
        return cls(model, np.zeros((0,) + s[:2]), np.zeros((0,) + s[2:]))

    @classmethod
    def product(cls, model, fa, fb, f1, f2) -> "SchwartzElem":
        return cls(model, np.multiply.outer(fa, fb), np.multiply.outer(f1, f2))

    @classmethod
    def from_dense(cls, model: FiniteModel, values, tol: float = 1e-13) -> "SchwartzElem":
        s = model.sizes
        M = np.asarray(values, dtype=complex).reshape(s[0] * s[1], s[2] * s[3])
        U, S, Vh = np.linalg.svd(M, full_matrices=False)
        keep = S > tol * max(S[0] if len(S) else 0, 1e-300)
        r = int(keep.sum())
        return cls(model, (U[:, :r] * S[:r]).T.reshape((r,) + s[:2]), Vh[:r].reshape((r,) + s[2:]))

    @property
    def rank(self) -> int:
        return len(self.hyp)

    @property
    def terms(self) -> list:
        return list(zip(self.hyp, self.norm))

    def compact(self, tol: float = 1e-13) -> "SchwartzElem":
        out = SchwartzElem(self.model, self.hyp, self.norm, self.cap)
        out._compact_inplace(tol)
        return out

    def _compact_inplace(self, tol: float = 1e-13) -> None:
        r = self.rank
        if r == 0:
            return
        s = self.model.sizes
        H = self.hyp.reshape(r, -1).T
        N = self.norm.reshape(r, -1).T
        Q1, R1 = np.linalg.qr(H)
        Q2, R2 = np.linalg.qr(N)
        U, S, Vh = np.linalg.svd(R1 @ R2.T)
        keep = int((S > tol * max(S[0], 1e-300)).sum()) if S[0] > 0 else 0
        self.hyp = ((Q1 @ U[:, :keep]) * S[:keep]).T.reshape((keep,) + s[:2])
        self.norm = (Q2 @ Vh[:keep].T).T.reshape((keep,) + s[2:])

    def _check(self, other: "SchwartzElem") -> None:
        if not self.model.compatible(other.model):
            raise DomainError("incompatible finite models")

    def __add__(self, other: "SchwartzElem") -> "SchwartzElem":
        self._check(other)
        return SchwartzElem(self.model, np.concatenate([self.hyp, other.hyp]),
                            np.concatenate([self.norm, other.norm]), self.cap)

    def __sub__(self, other: "SchwartzElem") -> "SchwartzElem":
        return self + (-1) * other

    def __mul__(self, c) -> "SchwartzElem":
        return SchwartzElem(self.model, self.hyp * complex(c), self.norm, self.cap)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def to_dense(self) -> np.ndarray:
        return np.einsum("rab,rxy->abxy", self.hyp, self.norm)

    def evaluate_indices(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return np.einsum("rn,rn->n", self.hyp[:, idx[:, 0], idx[:, 1]], self.norm[:, idx[:, 2], idx[:, 3]])

    def __call__(self, *coords) -> complex:
        i = self.model.index(coords)
        if i is None:
            return 0j
        return complex(np.dot(self.hyp[:, i[0], i[1]], self.norm[:, i[2], i[3]]))

    def max_abs_diff(self, other) -> float:
        if not self.model.compatible(other.model):
            raise DomainError("incompatible finite models")
        return float(np.max(np.abs(self.to_dense() - _dense(other))))

    def to_dict(self) -> dict:
        def digest(arr):
            a = np.round(arr, 12) + 0.0
            return hashlib.sha256(np.ascontiguousarray(a).tobytes()).hexdigest()[:16]
        return {"model": self.model.descriptor(), "rank": self.rank,
                "terms": [{"hyp": digest(h), "norm": digest(n)} for h, n in self.terms]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _dense(phi) -> np.ndarray:
    if isinstance(phi, SchwartzElem):
        return phi.to_dense()
    return phi.to_float()


class ExactFunction:
    """Rational-valued function scale * counts on a (small) full grid."""

    def __init__(self, model: FiniteModel, counts, scale=Fraction(1)):
        counts = np.asarray(counts, dtype=np.int64).reshape(model.sizes)
        self.model, self.counts, self.scale = model, counts, Fraction(scale)
        self._normalize()

    def _normalize(self):
        g = int(np.gcd.reduce(self.counts.ravel())) if self.counts.size else 0
        if g > 1:
            self.counts //= g
            self.scale *= g
        if g == 0:
            self.scale = Fraction(1)

    def __eq__(self, other):
        if not isinstance(other, ExactFunction) or not self.model.compatible(other.model):
            return NotImplemented
        return bool(np.all((self - other).counts == 0))

    def _combine(self, other, sign):
        if not self.model.compatible(other.model):
            raise DomainError("incompatible finite models")
        den = math.lcm(self.scale.denominator, other.scale.denominator)
        s = Fraction(1, den)
        fa, fb = int(self.scale / s), int(other.scale / s)
        return ExactFunction(self.model, self.counts * fa + sign * other.counts * fb, s)

    def __add__(self, other):
        return self._combine(other, 1)

    def __sub__(self, other):
        return self._combine(other, -1)

    def __mul__(self, c):
        return ExactFunction(self.model, self.counts, self.scale * Fraction(c))

    __rmul__ = __mul__

    def __call__(self, *coords) -> Fraction:
        i = self.model.index(coords)
        return Fraction(0) if i is None else self.scale * int(self.counts[i])

    def evaluate_indices(self, idx) -> np.ndarray:
        idx = np.asarray(idx)
        return self.counts[idx[:, 0], idx[:, 1], idx[:, 2], idx[:, 3]] * float(self.scale)

    def value_at_indices(self, idx) -> Fraction:
        return self.scale * int(self.counts[tuple(idx)])

    def to_float(self) -> np.ndarray:
        return self.counts * float(self.scale)

    def to_schwartz(self) -> SchwartzElem:
        return SchwartzElem.from_dense(self.model, self.to_float())

    def support_size(self) -> int:
        return int(np.count_nonzero(self.counts))


def char_lattice(model: FiniteModel, exact: bool = True):
    """Char(L) on the window."""
    ind = [axis_indicator(model.p, w) for w in model.windows]
    if exact:
        return ExactFunction(model, np.einsum("a,b,x,y->abxy", *ind).astype(np.int64))
    return SchwartzElem.product(model, *ind)


def char_coset(model: FiniteModel, center, exact: bool = False):
    """Char(center + L) for a rational point center."""
    ind = [axis_indicator(model.p, w, c) for w, c in zip(model.windows, center)]
    if exact:
        return ExactFunction(model, np.einsum("a,b,x,y->abxy", *ind).astype(np.int64))
    return SchwartzElem.product(model, *ind)


def pairing(phi, psi):
    """sum over L-cosets of phi * psi (Haar measure with vol(L) = 1)."""
    if not phi.model.compatible(psi.model):
        raise DomainError("pairing needs identical windows")
    if isinstance(phi, ExactFunction) and isinstance(psi, ExactFunction):
        total = int(np.sum(phi.counts.astype(object) * psi.counts.astype(object)))
        return phi.scale * psi.scale * total * phi.model.cell_volume
    if isinstance(phi, ExactFunction):
        phi = phi.to_schwartz()
    if isinstance(psi, ExactFunction):
        psi = psi.to_schwartz()
    g1 = np.einsum("rab,sab->rs", phi.hyp, psi.hyp)
    g0 = np.einsum("rxy,sxy->rs", phi.norm, psi.norm)
    return complex(np.sum(g1 * g0)) * float(phi.model.cell_volume)


# --------------------------------------------------------------------------- widening

def widen(phi: SchwartzElem, windows) -> SchwartzElem:
    """Re-express phi on larger windows (more support, finer invariance)."""
    new = phi.model.with_windows(windows)
    p = new.p
    takes = []
    for (k, m), (k2, m2) in zip(phi.model.windows, new.windows):
        if k2 < k or m2 < m:
            raise DomainError("widen cannot shrink a window")
        t = np.arange(p ** (k2 + m2))
        # value t / p^k2 lies in p^-k Z_p iff p^(k2-k) | t
        inside = t % p ** (k2 - k) == 0
        src = (t // p ** (k2 - k)) % p ** (k + m)
        takes.append((inside, src))

    def lift(arr, ax0, ax1):
        (i0, s0), (i1, s1) = takes[ax0], takes[ax1]
        out = arr[:, s0][:, :, s1]
        return out * np.multiply.outer(i0, i1)[None]
    return SchwartzElem(new, lift(phi.hyp, 0, 1), lift(phi.norm, 2, 3), phi.cap)


# --------------------------------------------------------------------------- Weil action

def weil_n(b, phi: SchwartzElem, max_size: int = MAX_POINTS) -> SchwartzElem:
    """omega(n(b)) phi(x) = psi_p(b Q(x)) phi(x)."""
    b = Fraction(b)
    if b == 0:
        return phi
    model, p = phi.model, phi.model.p
    s = vp_frac(b, p)
    # the phase is well defined iff v(b c) + m_i >= k_j for each pair
    need = 0
    for i, j, c in model.pairs:
        v = s + vp(abs(c), p)
        need = max(need, model.windows[j][0] - model.windows[i][1] - v,
                   model.windows[i][0] - model.windows[j][1] - v)
    if need > 0:
        windows = [(k, m + need) for k, m in model.windows]
        sz = [p ** (k + m) for k, m in windows]
        if max(sz[0] * sz[1], sz[2] * sz[3]) > max_size:
            raise WindowOverflow("phase of n(b) needs a window beyond the size limit")
        phi = widen(phi, windows)
        model = phi.model
    f = model.form
    (ka, _), (kb, _), (k1, _), (k2, _) = model.windows
    na, nb, n1, n2 = model.sizes
    ta, tb, t1, t2 = (np.arange(n, dtype=object) for n in model.sizes)

    def phase(coef, u, v, ku, kv):
        # psi(b coef u v / p^(ku+kv)) on index grids u, v
        cf = b * coef
        den = p ** (ku + kv + max(0, -vp_frac(cf, p)))
        num = padic_residue(cf * den / p ** (ku + kv), p, ku + kv + 64)
        grid = (num * np.multiply.outer(u, v)) % den
        return np.exp(-2j * np.pi * grid.astype(float) / den)

    ph = phase(f["ab"], ta, tb, ka, kb)
    if "12" in f:
        pn = phase(f["12"], t1, t2, k1, k2)
    else:
        p1 = phase(f["1"], t1, t1, k1, k1).diagonal()
        p2 = phase(f["2"], t2, t2, k2, k2).diagonal()
        pn = np.multiply.outer(p1, p2)
    return SchwartzElem(model, phi.hyp * ph[None], phi.norm * pn[None], phi.cap)


def _ft_matrix(p, out_w, in_w, coef, sign):
    """Matrix of psi(sign * coef * x_out * y_in) times the cell measure of the input axis."""
    v = vp(abs(coef), p)
    ko, mo = out_w
    ki, mi = in_w
    if (ko, mo) != (mi + v, ki - v):
        raise WindowOverflow(f"window {out_w} is not dual to {in_w} under coefficient {coef}")
    den = p ** (ko + ki)
    unit = coef // p ** v
    i = np.arange(p ** (ko + mo), dtype=object)
    j = np.arange(p ** (ki + mi), dtype=object)
    grid = (sign * unit * p ** v * np.multiply.outer(i, j)) % den
    mat = np.exp(-2j * np.pi * grid.astype(float) / den)
    return mat * p ** (-mi - v / 2)


def dual_windows(model: FiniteModel) -> tuple:
    w = list(model.windows)
    out = list(w)
    for i, j, c in model.pairs:
        v = vp(abs(c), model.p)
        if i == j:
            out[i] = (w[i][1] + v, w[i][0] - v)
        else:
            out[i] = (w[j][1] + v, w[j][0] - v)
            out[j] = (w[i][1] + v, w[i][0] - v)
    return tuple(out)


def weil_w(phi: SchwartzElem, gamma: complex = 1.0, inverse: bool = False) -> SchwartzElem:
    """omega(w) phi(x) = gamma * integral phi(y) psi(-(x, y)) dy, self-dual measure."""
    model = phi.model
    out = model.with_windows(dual_windows(model))
    if any(k < 0 or m < 0 for k, m in out.windows):
        raise WindowOverflow("window is not adequate for the Fourier transform")
    sign = -FT_SIGN if inverse else FT_SIGN
    g = np.conj(gamma) if inverse else gamma
    p = model.p
    hyp, norm = phi.hyp, phi.norm
    for i, j, c in model.pairs:
        if i == j:
            M = _ft_matrix(p, out.windows[i], model.windows[i], c, sign)
            if i == 2:
                norm = M @ norm
            else:
                norm = norm @ M.T
        else:
            Mij = _ft_matrix(p, out.windows[i], model.windows[j], c, sign)
            Mji = _ft_matrix(p, out.windows[j], model.windows[i], c, sign)
            arr = hyp if i == 0 else norm
            # out[i, l] = sum_{k, j} Mij[i, j] Mji[l, k] arr[k, j]
            arr = Mij @ arr.transpose(0, 2, 1) @ Mji.T
            if i == 0:
                hyp = arr
            else:
                norm = arr
    return SchwartzElem(out, hyp * g, norm, phi.cap)


def weil_m(a: int, phi: SchwartzElem) -> SchwartzElem:
    """omega(m(a)) phi(x) = chi_V(a) |a|^2 phi(a x) for a unit a."""
    model, p = phi.model, phi.model.p
    if a % p == 0:
        raise DomainError("weil_m supports p-adic units only")
    perm = [(a * np.arange(n)) % n for n in model.sizes]
    hyp = phi.hyp[:, perm[0]][:, :, perm[1]]
    norm = phi.norm[:, perm[2]][:, :, perm[3]]
    return SchwartzElem(model, hyp * model.chi_V(a), norm, phi.cap)


# --------------------------------------------------------------------------- L(h)

def _qmat_mul(A, B):
    return [[A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]],
            [A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]]]


def _as_elem(D, t):
    return t if isinstance(t, QuadFieldElement) else QuadFieldElement(D, 2 * Fraction(t), 0)


def _conj_t(h):
    return [[h[0][0].conj(), h[1][0].conj()], [h[0][1].conj(), h[1][1].conj()]]


def _frac_mat_mul(A, B):
    return [[sum(Fraction(A[i][k]) * Fraction(B[k][j]) for k in range(2)) for j in range(2)]
            for i in range(2)]


def act(model: FiniteModel, h, coords, scale=1) -> tuple:
    """Coordinates of scale^-1 * h lambda h'^t (split: g1 lambda g2^t)."""
    a, b, n1, n2 = (Fraction(c) for c in coords)
    s = Fraction(scale)
    if model.coords == "split":
        g1, g2 = h
        lam = [[a, n1], [n2, b]]
        g2t = [[g2[0][0], g2[1][0]], [g2[0][1], g2[1][1]]]
        r = _frac_mat_mul(_frac_mat_mul(g1, lam), g2t)
        return r[0][0] / s, r[1][1] / s, r[0][1] / s, r[1][0] / s
    D = model.D
    H = [[_as_elem(D, t) for t in row] for row in h]
    nu = model.nu(n1, n2)
    lam = [[_as_elem(D, a), nu], [nu.conj(), _as_elem(D, b)]]
    r = _qmat_mul(_qmat_mul(H, lam), _conj_t(H))
    for t in (r[0][0], r[1][1]):
        if t.y != 0:
            raise DomainError("h does not preserve the space of hermitian matrices")
    if r[1][0] != r[0][1].conj():
        raise DomainError("h does not preserve the space of hermitian matrices")
    x1, x2 = model.nu_coords(r[0][1])
    return (Fraction(r[0][0].x) / 2 / s, Fraction(r[1][1].x) / 2 / s, x1 / s, x2 / s)


def similitude(model: FiniteModel, h, scale=1) -> Fraction:
    s = Fraction(scale)
    if model.coords == "split":
        g1, g2 = h
        det1 = Fraction(g1[0][0]) * g1[1][1] - Fraction(g1[0][1]) * g1[1][0]
        det2 = Fraction(g2[0][0]) * g2[1][1] - Fraction(g2[0][1]) * g2[1][0]
        return det1 * det2 / s ** 2
    D = model.D
    H = [[_as_elem(D, t) for t in row] for row in h]
    return (H[0][0] * H[1][1] - H[0][1] * H[1][0]).norm() / s ** 2


def inverse_element(model: FiniteModel, h):
    if model.coords == "split":
        def inv(g):
            det = Fraction(g[0][0]) * g[1][1] - Fraction(g[0][1]) * g[1][0]
            if det == 0:
                raise DomainError("h is not invertible")
            return [[g[1][1] / det, -Fraction(g[0][1]) / det], [-Fraction(g[1][0]) / det, g[0][0] / det]]
        return inv(h[0]), inv(h[1])
    D = model.D
    H = [[_as_elem(D, t) for t in row] for row in h]
    det = H[0][0] * H[1][1] - H[0][1] * H[1][0]
    if det == 0:
        raise DomainError("h is not invertible")
    di = det.inverse()
    return [[H[1][1] * di, -H[0][1] * di], [-H[1][0] * di, H[0][0] * di]]


def action_matrix(model: FiniteModel, h, scale=1) -> list:
    """4x4 rational matrix of x -> h.x in (a, b, n1, n2) coordinates (columns = images)."""
    cols = [act(model, h, e, scale) for e in np.eye(4, dtype=int).tolist()]
    return [[cols[j][i] for j in range(4)] for i in range(4)]


def _lattice_maps(T, src, dst, p) -> bool:
    """T(+ p^src_j Z_p) within (+ p^dst_i Z_p)."""
    return all(vp_frac(T[i][j], p) + src[j] >= dst[i] for i in range(4) for j in range(4) if T[i][j])


def _map_indices(T, src: FiniteModel, dst: FiniteModel, idx) -> tuple:
    """Indices of T x on dst for grid indices idx of src; mask of points inside the dst support."""
    p = src.p
    idx = np.asarray(idx, dtype=np.int64)
    out = np.zeros(idx.shape, dtype=np.int64)
    valid = np.ones(len(idx), dtype=bool)
    for j in range(4):
        kj, mj = dst.windows[j]
        coefs = [T[j][i] * Fraction(p) ** (kj - src.windows[i][0]) for i in range(4)]
        e = max([0] + [-vp_frac(c, p) for c in coefs if c])
        prec = e + kj + mj
        mod = p ** prec
        C = [padic_residue(c * p ** e, p, prec) for c in coefs]
        if mod * max(src.sizes) * 4 < 2 ** 62:
            S = sum((C[i] * idx[:, i]) % mod for i in range(4)) % mod
        else:
            S = (sum(C[i] * idx[:, i].astype(object) for i in range(4)) % mod).astype(np.int64)
        valid &= S % p ** e == 0
        out[:, j] = (S // p ** e) % p ** (kj + mj)
    return valid, out


def scaling_action(h, phi, scale=1, target: FiniteModel | None = None):
    """(L(h) phi)(x) = |nu(h)|^-1 phi(h^-1 x) as an exact substitution on the window."""
    src = phi.model
    out = target or src
    p = src.p
    hi = inverse_element(src, h)
    T = action_matrix(src, h, scale)
    Ti = action_matrix(src, hi, Fraction(1) / Fraction(scale))
    if not _lattice_maps(Ti, [m for _, m in out.windows], [m for _, m in src.windows], p):
        raise DomainError("h^-1 does not carry the invariance lattice into the source window")
    if isinstance(phi, ExactFunction):
        nz = np.argwhere(phi.counts != 0)
    else:
        if max(src.size, out.size) > MAX_POINTS:
            raise WindowOverflow("substitution on separated elements needs a dense window")
        nz = np.argwhere(np.abs(phi.to_dense()) > 1e-14)
    if len(nz) and not _map_indices(T, src, out, nz)[0].all():
        raise DomainError("h carries the support of phi outside the target window")
    grid = out.grid()
    valid, J = _map_indices(Ti, out, src, grid)
    nu = similitude(src, h, scale)
    factor = Fraction(p) ** vp_frac(nu, p)  # |nu|^-1 = p^v(nu)
    if isinstance(phi, ExactFunction):
        counts = np.zeros(len(grid), dtype=np.int64)
        counts[valid] = phi.counts[tuple(J[valid].T)]
        return ExactFunction(out, counts, phi.scale * factor)
    vals = np.zeros(len(grid), dtype=complex)
    vals[valid] = phi.evaluate_indices(J[valid])
    return SchwartzElem.from_dense(out, vals * float(factor))


# --------------------------------------------------------------------------- phi_p

def _gauss(chi: DirichletCharacter) -> complex:
    return gauss_sum(chi).to_complex()


def level_phi(model: FiniteModel) -> SchwartzElem:
    """(1/g) sum_j conj chi(j) (Char(j/p + Z_p) - p^-1 Char(p^-1 Z_p)) (a) x Char(p Z_p)(b) x Char(O_p)."""
    p, chi = model.p, model.character
    cbar = chi.conjugate()
    g = _gauss(cbar)
    wa = model.windows[0]
    fa = sum(cbar.value(j) * (axis_indicator(p, wa, Fraction(j, p)) - axis_indicator(p, wa, 0, -1) / p)
             for j in range(1, p)) / g
    fb = axis_indicator(p, model.windows[1], 0, 1)
    f1, f2 = (axis_indicator(p, w) for w in model.windows[2:])
    return SchwartzElem.product(model, fa, fb, f1, f2)


def _sym_action(h, mu, p):
    """det(h)^-1 h mu h^t on symmetric matrices over F_p (mu = (a, b, nu))."""
    a, b, n = mu
    M = [[a, n], [n, b]]
    det = (h[0][0] * h[1][1] - h[0][1] * h[1][0]) % p
    di = pow(det, -1, p)
    R = [[sum(h[i][k] * M[k][l] * h[j][l] for k in range(2) for l in range(2)) * di % p
          for j in range(2)] for i in range(2)]
    return det, (R[0][0], R[1][1], R[0][1])


def _coset_sum(model: FiniteModel, coeffs: dict) -> SchwartzElem:
    """sum_mu c_mu Char(mu/p + L), mu = (a, b, nu) over F_p, nu stored on the n2 axis."""
    p = model.p
    out = SchwartzElem.zero(model)
    for (a, b, n), c in sorted(coeffs.items()):
        if abs(c) > 1e-15:
            out = out + c * char_coset(model, (Fraction(a, p), Fraction(b, p), 0, Fraction(n, p)))
    return out.compact()


def ramified_phi_forms(model: FiniteModel) -> tuple:
    """The GL2(F_p)-average and the (unscaled) isotropic-coset sum."""
    p = model.p
    gF = math.sqrt(p)  # Gauss sum of the Legendre symbol, p = 1 mod 4
    avg: dict = {}
    for e in itertools.product(range(p), repeat=4):
        h = [[e[0], e[1]], [e[2], e[3]]]
        if (e[0] * e[3] - e[1] * e[2]) % p == 0:
            continue
        det, mu = _sym_action(h, (1, 0, 0), p)
        avg[mu] = avg.get(mu, 0) + legendre(det, p) / (gF * p * (p - 1))
    cos: dict = {}
    for d in range(1, p):
        pts = [(d, 0, 0)] + [(d * j * j % p, d, d * j % p) for j in range(p)]
        for mu in pts:
            cos[mu] = cos.get(mu, 0) + legendre(d, p)
    return _coset_sum(model, avg), _coset_sum(model, cos)


def build_phi_p(model: FiniteModel) -> SchwartzElem:
    """The local Schwartz function of the model's kind."""
    if model.kind == "generic":
        return char_lattice(model, exact=False)
    if model.kind == "level":
        chi = model.character
        if chi is None or chi.modulus != model.p or chi.is_trivial():
            raise DomainError("LevelN needs a nontrivial character mod p")
        return level_phi(model)
    avg, cos = ramified_phi_forms(model)
    if avg.max_abs_diff(cos * (1 / math.sqrt(model.p))) > 1e-12:
        raise RuntimeError("GL2 average and coset expansion disagree")
    return avg


def compare_ramified_forms(model: FiniteModel) -> VerificationReport:
    rep = VerificationReport(f"ramified phi_p forms p={model.p}")
    avg, cos = ramified_phi_forms(model)
    gF = math.sqrt(model.p)
    dense_a, dense_c = avg.to_dense(), cos.to_dense()
    k = np.argmax(np.abs(dense_c))
    ratio = complex(dense_a.ravel()[k] / dense_c.ravel()[k])
    rep.close("GL2 average = (1/g) * isotropic-coset sum, pointwise", float(np.max(np.abs(dense_a - dense_c / gF))),
              0.0, 1e-12, absolute=True)
    rep.close("scale between the two forms", ratio.real, 1 / gF, 1e-12)
    rep.exact("support size", int(np.count_nonzero(np.abs(dense_a) > 1e-12)), (model.p - 1) * (model.p + 1)
              * (model.size // (model.sizes[0] * model.sizes[1] * model.sizes[3])))
    rep.constants["coset expansion scale"] = ratio.real
    return rep


# --------------------------------------------------------------------------- partial Fourier transform

@dataclass
class PartialFT:
    """Separated function sum_r g[r](eta1, eta2) * norm[r](n1, n2) on eta windows."""
    model: FiniteModel
    eta_windows: tuple
    g: np.ndarray
    norm: np.ndarray
    weight: float

    def index(self, eta1, eta2, n1, n2):
        p = self.model.p
        out = []
        for t, (k, m) in zip((eta1, eta2), self.eta_windows):
            r = padic_residue(Fraction(t) * p ** k, p, k + m)
            if r is None:
                return None
            out.append(r)
        nu = self.model.index((0, 0, n1, n2))
        return None if nu is None else (out[0], out[1], nu[2], nu[3])

    def __call__(self, eta1, eta2, n1=0, n2=0) -> complex:
        i = self.index(eta1, eta2, n1, n2)
        if i is None:
            return 0j
        return complex(np.dot(self.g[:, i[0], i[1]], self.norm[:, i[2], i[3]]))

    def to_dense(self) -> np.ndarray:
        return np.einsum("rab,rxy->abxy", self.g, self.norm)

    def points(self):
        """All grid points as rational (eta1, eta2, n1, n2)."""
        p = self.model.p
        axes = [[Fraction(t, p ** k) for t in range(p ** (k + m))] for k, m in self.eta_windows]
        axes += [[Fraction(t, p ** k) for t in range(p ** (k + m))] for k, m in self.model.windows[2:]]
        return itertools.product(*axes)


def partial_ft(phi: SchwartzElem, weight: float = 1.0) -> PartialFT:
    """integral phi(a l + eta1 l' + (0,0,nu)) psi_p(a eta2) da, l = (1,0,0), l' = (0,1/D,0).

    ``weight`` is the measure of Z_p in the a-variable.
    """
    model, p = phi.model, phi.model.p
    (ka, ma), (kb, mb) = model.windows[:2]
    v = vp(model.D, p)
    unit = model.D // p ** v
    w1 = (kb - v, mb + v)       # eta1 = D b
    w2 = (ma, ka)               # dual to a under a * eta2
    if w1[0] < 0:
        raise WindowOverflow("b-window too small for eta1 = D b")
    nb = p ** (kb + mb)
    # eta1 index t <-> b index t / unit
    bidx = (np.arange(nb) * pow(unit, -1, nb)) % nb
    den = p ** (ka + ma)
    grid = np.multiply.outer(np.arange(p ** (w2[0] + w2[1])), np.arange(p ** (ka + ma))) % den
    M = np.exp(-2j * np.pi * grid / den) * (weight * p ** (-ma))
    g = np.einsum("ja,rab->rbj", M, phi.hyp[:, :, bidx])
    return PartialFT(model, (w1, w2), g, phi.norm.copy(), weight)


def inverse_partial_ft(F: PartialFT) -> SchwartzElem:
    model, p = F.model, F.model.p
    (ka, ma), (kb, mb) = model.windows[:2]
    v = vp(model.D, p)
    unit = model.D // p ** v
    nb = p ** (kb + mb)
    bidx = (np.arange(nb) * unit) % nb    # b index -> eta1 index
    k2, m2 = F.eta_windows[1]
    den = p ** (ka + ma)
    grid = np.multiply.outer(np.arange(p ** (ka + ma)), np.arange(p ** (k2 + m2))) % den
    M = np.exp(2j * np.pi * grid / den) * (p ** (-m2) / F.weight)
    hyp = np.einsum("aj,rbj->rab", M, F.g[:, bidx, :])
    return SchwartzElem(model, hyp, F.norm, RANK_CAP)


def pft_closed_form(model: FiniteModel, eta1, eta2, n1, n2) -> complex:
    """The expected partial Fourier transform of phi_p, pointwise."""
    p = model.p
    eta1, eta2 = Fraction(eta1), Fraction(eta2)
    integral = lambda t: vp_frac(t, p) >= 0
    if not (integral(n1) and integral(n2)) and model.kind != "ramified":
        return 0j
    if model.kind == "generic":
        return complex(integral(eta1) and integral(eta2))
    unit2 = integral(eta2) and vp_frac(eta2, p) == 0
    if model.kind == "level":
        if not (vp_frac(eta1, p) >= 1 and unit2):
            return 0j
        return model.character.value(-padic_residue(eta2, p, 1) % p)
    # ramified: nu in d^-1 means n1, n2 integral; nu in d^-1 + dj/p shifts n2
    if not (integral(n1) and integral(eta1) and integral(eta2)):
        return 0j
    e2 = padic_residue(eta2, p, 1)
    e1 = padic_residue(eta1, p, 1)
    out = 0j
    if e1 == 0 and unit2 and integral(n2):
        out += legendre(-e2, p)
    if e1 != 0:
        d = e1
        for j in range(p):
            if integral(Fraction(n2) - Fraction(d * j, p)):
                out += legendre(d, p) * np.exp(2j * np.pi * (-d * j * j * e2 % p) / p) / math.sqrt(p)
    return out


def verify_partial_ft(model: FiniteModel, seed: int = 0, tol: float = 1e-9) -> VerificationReport:
    """Closed form, homogeneity and (p | N) support exclusion for partial_ft(phi_p)."""
    rep = VerificationReport(f"partial FT {model.kind} p={model.p}")
    p = model.p
    phi = build_phi_p(model)
    F = partial_ft(phi)
    dense = F.to_dense()
    worst = 0.0
    if model.kind == "ramified":
        for pt in F.points():
            worst = max(worst, abs(dense[F.index(*pt)] - pft_closed_form(model, *pt)))
    else:
        # eta-part times Char(O_p) in nu
        axes = [[Fraction(t, p ** k) for t in range(p ** (k + m))] for k, m in F.eta_windows]
        E = np.array([[pft_closed_form(model, e1, e2, 0, 0) for e2 in axes[1]] for e1 in axes[0]])
        N = np.einsum("x,y->xy", *(axis_indicator(p, w) for w in model.windows[2:]))
        worst = float(np.max(np.abs(dense - np.multiply.outer(E, N))))
    rep.close("partial_ft(phi_p) = closed form on the whole grid", worst, 0.0, tol, absolute=True)
    # unit homogeneity F(eta r, nu) = chi_0(r) chi_F(r) F(eta, nu)
    chi0 = (lambda r: model.character.value(r)) if model.kind == "level" else (lambda r: 1)
    chiF = (lambda r: legendre(r, p)) if model.kind == "ramified" else (lambda r: 1)
    rng = np.random.default_rng(seed)
    pts = list(F.points())
    worst_h = 0.0
    for r in range(1, p):
        for t in rng.choice(len(pts), size=min(64, len(pts)), replace=False):
            e1, e2, n1, n2 = pts[t]
            worst_h = max(worst_h, abs(F(e1 * r, e2 * r, n1, n2) - chi0(r) * chiF(r) * F(e1, e2, n1, n2)))
    rep.close("F(eta r, nu) = chi0(r) chiF(r) F(eta, nu)", worst_h, 0.0, tol, absolute=True)
    if model.kind == "level":
        line = max(abs(F(e1, 0, n1, n2)) for e1, e2, n1, n2 in pts if vp_frac(e1, p) >= 0)
        rep.close("(Z_p, 0) misses the support", line, 0.0, 1e-14, absolute=True)
    back = inverse_partial_ft(F)
    rep.close("inverse transform recovers phi_p", back.max_abs_diff(phi), 0.0, 1e-12, absolute=True)
    rep.constants["measure weight of Z_p"] = F.weight
    return rep


# --------------------------------------------------------------------------- Hecke averages

def shell(model: FiniteModel, s: int, r: int | None, t: int) -> ExactFunction:
    """Char(p^-s {lambda in L - pL : det(lambda) = r mod p^t}); r = None drops the det condition."""
    p = model.p
    grid = model.grid()
    lam = np.zeros(grid.shape, dtype=np.int64)
    inside = np.ones(len(grid), dtype=bool)
    for i, (k, _) in enumerate(model.windows):
        step = p ** (k - s)
        inside &= grid[:, i] % step == 0
        lam[:, i] = grid[:, i] // step
    prim = np.any(lam % p != 0, axis=1)
    keep = inside & prim
    if r is not None:
        f = model.form
        det = f["ab"] * lam[:, 0] * lam[:, 1]
        det = det + (f["12"] * lam[:, 2] * lam[:, 3] if "12" in f
                     else f["1"] * lam[:, 2] ** 2 + f["2"] * lam[:, 3] ** 2)
        keep &= (det - r) % p ** t == 0
    return ExactFunction(model, keep.astype(np.int64))


def dilated_lattice(model: FiniteModel, s: int) -> ExactFunction:
    """Char(p^-s L)."""
    p = model.p
    ind = [axis_indicator(p, w, 0, -s) for w in model.windows]
    return ExactFunction(model, np.einsum("a,b,x,y->abxy", *ind).astype(np.int64))


def hecke_coset_reps(model: FiniteModel) -> list:
    """B = {n^-(j)} + {w}; j over O/P (split: Z/p on the P-factor, inert: O/p)."""
    p = model.p
    one = [[1, 0], [0, 1]]
    w = [[0, -1], [1, 0]]
    if model.coords == "split":
        return [([[1, 0], [j, 1]], one) for j in range(p)] + [(w, one)]
    D = model.D
    js = [QuadFieldElement(D, 2 * j1, 2 * j2) for j1 in range(p) for j2 in range(p)]
    return [[[1, 0], [j, 1]] for j in js] + [w]


def tilde_phi(model: FiniteModel) -> ExactFunction:
    """L(pi^-1 d(pi)) Char(L) with d(x) = diag(1, x)."""
    p = model.p
    one = [[1, 0], [0, 1]]
    h = ([[Fraction(1, p), 0], [0, 1]], one) if model.coords == "split" else [[Fraction(1, p), 0], [0, 1]]
    return scaling_action(h, char_lattice(model))


def _box(model: FiniteModel) -> ExactFunction:
    """The displayed support of tilde phi, built by indicators."""
    p = model.p
    if model.coords == "split":
        # rows (a, n1) in p^-1 Z_p, (n2, b) in Z_p; scale 1/p
        val = (-1, 0, -1, 0)
        scale = Fraction(1, p)
    else:
        # a in p^-2 Z_p, nu in p^-1 O_p, b in Z_p; scale 1/p^2
        val = (-2, 0, -1, -1)
        scale = Fraction(1, p * p)
    ind = [axis_indicator(p, w, 0, v) for w, v in zip(model.windows, val)]
    return ExactFunction(model, np.einsum("a,b,x,y->abxy", *ind).astype(np.int64), scale)


def _frac_point_value_tilde(model, x) -> Fraction:
    """tilde phi at a rational point, from its support description."""
    p = model.p
    a, b, n1, n2 = x
    ok = lambda t, v: vp_frac(t, p) >= v
    if model.coords == "split":
        return Fraction(1, p) if ok(a, -1) and ok(n1, -1) and ok(n2, 0) and ok(b, 0) else Fraction(0)
    return Fraction(1, p * p) if ok(a, -2) and ok(n1, -1) and ok(n2, -1) and ok(b, 0) else Fraction(0)


def _frac_rhs(model, x, q) -> Fraction:
    """Right-hand side, evaluated from the definitions at a rational point."""
    p = model.p
    det = model.Q(x)
    val = min(vp_frac(t, p) for t in x)   # x in p^val L - p^(val+1) L

    def phi_r(s, r, t):
        if val != -s:
            return 0
        return int(vp_frac(det * p ** (2 * s) - r, p) >= t)
    phi = int(val >= 0)
    if model.coords == "split":
        return Fraction(phi_r(1, 0, 1) + (p + 1) * phi, p)
    phi_prime = int(val >= -1)
    return Fraction(phi_r(2, 0, 2) + (q - p) * phi + (p + 1) * phi_prime - p * phi_r(1, 0, 1), q)


def hecke_average(case: str = "split", p: int = 3, D: int | None = None, samples: int = 128,
                  seed: int = 0, tol: float = 1e-9) -> VerificationReport:
    """sum over B of L(beta^-1) tilde phi against the stated combination of shells."""
    case = case.lower()
    if case == "split":
        D = 13 if D is None else D
        model = FiniteModel.generic(p, D, k=1, m=0, split=True)
        q = p
    elif case == "inert":
        D = 5 if D is None else D
        if kronecker(D, p) != -1:
            raise DomainError(f"p = {p} is not inert in Q(sqrt {D})")
        model = FiniteModel.generic(p, D, k=2, m=0)
        q = p * p
    else:
        raise DomainError(f"unknown case {case!r}")
    rep = VerificationReport(f"Hecke average {case} D={D} p={p}")
    B = hecke_coset_reps(model)
    rep.exact("|B| = q + 1", len(B), q + 1)
    phi = char_lattice(model)
    tphi = tilde_phi(model)
    rep.exact("tilde phi = scaled characteristic function of the box", tphi == _box(model), True)
    lhs = None
    for beta in B:
        term = scaling_action(inverse_element(model, beta), tphi)
        lhs = term if lhs is None else lhs + term
    # orthogonal basis of disjoint shells
    if case == "split":
        basis = {"phi": phi}
        basis.update({f"phi_{r}": shell(model, 1, r, 1) for r in range(p)})
        expected = {"phi": Fraction(p + 1, p), "phi_0": Fraction(1, p)}
        rhs = (shell(model, 1, 0, 1) + (p + 1) * phi) * Fraction(1, p)
    else:
        basis = {"phi": phi}
        basis.update({f"phi_{p},{r}": shell(model, 1, r, 1) for r in range(p)})
        basis.update({f"phi_{r}": shell(model, 2, r, 2) for r in range(q)})
        expected = {"phi": Fraction(q + 1, q), f"phi_{p},0": Fraction(1, q), "phi_0": Fraction(1, q)}
        expected.update({f"phi_{p},{r}": Fraction(p + 1, q) for r in range(1, p)})
        phi_prime = dilated_lattice(model, 1)
        rhs = (shell(model, 2, 0, 2) + (q - p) * phi + (p + 1) * phi_prime
               - p * shell(model, 1, 0, 1)) * Fraction(1, q)
    coeffs = {name: pairing(lhs, b) / pairing(b, b) for name, b in basis.items()}
    recon = None
    for name, b in basis.items():
        recon = coeffs[name] * b if recon is None else recon + coeffs[name] * b
    rep.exact("lhs lies in the span of the shells", (lhs - recon).support_size(), 0)
    worst_c = max(abs(float(coeffs[n] - expected.get(n, 0))) for n in basis)
    rep.close("projection coefficients", worst_c, 0.0, tol, absolute=True)
    rep.exact("lhs = rhs on the whole quotient", lhs == rhs, True)
    # independent pointwise evaluation at seeded rational points, some outside the window
    rng = np.random.default_rng(seed)
    k = model.windows[0][0] + 1
    worst = 0.0
    for _ in range(samples):
        x = tuple(Fraction(int(t), p ** k) for t in rng.integers(-p ** (k + 3), p ** (k + 3), size=4))
        val = sum(_frac_point_value_tilde(model, act(model, beta, x)) for beta in B)
        ref = _frac_rhs(model, x, q)
        worst = max(worst, abs(float(val - ref)), abs(float(lhs(*x) - ref)))
    rep.close(f"pointwise at {samples} sample points", worst, 0.0, tol, absolute=True)
    rep.constants["coefficients"] = {n: coeffs[n] for n in basis}
    rep.constants["<tilde phi, phi>"] = pairing(tphi, phi)
    rep.constants["<tilde phi, phi_0>"] = pairing(tphi, basis["phi_0"])
    return rep


def pairing_constants(p: int, D: int) -> dict:
    """<tilde phi, phi>, <tilde phi, phi_r> and the shell Gram matrix in the split model."""
    model = FiniteModel.generic(p, D, k=1, m=0, split=True)
    tphi, phi = tilde_phi(model), char_lattice(model)
    shells = [shell(model, 1, r, 1) for r in range(p)]
    return {
        "<tilde phi, phi>": pairing(tphi, phi),
        "<tilde phi, phi_r>": [pairing(tphi, s) for s in shells],
        "gram": [[pairing(a, b) for b in shells] for a in shells],
    }


# --------------------------------------------------------------------------- relation checks

def negate(phi: SchwartzElem) -> SchwartzElem:
    """x -> -x substitution."""
    perm = [(-np.arange(n)) % n for n in phi.model.sizes]
    return SchwartzElem(phi.model, phi.hyp[:, perm[0]][:, :, perm[1]],
                        phi.norm[:, perm[2]][:, :, perm[3]], phi.cap)


def random_elem(model: FiniteModel, rank: int = 2, seed: int = 0) -> SchwartzElem:
    rng = np.random.default_rng(seed)
    s = model.sizes
    hyp = rng.normal(size=(rank,) + s[:2]) + 1j * rng.normal(size=(rank,) + s[:2])
    norm = rng.normal(size=(rank,) + s[2:]) + 1j * rng.normal(size=(rank,) + s[2:])
    return SchwartzElem(model, hyp, norm)


def l2_norm(phi: SchwartzElem) -> float:
    """Euclidean norm of the value array, computed from the separated terms."""
    if phi.rank == 0:
        return 0.0
    r = phi.rank
    R1 = np.linalg.qr(phi.hyp.reshape(r, -1).T, mode="r")
    R2 = np.linalg.qr(phi.norm.reshape(r, -1).T, mode="r")
    return float(np.linalg.norm(R1 @ R2.T))


def _rel(x: SchwartzElem, y: SchwartzElem) -> float:
    """Relative L2 distance."""
    if not x.model.compatible(y.model):
        raise DomainError("incompatible finite models")
    return l2_norm(x - y) / max(l2_norm(y), 1e-300)


def verify_metaplectic(model: FiniteModel, seed: int = 0, tol: float = 1e-12) -> VerificationReport:
    """w^4 = 1, w^2 = omega(-1), (w n(1))^3 = omega(-1) and w n(b) w^-1 = n(-1/b) m(-1/b) w n(-1/b)."""
    if dual_windows(model) != model.windows:
        raise WindowOverflow("the model window is not stable under the Fourier transform")
    rep = VerificationReport(f"metaplectic relations {model.kind} p={model.p}")
    probes = [random_elem(model, 2, seed)]
    # a few delta functions as basis probes
    for t in (0, 1, model.sizes[0] - 1):
        e = np.zeros(model.sizes[:2])
        e[t % model.sizes[0], (3 * t + 1) % model.sizes[1]] = 1
        f = np.zeros(model.sizes[2:])
        f[(2 * t) % model.sizes[2], t % model.sizes[3]] = 1
        probes.append(SchwartzElem(model, e, f))
    c = model.chi_V(-1)
    err = {"w^4 = 1": 0.0, "w^2 = chi_V(-1) [x -> -x]": 0.0, "(w n(1))^3 = omega(-1)": 0.0,
           "w w^-1 = 1": 0.0, "w n(b) w^-1 = n(-1/b) m(-1/b) w n(-1/b)": 0.0}
    for phi in probes:
        w2 = weil_w(weil_w(phi))
        err["w^4 = 1"] = max(err["w^4 = 1"], _rel(weil_w(weil_w(w2)), phi))
        err["w^2 = chi_V(-1) [x -> -x]"] = max(err["w^2 = chi_V(-1) [x -> -x]"], _rel(w2, c * negate(phi)))
        x = phi
        for _ in range(3):
            x = weil_w(weil_n(1, x))
        err["(w n(1))^3 = omega(-1)"] = max(err["(w n(1))^3 = omega(-1)"], _rel(x, c * negate(phi)))
        err["w w^-1 = 1"] = max(err["w w^-1 = 1"], _rel(weil_w(weil_w(phi, inverse=True)), phi))
        for b in (1, 2):
            lhs = weil_w(weil_n(b, weil_w(phi, inverse=True)))
            binv = -Fraction(1, b)
            ainv = -pow(b, -1, model.p ** (max(k + m for k, m in model.windows) + 2))
            rhs = weil_n(binv, weil_m(ainv, weil_w(weil_n(binv, phi))))
            key = "w n(b) w^-1 = n(-1/b) m(-1/b) w n(-1/b)"
            err[key] = max(err[key], _rel(lhs, rhs))
    for k, v in err.items():
        rep.close(k, v, 0.0, tol, absolute=True)
    rep.constants["gamma"] = 1
    rep.constants["chi_V(-1)"] = c
    return rep


def verify_invariance(model: FiniteModel, tol: float = 1e-12) -> VerificationReport:
    """omega(kappa) phi_p = chi_0(kappa) phi_p and L(h) phi_p = chi(h) phi_p on generators."""
    rep = VerificationReport(f"invariance of phi_p {model.kind} p={model.p}")
    p, D = model.p, model.D
    phi = build_phi_p(model)
    chi = model.character
    # chi_0 of diag(a, 1/a) is chi_0(1/a)
    c0 = (lambda a: chi.value(pow(a, -1, p))) if model.kind == "level" else (lambda a: 1)
    rep.close("omega(n(1)) phi = phi", _rel(weil_n(1, phi), phi), 0.0, tol, absolute=True)
    rep.close("omega(m(2)) phi = chi_0(1/2) phi", _rel(weil_m(2, phi), c0(2) * phi), 0.0, tol, absolute=True)
    if model.kind == "level":
        # lower unipotent [[1,0],[p,1]] = w n(-p) w^-1 lies in K_0(p)
        low = weil_w(weil_n(-p, weil_w(phi, inverse=True)))
        rep.close("omega(n^-(p)) phi = phi", _rel(low, phi), 0.0, tol, absolute=True)
    else:
        rep.close("omega(w) phi = phi", _rel(weil_w(phi), phi), 0.0, tol, absolute=True)
    one = lambda t: QuadFieldElement(D, 2 * t, 0)
    unit = QuadFieldElement(D, 2, 2)   # 1 + sqrt(D)
    if model.coords == "split":
        I = [[1, 0], [0, 1]]
        gens = {"(diag(2, 1), 1)": ([[2, 0], [0, 1]], I), "(1, diag(1, 2))": (I, [[1, 0], [0, 2]]),
                "([[1, 1], [0, 1]], 1)": ([[1, 1], [0, 1]], I), "(1, [[1, 0], [1, 1]])": (I, [[1, 0], [1, 1]])}
    else:
        gens = {"diag(2, 1)": [[2, 0], [0, 1]], "diag(1 + sqrt D, 1)": [[unit, 0], [0, 1]],
                "diag(1, 1 + sqrt D)": [[1, 0], [0, unit]], "[[1, 1], [0, 1]]": [[1, 1], [0, 1]],
                "[[1, 0], [p, 1]]": [[1, 0], [p, 1]]}
    for name, h in gens.items():
        ch = 1
        if model.kind == "level":
            top = h[0][0] if isinstance(h[0][0], QuadFieldElement) else one(h[0][0])
            ch = chi.value(int(padic_residue(top.norm(), p, 1)))
        rep.close(f"L({name}) phi = chi(h) phi", _rel(scaling_action(h, phi), ch * phi), 0.0, tol,
                  absolute=True)
    return rep


def verify_weil_n_phase(model: FiniteModel, b, samples: int = 64, seed: int = 0) -> VerificationReport:
    """omega(n(b)) Char(L) against psi_p(b Q(x)) at sample points."""
    rep = VerificationReport(f"n(b) phase b={b}")
    phi = char_lattice(model, exact=False)
    out = weil_n(b, phi)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        x = tuple(Fraction(int(t), model.p) for t in rng.integers(-model.p ** 3, model.p ** 3, size=4))
        x = tuple(Fraction(round(float(t))) if i % 2 else t for i, t in enumerate(x))
        ref = phi(*x) * np.exp(-2j * np.pi * (Fraction(b) * model.Q(x) % 1))
        worst = max(worst, abs(out(*x) - ref))
    rep.close("pointwise phase", worst, 0.0, 1e-12, absolute=True)
    return rep
