"""Integer arithmetic, Kronecker symbols, Dirichlet characters and Gauss sums.

Character values live in an exact cyclotomic ring; floats only appear when a
value is explicitly embedded into C.
"""
from __future__ import annotations

import cmath
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd
from typing import Iterable


class DomainError(ValueError):
    """Raised for inputs outside the supported arithmetic domain."""


# ---------------------------------------------------------------------------
# integers

def factorize(n: int) -> list[tuple[int, int]]:
    if n < 1:
        raise DomainError(f"factorize needs n >= 1, got {n}")
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
        p += 1 if p == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == [(n, 1)]


def primes_up_to(n: int) -> list[int]:
    if n < 2:
        return []
    sieve = bytearray([1]) * (n + 1)
    sieve[0] = sieve[1] = 0
    for p in range(2, int(n ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = bytearray(len(sieve[p * p::p]))
    return [i for i, v in enumerate(sieve) if v]


def divisors(n: int) -> list[int]:
    divs = [1]
    for p, e in factorize(n):
        divs = [d * p ** k for d in divs for k in range(e + 1)]
    return sorted(divs)


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(abs(n))) if n != 0 else False


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a|n) for any integer a and nonzero n."""
    if n == 0:
        raise DomainError("kronecker symbol needs n != 0")
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    # Jacobi symbol (a|n), n odd positive
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def primitive_root(p: int) -> int:
    """Smallest generator of (Z/p)^x for an odd prime p."""
    if not is_prime(p) or p == 2:
        raise DomainError(f"{p} is not an odd prime")
    qs = [q for q, _ in factorize(p - 1)]
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
    raise AssertionError("unreachable")


@lru_cache(maxsize=None)
def discrete_log_table(p: int) -> dict[int, int]:
    g = primitive_root(p)
    table, x = {}, 1
    for k in range(p - 1):
        table[x] = k
        x = x * g % p
    return table


# ---------------------------------------------------------------------------
# cyclotomic values

def _poly_divexact(a: list[int], b: list[int]) -> list[int]:
    a = list(a)
    q = [0] * (len(a) - len(b) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = a[i + len(b) - 1] // b[-1]
        q[i] = c
        for j, y in enumerate(b):
            a[i + j] -= c * y
    return q


@lru_cache(maxsize=None)
def cyclotomic_polynomial(n: int) -> tuple[int, ...]:
    """Coefficients of Phi_n, lowest degree first."""
    num = [-1] + [0] * (n - 1) + [1]
    for d in divisors(n):
        if d < n:
            num = _poly_divexact(num, list(cyclotomic_polynomial(d)))
    return tuple(num)


def _reduce(coeffs: list[Fraction], n: int) -> tuple[Fraction, ...]:
    phi = cyclotomic_polynomial(n)
    deg = len(phi) - 1
    c = list(coeffs)
    for i in range(len(c) - 1, deg - 1, -1):
        t = c[i]
        if t:
            for j in range(deg + 1):
                c[i - deg + j] -= t * phi[j]
    c = c[:deg]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


class CyclotomicValue:
    """Exact element of Q(zeta_order), zeta_order = exp(2 pi i / order).

    Stored reduced modulo the cyclotomic polynomial, so equal values have
    equal coefficient tuples.
    """

    __slots__ = ("order", "coeffs")

    def __init__(self, order: int, coeffs: Iterable | dict | None = None):
        if order < 1:
            raise DomainError("order must be positive")
        raw = [Fraction(0)] * order
        if isinstance(coeffs, dict):
            items = coeffs.items()
        else:
            items = enumerate(coeffs or ())
        for k, v in items:
            raw[k % order] += Fraction(v)
        self.order = order
        self.coeffs = _reduce(raw, order)

    @classmethod
    def rational(cls, q, order: int = 1) -> "CyclotomicValue":
        return cls(order, {0: q})

    @classmethod
    def root_of_unity(cls, order: int, k: int = 1) -> "CyclotomicValue":
        return cls(order, {k % order: 1})

    def lift(self, order: int) -> "CyclotomicValue":
        if order % self.order:
            raise DomainError(f"cannot lift order {self.order} to {order}")
        s = order // self.order
        return CyclotomicValue(order, {k * s: c for k, c in enumerate(self.coeffs)})

    def _common(self, other) -> tuple["CyclotomicValue", "CyclotomicValue"]:
        if not isinstance(other, CyclotomicValue):
            other = CyclotomicValue.rational(other, self.order)
        if other.order == self.order:
            return self, other
        m = self.order * other.order // gcd(self.order, other.order)
        return self.lift(m), other.lift(m)

    def __add__(self, other):
        a, b = self._common(other)
        n = max(len(a.coeffs), len(b.coeffs))
        return CyclotomicValue(a.order, [
            (a.coeffs[i] if i < len(a.coeffs) else 0) + (b.coeffs[i] if i < len(b.coeffs) else 0)
            for i in range(n)])

    __radd__ = __add__

    def __neg__(self):
        return CyclotomicValue(self.order, [-c for c in self.coeffs])

    def __sub__(self, other):
        return self + (-other if isinstance(other, CyclotomicValue) else -Fraction(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._common(other)
        raw = [Fraction(0)] * a.order
        for i, x in enumerate(a.coeffs):
            if x:
                for j, y in enumerate(b.coeffs):
                    if y:
                        raw[(i + j) % a.order] += x * y
        return CyclotomicValue(a.order, raw)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise DomainError("negative powers are not supported")
        out = CyclotomicValue.rational(1, self.order)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def conjugate(self) -> "CyclotomicValue":
        return CyclotomicValue(self.order, {-k: c for k, c in enumerate(self.coeffs)})

    def galois(self, a: int) -> "CyclotomicValue":
        """Image under zeta -> zeta^a, gcd(a, order) = 1."""
        if gcd(a, self.order) != 1:
            raise DomainError("Galois exponent must be a unit")
        return CyclotomicValue(self.order, {k * a: c for k, c in enumerate(self.coeffs)})

    def is_zero(self) -> bool:
        return not self.coeffs

    def is_rational(self) -> bool:
        return len(self.coeffs) <= 1

    def to_rational(self) -> Fraction:
        if not self.is_rational():
            raise DomainError(f"{self!r} is not rational")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def to_complex(self) -> complex:
        z = cmath.exp(2j * cmath.pi / self.order)
        return complex(sum(float(c) * z ** k for k, c in enumerate(self.coeffs)))

    def __complex__(self):
        return self.to_complex()

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = CyclotomicValue.rational(other, self.order)
        if not isinstance(other, CyclotomicValue):
            return NotImplemented
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    def __hash__(self):
        # canonical order: smallest order holding the value is not tracked, so
        # hash only the embedding rounded; equal values embed equally
        z = self.to_complex()
        return hash((round(z.real, 9), round(z.imag, 9)))

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for k, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" if k == 0 else f"{c}*z{self.order}^{k}")
        return " + ".join(terms)


# ---------------------------------------------------------------------------
# Dirichlet characters

@dataclass(frozen=True)
class LocalComponent:
    p: int
    generator: int
    image_order: int
    image_exponent: int

    def __call__(self, n: int) -> tuple[int, int] | None:
        """chi_p(n) as (order, exponent), None when p | n."""
        n %= self.p
        if n == 0:
            return None
        k = discrete_log_table(self.p)[n]
        # discrete log is w.r.t. the smallest primitive root
        kg = discrete_log_table(self.p)[self.generator % self.p]
        # n = g^(k / kg) with kg invertible mod p-1
        t = k * pow(kg, -1, self.p - 1) % (self.p - 1)
        return self.image_order, t * self.image_exponent % self.image_order


@dataclass(frozen=True)
class DirichletCharacter:
    """Character of odd squarefree modulus, a product of prime components."""

    modulus: int
    components: tuple[LocalComponent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        m = self.modulus
        if m < 1 or m % 2 == 0 or not (m == 1 or is_squarefree(m)):
            raise DomainError(f"modulus must be odd and squarefree, got {m}")
        ps = sorted(c.p for c in self.components)
        if ps != [p for p, _ in factorize(m)] if m > 1 else ps:
            raise DomainError("components must cover exactly the primes of the modulus")
        for c in self.components:
            if gcd(c.generator, c.p) != 1:
                raise DomainError(f"bad generator {c.generator} mod {c.p}")
            if _mult_order(c.generator, c.p) != c.p - 1:
                raise DomainError(f"{c.generator} does not generate (Z/{c.p})^x")
            if (c.p - 1) % c.image_order:
                raise DomainError("image order must divide p - 1")
        object.__setattr__(self, "components", tuple(sorted(self.components, key=lambda c: c.p)))

    # constructors ---------------------------------------------------------
    @classmethod
    def trivial(cls) -> "DirichletCharacter":
        return cls(1, ())

    @classmethod
    def from_prime(cls, p: int, image_order: int, image_exponent: int = 1) -> "DirichletCharacter":
        g = primitive_root(p)
        return cls(p, (LocalComponent(p, g, image_order, image_exponent % image_order),))

    @classmethod
    def quadratic(cls, disc: int) -> "DirichletCharacter":
        """Kronecker character n -> (disc|n) for an odd squarefree |disc|, disc = 1 mod 4."""
        m = abs(disc)
        if disc % 4 != 1:
            raise DomainError(f"discriminant {disc} must be 1 mod 4")
        comps = []
        for p, _ in factorize(m) if m > 1 else []:
            comps.append(LocalComponent(p, primitive_root(p), 2, 1))
        return cls(m, tuple(comps))

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        m = self.modulus * other.modulus // gcd(self.modulus, other.modulus)
        comps = {}
        for c in self.components + other.components:
            g = primitive_root(c.p)
            # re-express on the smallest generator: chi(g) = zeta_k^(e * t)
            t = discrete_log_table(c.p)[g] * pow(discrete_log_table(c.p)[c.generator % c.p], -1, c.p - 1)
            o, e = c.image_order, c.image_exponent * t % c.image_order
            if c.p in comps:
                o2, e2 = comps[c.p]
                L = o * o2 // gcd(o, o2)
                comps[c.p] = (L, (e * (L // o) + e2 * (L // o2)) % L)
            else:
                comps[c.p] = (o, e)
        out = []
        for p, (o, e) in sorted(comps.items()):
            d = gcd(o, e) if e else o
            o, e = (o // d, e // d) if e else (1, 0)
            out.append(LocalComponent(p, primitive_root(p), o, e))
        # primes whose component became trivial stay in the modulus
        return DirichletCharacter(m, tuple(out))

    def conjugate(self) -> "DirichletCharacter":
        return DirichletCharacter(self.modulus, tuple(
            LocalComponent(c.p, c.generator, c.image_order, (-c.image_exponent) % c.image_order)
            for c in self.components))

    # evaluation -----------------------------------------------------------
    @property
    def order(self) -> int:
        o = 1
        for c in self.components:
            k = c.image_order // gcd(c.image_order, c.image_exponent)
            o = o * k // gcd(o, k)
        return o

    def exponent_of(self, n: int) -> int | None:
        """chi(n) = zeta_order^k, returned as k; None when gcd(n, modulus) > 1."""
        total = Fraction(0)
        for c in self.components:
            r = c(n)
            if r is None:
                return None
            co, e = r
            total += Fraction(e, co)
        return int(total * self.order) % self.order

    def __call__(self, n: int) -> CyclotomicValue:
        k = self.exponent_of(n)
        o = max(self.order, 1)
        if k is None:
            return CyclotomicValue(o)
        return CyclotomicValue.root_of_unity(o, k)

    def value(self, n: int) -> complex:
        k = self.exponent_of(n)
        if k is None:
            return 0j
        return cmath.exp(2j * cmath.pi * k / self.order) if self.order > 1 else 1 + 0j

    def int_value(self, n: int) -> int:
        """chi(n) as an integer; only for characters of order <= 2."""
        if self.order > 2:
            raise DomainError("character is not real")
        k = self.exponent_of(n)
        if k is None:
            return 0
        return -1 if k else 1

    @property
    def parity(self) -> int:
        k = self.exponent_of(-1)
        return 1 if (k or 0) == 0 else -1

    def is_trivial(self) -> bool:
        return self.order == 1

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        return {"modulus": self.modulus, "components": [
            {"p": c.p, "generator": c.generator, "image_order": c.image_order,
             "image_exponent": c.image_exponent} for c in self.components]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "DirichletCharacter":
        return cls(int(d["modulus"]), tuple(
            LocalComponent(int(c["p"]), int(c["generator"]), int(c["image_order"]),
                           int(c["image_exponent"])) for c in d["components"]))

    @classmethod
    def from_json(cls, s: str) -> "DirichletCharacter":
        return cls.from_dict(json.loads(s))


def _mult_order(a: int, p: int) -> int:
    k, x = 1, a % p
    while x != 1:
        x = x * a % p
        k += 1
    return k


def char_eval(chi: DirichletCharacter, n: int) -> CyclotomicValue:
    return chi(n)


def gauss_sum(chi: DirichletCharacter) -> CyclotomicValue:
    """g(chi) = sum_j chi(j) e(j/p) for a character of prime modulus p."""
    p = chi.modulus
    if not is_prime(p):
        raise DomainError(f"Gauss sum needs a prime modulus, got {p}")
    if chi.is_trivial():
        raise DomainError("Gauss sum of the trivial character is degenerate (equals -1)")
    k = chi.order
    L = p * k // gcd(p, k)
    coeffs: dict[int, int] = {}
    for j in range(1, p):
        e = chi.exponent_of(j)
        exp = (e * (L // k) + j * (L // p)) % L
        coeffs[exp] = coeffs.get(exp, 0) + 1
    return CyclotomicValue(L, coeffs)
