"""Exact arithmetic in a real quadratic field Q(sqrt D) and the lift index set."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache, total_ordering

from .arith import DomainError, divisors, is_prime, is_squarefree, kronecker

# Odd fundamental discriminants D < 100 whose narrow class group is trivial.
NARROW_CLASS_ONE = (5, 13, 17, 29, 37, 41, 53, 61, 73, 89, 97)


class UnsupportedConfiguration(DomainError):
    pass


def check_discriminant(D: int) -> None:
    if D <= 1 or D % 4 != 1 or not is_squarefree(D):
        raise DomainError(f"{D} is not an odd fundamental discriminant > 1")


@total_ordering
class QuadFieldElement:
    """(x + y sqrt D) / 2 with rational x, y."""

    __slots__ = ("D", "x", "y")

    def __init__(self, D: int, x, y=0):
        self.D = D
        self.x = Fraction(x)
        self.y = Fraction(y)

    @classmethod
    def from_ab(cls, D: int, a, b) -> "QuadFieldElement":
        """a + b sqrt D."""
        return cls(D, 2 * Fraction(a), 2 * Fraction(b))

    @classmethod
    def sqrtD(cls, D: int) -> "QuadFieldElement":
        return cls(D, 0, 2)

    def _coerce(self, other) -> "QuadFieldElement":
        if isinstance(other, QuadFieldElement):
            if other.D != self.D:
                raise DomainError("elements of different fields")
            return other
        return QuadFieldElement(self.D, 2 * Fraction(other), 0)

    def __add__(self, other):
        o = self._coerce(other)
        return QuadFieldElement(self.D, self.x + o.x, self.y + o.y)

    __radd__ = __add__

    def __neg__(self):
        return QuadFieldElement(self.D, -self.x, -self.y)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        # (x1 + y1 r)(x2 + y2 r)/4 = ((x1x2 + y1y2 D) + (x1y2 + x2y1) r)/4
        return QuadFieldElement(self.D, (self.x * o.x + self.y * o.y * self.D) / 2,
                                (self.x * o.y + o.x * self.y) / 2)

    __rmul__ = __mul__

    def conj(self) -> "QuadFieldElement":
        return QuadFieldElement(self.D, self.x, -self.y)

    def norm(self) -> Fraction:
        return (self.x * self.x - self.y * self.y * self.D) / 4

    def trace(self) -> Fraction:
        return self.x

    def inverse(self) -> "QuadFieldElement":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("zero has no inverse")
        c = self.conj()
        return QuadFieldElement(self.D, c.x / n, c.y / n)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = QuadFieldElement(self.D, 2, 0)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sigma(self, i: int) -> float:
        r = math.sqrt(self.D)
        return float((self.x + (self.y if i == 1 else -self.y) * r) / 2)

    @property
    def sigma1(self) -> float:
        return self.sigma(1)

    @property
    def sigma2(self) -> float:
        return self.sigma(2)

    def is_integral(self) -> bool:
        return (self.x.denominator == 1 and self.y.denominator == 1
                and (self.x - self.y * self.D) % 2 == 0)

    def is_totally_positive(self) -> bool:
        return _sign_sigma(self, 1) > 0 and _sign_sigma(self, 2) > 0

    def sign(self, i: int) -> int:
        return _sign_sigma(self, i)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QuadFieldElement(self.D, 2 * Fraction(other))
        if not isinstance(other, QuadFieldElement):
            return NotImplemented
        return self.D == other.D and self.x == other.x and self.y == other.y

    def __lt__(self, other):
        # ordering by the first real embedding
        return (self - other).sign(1) < 0

    def __hash__(self):
        return hash((self.D, self.x, self.y))

    def __repr__(self):
        return f"({self.x} + {self.y}*sqrt{self.D})/2"

    def __str__(self):
        return f"({self.x} + {self.y}√{self.D})/2"


def _sign_sigma(a: QuadFieldElement, i: int) -> int:
    """Exact sign of sigma_i(a)."""
    y = a.y if i == 1 else -a.y
    sx = (a.x > 0) - (a.x < 0)
    sy = (y > 0) - (y < 0)
    if sx == sy or sy == 0:
        return sx
    if sx == 0:
        return sy
    # opposite signs: compare x^2 with y^2 D
    d = a.x * a.x - y * y * a.D
    return sx if d > 0 else (sy if d < 0 else 0)


class SplitType(str, Enum):
    SPLIT = "Split"
    INERT = "Inert"
    RAMIFIED = "Ramified"


def split_type(p: int, D: int) -> SplitType:
    if p == 2:
        raise DomainError("p = 2 is excluded")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    if D % p == 0:
        return SplitType.RAMIFIED
    return SplitType.SPLIT if kronecker(D, p) == 1 else SplitType.INERT


@lru_cache(maxsize=None)
def fundamental_unit(D: int) -> QuadFieldElement:
    """Smallest unit > 1 of the maximal order."""
    check_discriminant(D)
    y = 1
    while True:
        for s in (-4, 4):
            t = y * y * D + s
            if t > 0:
                x = math.isqrt(t)
                if x * x == t:
                    return QuadFieldElement(D, x, y)
        y += 1


@lru_cache(maxsize=None)
def totally_positive_unit(D: int) -> QuadFieldElement:
    eps = fundamental_unit(D)
    return eps * eps if eps.norm() == -1 else eps


@dataclass(frozen=True)
class LiftIndex:
    """Index of the lift's expansion: nu >> 0 in the inverse different, mu = sqrt(D) nu."""

    mu: QuadFieldElement

    def __post_init__(self):
        if not self.mu.is_integral():
            raise DomainError(f"{self.mu} is not integral")
        if not (self.mu.sign(1) > 0 > self.mu.sign(2)):
            raise DomainError(f"{self.mu} does not have sign (+, -)")

    @property
    def D(self) -> int:
        return self.mu.D

    @property
    def nu(self) -> QuadFieldElement:
        return self.mu / QuadFieldElement.sqrtD(self.D)

    @property
    def ideal_norm(self) -> int:
        return int(-self.mu.norm())

    def __str__(self):
        return f"{self.mu} | {self.ideal_norm}"


def canonical_associate(mu: QuadFieldElement) -> QuadFieldElement:
    """Orbit representative of mu under totally positive units.

    Picks the associate with smallest |trace|, then larger first embedding.
    """
    u = totally_positive_unit(mu.D)
    s1, s2 = mu.sigma1, mu.sigma2
    logu = math.log(u.sigma1)
    k0 = round(math.log(abs(s2) / abs(s1)) / (2 * logu)) if s1 and s2 else 0
    best = None
    for k in range(k0 - 2, k0 + 3):
        cand = mu * u ** k
        key = (abs(cand.trace()), -cand.sigma1)
        if best is None or key < best[0]:
            best = (key, cand)
    return best[1]


def enumerate_lift_indices(D: int, norm_bound: int) -> list[LiftIndex]:
    """One index per totally-positive-unit orbit with ideal norm <= norm_bound."""
    check_discriminant(D)
    if D not in NARROW_CLASS_ONE:
        raise UnsupportedConfiguration(f"D = {D} is not in the narrow class number one table")
    if norm_bound < 1:
        return []
    u = totally_positive_unit(D).sigma1
    # every orbit meets sigma_1 / |sigma_2| in [1/u, u), so |sigma_i| <= sqrt(n u)
    ymax = int(2 * math.sqrt(norm_bound * u / D)) + 2
    seen = set()
    out = []
    for y in range(1, ymax + 1):
        lo = y * y * D - 4 * norm_bound
        xmax = math.isqrt(y * y * D)
        for x in range(-xmax, xmax + 1):
            n4 = y * y * D - x * x
            if n4 <= 0 or n4 % 4 or x * x < lo or (x - y * D) % 2:
                continue
            mu = canonical_associate(QuadFieldElement(D, x, y))
            if mu not in seen:
                seen.add(mu)
                out.append(LiftIndex(mu))
    out.sort(key=lambda i: (i.ideal_norm, float(i.mu.trace()), -i.mu.sigma1))
    return out


def divisors_of_mu(idx: LiftIndex | QuadFieldElement) -> list[int]:
    """Positive integers d with mu / d integral."""
    mu = idx.mu if isinstance(idx, LiftIndex) else idx
    g = math.gcd(int(mu.x), int(mu.y))
    if g == 0:
        raise DomainError("zero has no divisor list")
    return [d for d in divisors(g)
            if QuadFieldElement(mu.D, mu.x / d, mu.y / d).is_integral()]
