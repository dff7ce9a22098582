"""Weight-one newform coefficients: dihedral theta series, eta products, file import."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

from .arith import CyclotomicValue, DirichletCharacter, DomainError, primes_up_to

Value = Union[int, CyclotomicValue]


class QexpParseError(DomainError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass
class CoefficientTable:
    """Fourier coefficients c(1..bound) of a normalized eigenform."""

    level: int
    character: DirichletCharacter
    values: dict[int, Value]
    warnings: list[str] = field(default_factory=list)

    @property
    def bound(self) -> int:
        """Largest B with c(1..B) all present."""
        n = len(self.values)
        if n and max(self.values) == n and min(self.values) == 1:
            return n
        b = 0
        while b + 1 in self.values:
            b += 1
        return b

    def __getitem__(self, n: int) -> Value:
        try:
            return self.values[n]
        except KeyError:
            raise DomainError(f"coefficient c({n}) is beyond the table bound {self.bound}") from None

    def chi(self, n: int) -> Value:
        if self.character.order <= 2:
            return self.character.int_value(n)
        return self.character(n)

    def check_invariants(self) -> list[str]:
        """List violated invariants (empty when the table is consistent)."""
        bad = []
        B = self.bound
        if B >= 1 and self.values[1] != 1:
            bad.append(f"c(1) = {self.values[1]} != 1")
        for m in range(2, B + 1):
            for n in range(m + 1, B // m + 1):
                if math.gcd(m, n) == 1 and self.values[m * n] != self.values[m] * self.values[n]:
                    bad.append(f"c({m * n}) != c({m}) c({n})")
        for p in primes_up_to(math.isqrt(B)):
            pk = p
            while pk * p <= B:
                lhs = self.values[pk * p]
                rhs = self.values[p] * self.values[pk] - self.chi(p) * self.values[pk // p]
                if lhs != rhs:
                    bad.append(f"Hecke recursion fails at {p}^k = {pk * p}")
                pk *= p
        return bad


# ---------------------------------------------------------------------------
# binary quadratic forms

@dataclass(frozen=True)
class BQForm:
    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.discriminant >= 0 or self.a <= 0:
            raise DomainError(f"{self} is not positive definite")

    @property
    def discriminant(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def theta_series(self, bound: int) -> list[int]:
        """r_Q(n) for 0 <= n <= bound."""
        r = [0] * (bound + 1)
        disc = -self.discriminant
        # a Q(x,y) = (a x + b y/2)^2 + disc y^2 / 4
        ymax = math.isqrt(4 * self.a * bound // disc) + 1
        for y in range(-ymax, ymax + 1):
            base = disc * y * y
            if base > 4 * self.a * bound:
                continue
            # solve a x^2 + b y x + c y^2 <= bound
            span = math.sqrt(max(0.0, (4 * self.a * bound - base))) / (2 * self.a)
            centre = -self.b * y / (2 * self.a)
            for x in range(math.floor(centre - span) - 1, math.ceil(centre + span) + 2):
                v = self(x, y)
                if 0 <= v <= bound:
                    r[v] += 1
        return r


def bqf_rep_count(Q: BQForm, n: int) -> int:
    if n < 0:
        return 0
    return Q.theta_series(n)[n]


def reduced_forms(disc: int) -> list[BQForm]:
    if disc >= 0 or disc % 4 not in (0, 1):
        raise DomainError(f"{disc} is not a negative discriminant")
    out = []
    a = 1
    while 3 * a * a <= -disc:
        for b in range(-a + 1, a + 1):
            if (b * b - disc) % (4 * a) == 0:
                c = (b * b - disc) // (4 * a)
                if c >= a and math.gcd(math.gcd(a, b), c) == 1:
                    f = BQForm(a, b, c)
                    if f.is_reduced():
                        out.append(f)
        a += 1
    return out


def class_number(disc: int) -> int:
    return len(reduced_forms(disc))


def dihedral_coeffs(disc_M: int, bound: int) -> CoefficientTable:
    """Theta series of a class-group character of order 3 for a class-number-3 field."""
    forms = reduced_forms(disc_M)
    if len(forms) != 3:
        raise DomainError(f"class number of {disc_M} is {len(forms)}, only 3 is supported")
    principal = next(f for f in forms if f.a == 1)
    other = next(f for f in forms if f.a != 1)
    r1 = principal.theta_series(bound)
    r2 = other.theta_series(bound)
    values = {n: (r1[n] - r2[n]) // 2 for n in range(1, bound + 1)}
    return CoefficientTable(-disc_M, DirichletCharacter.quadratic(disc_M), values)


# ---------------------------------------------------------------------------
# eta products

def _euler_power(d: int, e: int, bound: int) -> list[int]:
    """prod_{n>=1} (1 - q^{dn})^e up to q^bound."""
    base = [0] * (bound + 1)
    # pentagonal number theorem
    k = 0
    while True:
        done = True
        for kk in ((k,) if k == 0 else (k, -k)):
            g = kk * (3 * kk - 1) // 2
            if d * g <= bound:
                base[d * g] += -1 if kk % 2 else 1
                done = False
        if done and k > 0:
            break
        k += 1
    if e < 0:
        base = _series_inverse(base)
        e = -e
    out = [1] + [0] * bound
    for _ in range(e):
        out = _series_mul(out, base, bound)
    return out


def _series_mul(a: list[int], b: list[int], bound: int) -> list[int]:
    out = [0] * (bound + 1)
    nz = [(j, y) for j, y in enumerate(b) if y]
    for i, x in enumerate(a):
        if x:
            for j, y in nz:
                if i + j > bound:
                    break
                out[i + j] += x * y
    return out


def _series_inverse(a: list[int]) -> list[int]:
    if a[0] != 1:
        raise DomainError("series must start with 1")
    inv = [0] * len(a)
    inv[0] = 1
    for n in range(1, len(a)):
        inv[n] = -sum(a[k] * inv[n - k] for k in range(1, n + 1) if a[k])
    return inv


def eta_product_coeffs(pairs: list[tuple[int, int]], bound: int) -> list[int]:
    """Coefficients c(0..bound) of prod eta(d z)^e as a q-series."""
    shift24 = sum(d * e for d, e in pairs)
    if shift24 % 24:
        raise DomainError(f"leading exponent {Fraction(shift24, 24)} is not an integer")
    shift = shift24 // 24
    series = [1] + [0] * bound
    for d, e in pairs:
        series = _series_mul(series, _euler_power(d, e, bound), bound)
    out = [0] * (bound + 1)
    for n in range(bound + 1):
        if 0 <= n - shift <= bound:
            out[n] = series[n - shift]
    return out


# ---------------------------------------------------------------------------
# file import

_TERM = re.compile(r"([+-]?)(\d*)(\*?z(?:\^(\d+))?)?")


def _parse_value(text: str, zeta: int | None, lineno: int) -> Value:
    text = text.replace(" ", "")
    if re.fullmatch(r"[+-]?\d+", text):
        v = int(text)
        return v if zeta is None else CyclotomicValue.rational(v, zeta)
    if zeta is None:
        raise QexpParseError(lineno, f"value {text!r} uses z but no '#zeta k' header was given")
    coeffs: dict[int, int] = {}
    pos = 0
    while pos < len(text):
        m = _TERM.match(text, pos)
        if not m or m.end() == pos:
            raise QexpParseError(lineno, f"cannot parse value {text!r}")
        sign, num, zpart, power = m.groups()
        if not num and not zpart:
            raise QexpParseError(lineno, f"cannot parse value {text!r}")
        c = int(num) if num else 1
        if sign == "-":
            c = -c
        k = (int(power) if power else 1) if zpart else 0
        coeffs[k] = coeffs.get(k, 0) + c
        pos = m.end()
    return CyclotomicValue(zeta, coeffs)


def parse_qexp(text: str, character: DirichletCharacter | None = None,
               level: int | None = None) -> CoefficientTable:
    values: dict[int, Value] = {}
    zeta = None
    last = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if parts and parts[0] == "zeta":
                if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                    raise QexpParseError(lineno, "header must read '#zeta k'")
                if values:
                    raise QexpParseError(lineno, "'#zeta' header must precede coefficients")
                zeta = int(parts[1])
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise QexpParseError(lineno, f"expected 'n value', got {line!r}")
        if not parts[0].isdigit():
            raise QexpParseError(lineno, f"index {parts[0]!r} is not a positive integer")
        n = int(parts[0])
        if n <= last:
            raise QexpParseError(lineno, f"index {n} is not ascending")
        values[n] = _parse_value(parts[1], zeta, lineno)
        last = n
    if not values:
        raise DomainError("q-expansion file contains no coefficients")
    if character is None:
        character = DirichletCharacter.trivial()
    table = CoefficientTable(level or 1, character, values)
    checks = table.check_invariants()
    if 1 not in values:
        checks.insert(0, "c(1) missing")
    if character.is_trivial():
        checks = [c for c in checks if not c.startswith("Hecke")]
    table.warnings = checks
    return table


def import_qexp(path, character: DirichletCharacter | None = None,
                level: int | None = None) -> CoefficientTable:
    """Read a q-expansion file; invariant violations land in ``table.warnings``."""
    return parse_qexp(Path(path).read_text(encoding="utf-8"), character, level)


def format_value(v) -> str:
    """Render a coefficient in the file syntax ("3", "1-z^2", ...)."""
    if not isinstance(v, CyclotomicValue):
        return str(v)
    if v.is_rational():
        return str(v.to_rational())
    parts = []
    for k, c in enumerate(v.coeffs):
        if not c:
            continue
        if c.denominator != 1:
            raise DomainError("only integral cyclotomic values can be written")
        c = int(c)
        body = str(abs(c)) if k == 0 else (("" if abs(c) == 1 else f"{abs(c)}*") + ("z" if k == 1 else f"z^{k}"))
        parts.append(("-" if c < 0 else "+") + body)
    out = "".join(parts)
    return out[1:] if out.startswith("+") else out


def export_qexp(values: dict, path=None, zeta: int | None = None) -> str:
    lines = [f"#zeta {zeta}"] if zeta else []
    for n in sorted(values):
        lines.append(f"{n} {format_value(values[n])}")
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
