"""L-values at s = 1, Petersson norm of eta(z)eta(23z), and the identity chain tying them to regulators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.special import erfc, exp1
from sympy.solvers.diophantine.diophantine import diop_DN

from .arith import DirichletCharacter, DomainError, is_squarefree, kronecker
from .fields import (NumberField, UnitSystem, compositum, exact_norm, recognize, regulator,
                     relative_norm, unit_search)
from .forms import CoefficientTable, class_number as _imag_class_number, dihedral_coeffs
from .report import VerificationReport


@dataclass(frozen=True)
class LValueResult:
    value: float
    method: str
    truncation: int
    error_estimate: float

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "truncation": self.truncation,
                "error_estimate": self.error_estimate}


@dataclass(frozen=True)
class PeterssonResult:
    value: float
    convention: str
    cells: int
    error_estimate: float
    converged: bool = True

    @property
    def adelic_normalized(self) -> float:
        return self.value / STARK_INDEX_FACTOR

    def to_dict(self) -> dict:
        return {"value": self.value, "convention": self.convention, "cells": self.cells,
                "error_estimate": self.error_estimate, "adelic_normalized": self.adelic_normalized,
                "converged": self.converged}


# 2 * [PSL2(Z) : Gamma_0(23)-bar] relates the two Petersson normalizations
STARK_INDEX_FACTOR = 48


# ---------------------------------------------------------------------------
# quadratic fields

def is_fundamental(disc: int) -> bool:
    if disc in (0, 1):
        return False
    if disc % 4 == 1:
        return is_squarefree(abs(disc))
    if disc % 4 == 0:
        m = disc // 4
        return m % 4 in (2, 3) and is_squarefree(abs(m))
    return False


def real_fundamental_unit(disc: int) -> tuple[int, int]:
    """(t, u) with (t + u sqrt(disc))/2 the fundamental unit, t, u > 0."""
    sols = [(abs(t), abs(u)) for N in (4, -4) for t, u in diop_DN(disc, N) if u]
    t, u = min(sols, key=lambda s: math.log(s[0] + s[1] * math.sqrt(disc)))
    return t, u


def narrow_class_number(disc: int) -> int:
    """Number of cycles of reduced primitive indefinite forms of discriminant disc."""
    r = math.sqrt(disc)
    forms = set()
    for b in range(1, math.isqrt(disc) + 1):
        if (b * b - disc) % 4 or b >= r:
            continue
        ac = (b * b - disc) // 4  # negative
        for a in range(1, -ac + 1):
            if ac % a:
                continue
            for sa in (a, -a):
                c = ac // sa
                if abs(r - 2 * a) < b and math.gcd(math.gcd(a, b), abs(c)) == 1:
                    forms.add((sa, b, c))
    seen = set()
    cycles = 0
    for f in sorted(forms):
        if f in seen:
            continue
        cycles += 1
        g = f
        while g not in seen:
            seen.add(g)
            g = _rho(g, disc, r)
    return cycles


def _rho(f, disc, r):
    a, b, c = f
    m = 2 * abs(c)
    # b' = -b mod 2|c| in (r - 2|c|, r)
    bp = -b + m * math.floor((r + b) / m)
    if bp <= r - m:
        bp += m
    return (c, bp, (bp * bp - disc) // (4 * c))


def quadratic_class_number(disc: int) -> int:
    if disc < 0:
        return _imag_class_number(disc)
    hplus = narrow_class_number(disc)
    t, u = real_fundamental_unit(disc)
    norm = (t * t - disc * u * u) // 4
    return hplus if norm == -1 else hplus // 2


def dirichlet_L1(disc: int) -> LValueResult:
    """L(1, chi_disc) by the class number formula, cross-checked by a smoothed series."""
    if not is_fundamental(disc):
        raise DomainError(f"{disc} is not a fundamental discriminant")
    h = quadratic_class_number(disc)
    if disc < 0:
        w = {-3: 6, -4: 4}.get(disc, 2)
        closed = 2 * math.pi * h / (w * math.sqrt(-disc))
    else:
        t, u = real_fundamental_unit(disc)
        closed = 2 * h * math.log((t + u * math.sqrt(disc)) / 2) / math.sqrt(disc)
    series = dirichlet_L1_series(disc)
    rel = abs(series.value - closed) / closed
    if rel > 1e-6:
        raise DomainError(f"class number formula {closed} disagrees with series {series.value}")
    return LValueResult(closed, "class_number_formula", series.truncation, max(rel, series.error_estimate) * closed)


def dirichlet_L1_series(disc: int, terms: int | None = None) -> LValueResult:
    """Smoothed series from the functional equation of a real primitive character."""
    q = abs(disc)
    odd = disc < 0

    def partial(X):
        n = np.arange(1, X + 1)
        chi = np.array([kronecker(disc, int(k)) for k in n], dtype=float)
        x = n * math.sqrt(math.pi / q)
        if odd:
            terms_ = np.exp(-x * x) / n + math.pi / math.sqrt(q) * erfc(x)
        else:
            terms_ = erfc(x) / n + exp1(x * x) / math.sqrt(q)
        return float(np.sum(chi * terms_))

    X = terms or max(20, int(8 * math.sqrt(q)))
    v, v2 = partial(X), partial(2 * X)
    return LValueResult(v2, "smoothed_series", 2 * X, abs(v2 - v))


# ---------------------------------------------------------------------------
# weight-one L-values

def modular_L1(table: CoefficientTable, level: int, twist: int | None = None,
               root_number: int = 1, split: float = 1.0, tol: float = 1e-10) -> LValueResult:
    """L(f (x) chi_twist, 1) from c(n) for a weight-one form with real coefficients.

    With A = sqrt(Q)/(2 pi) and Q the conductor,
    L(1) = sum c(n)/n exp(-n t/A) + (w/A) sum c(n) E1(n/(A t)).
    """
    Q = level * (twist * twist if twist else 1)
    A = math.sqrt(Q) / (2 * math.pi)
    # terms decay like exp(-n min(t, 1/t)/A)
    rate = min(split, 1 / split) / A
    X = int(math.ceil(-math.log(tol * 1e-3) / rate)) + 1
    if table.bound < 2 * X:
        raise DomainError(f"coefficient table bound {table.bound} too small; needs bound >= {2 * X}")

    def partial(M):
        n = np.arange(1, M + 1)
        c = np.array([float(table[k]) for k in n])
        if twist:
            c *= np.array([kronecker(twist, int(k)) for k in n], dtype=float)
        return float(np.sum(c / n * np.exp(-n * split / A)) + root_number / A * np.sum(c * exp1(n / (A * split))))

    v, v2 = partial(X), partial(2 * X)
    return LValueResult(v2, "smoothed_series", 2 * X, max(abs(v2 - v), 1e-15 * abs(v2)))


def trivial_table(bound: int = 200) -> CoefficientTable:
    """c(n) = 1 if n = 1 else 0."""
    return CoefficientTable(1, DirichletCharacter.trivial(), {n: int(n == 1) for n in range(1, bound + 1)})


def _product(a: LValueResult, b: LValueResult, method: str) -> LValueResult:
    v = a.value * b.value
    err = abs(a.value) * b.error_estimate + abs(b.value) * a.error_estimate
    return LValueResult(v, method, max(a.truncation, b.truncation), err)


def ad0_L1(disc_M: int = -23, f0: CoefficientTable | None = None) -> LValueResult:
    """L(Ad^0 of the dihedral representation, 1) = L(f0, 1) L(1, chi_M)."""
    N = -disc_M
    f0 = f0 or dihedral_coeffs(disc_M, 400)
    return _product(modular_L1(f0, N), dirichlet_L1(disc_M), "smoothed_series")


def ad0_twist_L1(disc_M: int = -23, D: int = 5, f0: CoefficientTable | None = None) -> LValueResult:
    """L(Ad^0 (x) chi_D, 1) = L(f0 (x) chi_D, 1) L(1, chi_{disc_M D})."""
    N = -disc_M
    if math.gcd(D, N) != 1:
        raise DomainError(f"gcd({D}, {N}) must be 1")
    f0 = f0 or dihedral_coeffs(disc_M, 2000)
    return _product(modular_L1(f0, N, twist=D), dirichlet_L1(disc_M * D), "smoothed_series")


# ---------------------------------------------------------------------------
# eta function

def dedekind_sum(h: int, k: int) -> Fraction:
    if k <= 0:
        raise DomainError("k must be positive")
    s = Fraction(0)
    for r in range(1, k):
        x = Fraction(h * r % k, k)
        if x:
            s += (Fraction(r, k) - Fraction(1, 2)) * (x - Fraction(1, 2))
    return s


def eta_series(tau, terms: int = 60) -> np.ndarray:
    """eta(tau) from the pentagonal-number series (good for Im tau >~ 0.02)."""
    tau = np.asarray(tau, dtype=complex)
    flat = tau.ravel()
    k = np.arange(-terms, terms + 1)
    expo = k * (3 * k - 1) / 2
    sgn = np.where(k % 2, -1.0, 1.0)
    total = sgn @ np.exp(2j * np.pi * np.multiply.outer(expo, flat))
    return (np.exp(2j * np.pi * flat / 24) * total).reshape(tau.shape)


def eta_multiplier(a: int, b: int, c: int, d: int) -> complex:
    """epsilon(M) with eta(M tau) = epsilon(M) sqrt(-i(c tau + d)) eta(tau), c > 0."""
    if a * d - b * c != 1:
        raise DomainError("matrix must lie in SL2(Z)")
    if c == 0:
        return complex(np.exp(2j * np.pi * b / 24)) if d == 1 else complex(np.exp(2j * np.pi * b / 24)) * -1j
    if c < 0:
        raise DomainError("normalize to c > 0")
    phase = Fraction(a + d, 12 * c) - dedekind_sum(d, c)
    return complex(np.exp(1j * math.pi * float(phase)))


def _reduce(tau: complex, max_steps: int = 200):
    """Return (M, tau') with tau' = M tau in the standard fundamental domain."""
    a, b, c, d = 1, 0, 0, 1
    for _ in range(max_steps):
        n = math.floor(tau.real + 0.5)
        tau -= n
        a, b = a - n * c, b - n * d
        if abs(tau) >= 1 - 1e-15:
            return (a, b, c, d), tau
        tau = -1 / tau
        a, b, c, d = -c, -d, a, b
    raise DomainError("reduction did not terminate")


def eta(tau: complex, threshold: float = 0.5) -> complex:
    """eta at any point of H, moving to the fundamental domain when Im tau is small."""
    if tau.imag <= 0:
        raise DomainError("tau must lie in the upper half plane")
    if tau.imag >= threshold:
        return complex(eta_series(np.array([tau]))[0])
    (a, b, c, d), t0 = _reduce(tau)
    # t0 = M tau, so tau = M^{-1} t0 with M^{-1} = (d, -b; -c, a)
    A, B, C, D = d, -b, -c, a
    if C < 0 or (C == 0 and D < 0):
        A, B, C, D = -A, -B, -C, -D
    e0 = complex(eta_series(np.array([t0]))[0])
    if C == 0:
        return complex(np.exp(2j * np.pi * B / 24)) * e0
    return eta_multiplier(A, B, C, D) * np.sqrt(-1j * (C * t0 + D)) * e0


# ---------------------------------------------------------------------------
# Petersson norm of eta(z) eta(23 z)

def gamma0_cosets(p: int) -> list[tuple[int, int, int, int]]:
    """Right coset representatives of Gamma_0(p) in SL2(Z), p prime."""
    return [(1, 0, 0, 1)] + [(0, -1, 1, j) for j in range(p)]


def _invariant_integrand(x: np.ndarray, y: np.ndarray, p: int = 23) -> np.ndarray:
    """sum over cosets of |f|gamma|^2 y, an SL2(Z)-invariant function.

    Uses |eta(-1/tau)| = |tau|^{1/2} |eta(tau)| to rewrite the non-trivial
    cosets, so every eta argument has imaginary part >= Im(z)/p.
    """
    z = x + 1j * y
    total = np.abs(eta_series(z) * eta_series(p * z)) ** 2 * y
    e1 = np.abs(eta_series(z)) ** 2
    for j in range(p):
        total = total + y / p * e1 * np.abs(eta_series((z + j) / p)) ** 2
    return total


def petersson_eta23(n_x: int = 48, n_y: int = 48, y_max: float = 60.0,
                    tol: float = 1e-8) -> PeterssonResult:
    """Integral of the coset sum over the standard fundamental domain, dx dy / y^2.

    Two pieces: the band |x| <= 1/2, 1 <= y <= y_max (periodic in x, so the
    trapezoid rule in x) and the region under y = 1 above the unit circle.
    The error estimate compares against a run at half the node counts.
    """

    def integrate(nx, ny):
        gx, gw = np.polynomial.legendre.leggauss(ny)
        # band: trapezoid in x, Gauss in log y
        xs = (np.arange(nx) + 0.5) / nx - 0.5
        lo, hi = 0.0, math.log(y_max)
        ts = (gx + 1) / 2 * (hi - lo) + lo
        tw = gw * (hi - lo) / 2
        X, T = np.meshgrid(xs, ts, indexing="ij")
        Y = np.exp(T)
        band = np.sum(_invariant_integrand(X, Y) / Y * tw[None, :]) / nx
        # lower piece: x in [-1/2, 1/2], y in [sqrt(1-x^2), 1]
        ux, uw = gx / 2, gw / 2
        X2, S = np.meshgrid(ux, (gx + 1) / 2, indexing="ij")
        ylo = np.sqrt(1 - X2 ** 2)
        Y2 = ylo + S * (1 - ylo)
        jac = (1 - ylo) / 2
        w2 = uw[:, None] * gw[None, :] * jac
        lower = np.sum(_invariant_integrand(X2, Y2) / Y2 ** 2 * w2)
        return float(band + lower)

    full = integrate(n_x, n_y)
    half = integrate(n_x // 2, n_y // 2)
    # tail above y_max: integrand ~ c exp(-4 pi y / 23) y^{-1}, bounded by its value at y_max
    tail = float(np.mean(_invariant_integrand(np.linspace(-0.5, 0.5, 9), np.full(9, y_max)))) * 23 / (4 * math.pi * y_max)
    err = abs(full - half) + tail
    return PeterssonResult(full, "stark_classical", 2 * n_x * n_y, err, err <= tol)


# ---------------------------------------------------------------------------
# the identity chain

@dataclass
class ExampleFields:
    K: NumberField
    F: NumberField
    FK: NumberField
    alpha: object
    sqrt5: object
    delta: object | None
    reg_K: float
    reg_F: float
    reg_FK: float | None
    log_ratio: float | None


def example_fields(coeff_bound: int = 4, delta_coords=None, search: bool = True) -> ExampleFields:
    """K = Q(alpha), alpha^3 = alpha + 1; F = Q(sqrt5); FK and its relative unit delta.

    ``delta_coords`` supplies delta in the power basis of FK instead of searching.
    With ``search=False`` and no coordinates, delta is left undetermined.
    """
    K = NumberField([1, 0, -1, -1], "K")
    F = NumberField([1, 0, -5], "F")
    FK, a, b = compositum(K, F, "FK")
    eps = a
    phi = (1 + b) / 2
    reg_K = regulator(UnitSystem(K, [K.gen()]))
    reg_F = abs(math.log(abs(phi.embed()[0])))
    basis = [a ** i * b ** j for j in range(2) for i in range(3)]
    delta = None
    if delta_coords is not None:
        u = FK([Fraction(c) for c in delta_coords])
        if not u.is_integral() or abs(exact_norm(u)) != 1 or relative_norm(u, 0) != K([-1]):
            raise DomainError("supplied delta is not a unit of relative norm -1")
        delta = u
    elif search:
        for u in unit_search(FK, coeff_bound, basis):
            e = u.embed()
            if abs(abs(e[0]) - abs(e[2])) > 1e-6 and relative_norm(u, 0) == K([-1]):
                delta = u
                break
    if delta is None:
        return ExampleFields(K, F, FK, a, b, None, reg_K, reg_F, None, None)
    reg_FK = regulator(UnitSystem(FK, [eps, phi, delta]))
    e = delta.embed()
    return ExampleFields(K, F, FK, a, b, delta, reg_K, reg_F, reg_FK, abs(math.log(abs(e[0] / e[2]))))


def hilbert_field_regulator() -> tuple[float, float]:
    """(Reg_L, log eps) for L = K(sqrt -23), the Hilbert class field of Q(sqrt -23).

    alpha_2 = (-alpha_1 + s/(3 alpha_1^2 - 1))/2 is a second root of x^3 - x - 1
    (s = sqrt -23), and 1/alpha_2 has relative norm alpha_1 = eps.
    """
    K = NumberField([1, 0, -1, -1], "K")
    M = NumberField([1, 0, 23], "M")
    L, a1, s = compositum(K, M, "L")
    a2 = (-a1 + s / (3 * a1 * a1 - 1)) / 2
    if a2 ** 3 - a2 - 1 != 0 or a2 == a1:
        raise RuntimeError("second cubic root not found in L")
    dl = a2.inverse()
    if relative_norm(dl, 0) != K.gen():
        raise RuntimeError("N_{L/K}(1/alpha_2) != eps")
    return regulator(UnitSystem(L, [a1, dl])), regulator(UnitSystem(K, [K.gen()]))


def verify_motivic_chain(D: int = 5, max_den: int = 100, tol: float = 1e-3,
                         petersson: PeterssonResult | None = None,
                         fields: ExampleFields | None = None) -> VerificationReport:
    if D != 5:
        raise DomainError("the identity chain is wired for F = Q(sqrt 5)")
    rep = VerificationReport("motivic chain, M = Q(sqrt -23), F = Q(sqrt 5)")
    ex = fields or example_fields()
    log_eps = ex.reg_K
    rep.constants.update({"log_eps": log_eps, "reg_F": ex.reg_F})
    f0 = dihedral_coeffs(-23, 2000)

    ad0 = ad0_L1(-23, f0)
    rep.constants["L(Ad0,1)"] = ad0.value
    rep.close("L(Ad0,1) = (6 pi^2/23) log eps", ad0.value, 6 * math.pi ** 2 / 23 * log_eps, 1e-4,
              ["smoothed series", "class number formula"])

    pet = petersson or petersson_eta23()
    adelic = pet.adelic_normalized
    rep.constants.update({"petersson_stark": pet.value, "petersson_adelic": adelic})
    if not pet.converged:
        rep.notes.append(f"petersson quadrature error estimate {pet.error_estimate:.2e} above tolerance")
    r1 = recognize(adelic / log_eps, max_den, tol)
    rep.flag("(i) <f0,f0> / log eps is a small-denominator rational", r1.value is not None,
             {"ratio": adelic / log_eps, "rational": r1.value, "near_miss": r1.near_miss},
             ["petersson quadrature", f"max_den {max_den}", f"tol {tol}"])
    r1h = recognize(adelic / log_eps, max_den, tol / 2)
    rep.flag("(i) recognition stable when the tolerance is halved", r1h.value == r1.value,
             {"tol/2": r1h.value})

    tw = ad0_twist_L1(-23, D, f0)
    rep.constants["L(Ad0 x chi5,1)"] = tw.value
    if ex.delta is None:
        rep.partial = True
        rep.notes.append("no relative unit delta found; regulator checks skipped")
        return rep
    rep.constants.update({"reg_FK": ex.reg_FK, "log|s1(delta)/s3(delta)|": ex.log_ratio,
                          "delta": [str(c) for c in ex.delta.coords]})
    rep.close("Reg_FK = 4 Reg_K Reg_F log|s1 delta / s3 delta|", ex.reg_FK,
              4 * ex.reg_K * ex.reg_F * ex.log_ratio, 1e-8, ["unit search", "log embeddings"])
    rhs = (2 * math.pi) ** 2 / (5 * math.sqrt(5) * 23) * ex.reg_FK / (ex.reg_K * ex.reg_F)
    rep.close("L(Ad0 x chi5,1) = (2pi)^2/(5 sqrt5 23) Reg_FK/(Reg_K Reg_F)", tw.value, rhs, 1e-4,
              ["smoothed series", "regulators"])
    x = math.sqrt(5) / math.pi ** 2 * tw.value / ex.log_ratio
    r2 = recognize(x, max_den, tol)
    tight = recognize(x, 10 ** 4, 1e-8)
    rep.constants["(ii) ratio"] = x
    rep.constants["(ii) tight recognition"] = tight.value
    rep.flag("(ii) (sqrt5/pi^2) L(Ad0 x chi5,1) / log|s1 delta/s3 delta| is a small-denominator rational",
             r2.value is not None, {"ratio": x, "rational": r2.value, "near_miss": r2.near_miss},
             [f"max_den {max_den}", f"tol {tol}"])
    r2h = recognize(x, max_den, tol / 2)
    rep.flag("(ii) recognition stable when the tolerance is halved", r2h.value == r2.value,
             {"tol/2": r2h.value})
    return rep
