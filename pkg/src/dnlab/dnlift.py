"""Fourier coefficients of the Doi-Naganuma base change of a weight-one form.

The coefficient at an index mu = sqrt(D) nu is

    sum_{d | mu, gcd(d, DN) = 1} (chi0 chiF)(-d) c(|Nm mu| / d^2),

and the normalized table divides by the value at the ideal of norm one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from fractions import Fraction

import numpy as np

from .arith import CyclotomicValue, DirichletCharacter, DomainError, factorize, kronecker, primes_up_to
from .forms import CoefficientTable, format_value
from .qfield import (LiftIndex, QuadFieldElement, SplitType, canonical_associate, check_discriminant,
                     divisors_of_mu, enumerate_lift_indices, fundamental_unit, split_type)
from .report import VerificationReport


@dataclass
class LiftConfig:
    D: int
    f0: CoefficientTable

    def __post_init__(self):
        check_discriminant(self.D)
        N = self.f0.level
        if N % 2 == 0 or (N > 1 and any(e > 1 for _, e in factorize(N))):
            raise DomainError(f"level {N} must be odd and squarefree")
        if math.gcd(self.D, N) != 1:
            raise DomainError(f"D = {self.D} and N = {N} must be coprime")

    @property
    def N(self) -> int:
        return self.f0.level

    @property
    def chi0(self) -> DirichletCharacter:
        return self.f0.character

    @cached_property
    def chiF(self) -> DirichletCharacter:
        return DirichletCharacter.quadratic(self.D)

    @cached_property
    def psi(self) -> DirichletCharacter:
        """chi0 * chiF."""
        return self.chi0 * self.chiF

    def psi_value(self, n: int):
        psi = self.psi
        return psi.int_value(n) if psi.order <= 2 else psi(n)

    def chi0_value(self, n: int):
        return self.f0.chi(n)


def lift_coeff_raw(cfg: LiftConfig, idx: LiftIndex):
    n = idx.ideal_norm
    if n > cfg.f0.bound:
        raise DomainError(f"coefficient table bound {cfg.f0.bound} too small; index of norm {n} "
                          f"needs bound >= {n}")
    total = 0
    for d in divisors_of_mu(idx):
        if math.gcd(d, cfg.D * cfg.N) == 1:
            total = total + cfg.psi_value(-d) * cfg.f0[n // (d * d)]
    return total


def _divide(a, b):
    if isinstance(b, CyclotomicValue) and not b.is_rational():
        if b * b.conjugate() != 1:
            _fail(b)
        return a * b.conjugate()
    b = Fraction(b.to_rational() if isinstance(b, CyclotomicValue) else b)
    if b == 0:
        _fail(b)
    if isinstance(a, CyclotomicValue):
        return a * (1 / b)
    q = Fraction(a) / b
    return int(q) if q.denominator == 1 else q


def _fail(b):
    raise DomainError(f"normalization failure: leading raw coefficient {b} is not invertible here")


@dataclass
class LiftTable:
    """Normalized lift coefficients indexed by integral ideals (via their index)."""

    cfg: LiftConfig
    indices: list[LiftIndex]
    raw: dict[QuadFieldElement, object]
    values: dict[QuadFieldElement, object]
    norm_bound: int
    _by_norm: dict[int, list[LiftIndex]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for idx in self.indices:
            self._by_norm.setdefault(idx.ideal_norm, []).append(idx)

    @property
    def D(self) -> int:
        return self.cfg.D

    def of_norm(self, n: int) -> list[LiftIndex]:
        return self._by_norm.get(n, [])

    def index_of(self, alpha: QuadFieldElement) -> LiftIndex:
        """Index attached to the principal ideal (alpha)."""
        return LiftIndex(canonical_associate(index_generator(alpha)))

    def __getitem__(self, ideal) -> object:
        mu = ideal.mu if isinstance(ideal, LiftIndex) else canonical_associate(index_generator(ideal))
        n = int(abs(mu.norm()))
        if n > self.norm_bound:
            raise DomainError(f"ideal of norm {n} lies beyond table bound {self.norm_bound}")
        return self.values[mu]

    def prime_ideals(self, p: int) -> list[LiftIndex]:
        t = split_type(p, self.D)
        if t is SplitType.INERT:
            return self.of_norm(p * p)
        return self.of_norm(p)

    def label(self, idx: LiftIndex) -> str:
        """Prime-ideal factorization such as '3*11:a' ('p:a'/'p:b' at split p)."""
        n = idx.ideal_norm
        if n == 1:
            return "1"
        parts = []
        mu = idx.mu
        for p, e in factorize(n):
            t = _decomposition(p, self.D)
            if t is SplitType.SPLIT:
                for tag, g in zip("ab", _norm_p_gens(self.D, p)):
                    k, m = 0, mu
                    while (m / g).is_integral():
                        m, k = m / g, k + 1
                    if k:
                        parts.append(f"{p}:{tag}" + (f"^{k}" if k > 1 else ""))
            else:
                k = e // 2 if t is SplitType.INERT else e
                parts.append(f"{p}" + (f"^{k}" if k > 1 else ""))
        return "*".join(parts)

    def export(self, path=None) -> str:
        lines = [f"# base change lift, D={self.D}, N={self.cfg.N}; columns: norm ideal value"]
        for idx in self.indices:
            lines.append(f"{idx.ideal_norm} {self.label(idx)} {format_value(self.values[idx.mu])}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def index_generator(alpha: QuadFieldElement) -> QuadFieldElement:
    """Generator of (alpha) with signs (+, -), using -1 and a unit of norm -1."""
    if alpha.norm() == 0:
        raise DomainError("zero ideal")
    s1, s2 = alpha.sign(1), alpha.sign(2)
    if s1 < 0:
        alpha, s1, s2 = -alpha, -s1, -s2
    if s2 > 0:
        eps = fundamental_unit(alpha.D)
        if eps.norm() != -1:
            raise DomainError(f"no unit of norm -1 in Q(sqrt {alpha.D})")
        alpha = alpha * eps
    return alpha


def _decomposition(p: int, D: int) -> SplitType:
    if p != 2:
        return split_type(p, D)
    return SplitType.SPLIT if kronecker(D, 2) == 1 else SplitType.INERT


@lru_cache(maxsize=None)
def _norm_p_gens(D: int, p: int) -> tuple[QuadFieldElement, ...]:
    return tuple(i.mu for i in enumerate_lift_indices(D, p) if i.ideal_norm == p)


def lift_table(cfg: LiftConfig, norm_bound: int) -> LiftTable:
    indices = enumerate_lift_indices(cfg.D, norm_bound)
    raw = {idx.mu: lift_coeff_raw(cfg, idx) for idx in indices}
    if not indices:
        return LiftTable(cfg, [], {}, {}, norm_bound)
    r0 = raw[indices[0].mu]
    if r0 == 0:
        _fail(r0)
    values = {mu: _divide(v, r0) for mu, v in raw.items()}
    return LiftTable(cfg, indices, raw, values, norm_bound)


def verify_base_change(cfg: LiftConfig, norm_bound: int, table: LiftTable | None = None) -> VerificationReport:
    """Compare normalized lift coefficients with the base-change Euler factors."""
    T = table or lift_table(cfg, norm_bound)
    rep = VerificationReport(f"base_change D={cfg.D} N={cfg.N} bound={norm_bound}")
    c = cfg.f0
    prov = ["lift coefficient formula", f"f0 table level {cfg.N}"]
    if T.indices:
        rep.exact("C(O_F) = 1", T.values[T.indices[0].mu], 1, prov)
    for p in primes_up_to(norm_bound):
        if p == 2:
            continue
        t = split_type(p, cfg.D)
        if cfg.N % p == 0:
            continue
        if t is SplitType.SPLIT:
            for tag, idx in zip("ab", T.of_norm(p)):
                rep.exact(f"split C(P_{p}:{tag}) = c({p})", T.values[idx.mu], c[p], prov)
        elif t is SplitType.INERT:
            if p * p <= norm_bound:
                (idx,) = T.of_norm(p * p)
                rhs = c[p] * c[p] - 2 * cfg.chi0_value(p)
                rep.exact(f"inert C({p}O) = c({p})^2 - 2 chi0({p})", T.values[idx.mu], rhs, prov)
        else:
            (idx,) = T.of_norm(p)
            rep.exact(f"ramified C(P_{p}) = c({p})", T.values[idx.mu], c[p], prov, severity="warning")
    # multiplicativity over coprime pairs of ideals
    bad = 0
    count = 0
    gens = [idx.mu for idx in T.indices]
    norms = [idx.ideal_norm for idx in T.indices]
    for i in range(1, len(gens)):
        for j in range(i, len(gens)):
            n = norms[i] * norms[j]
            if n > norm_bound:
                break
            if norms[i] > 1 and norms[j] > 1 and _coprime(gens[i], gens[j], norms[i], norms[j]):
                prod = canonical_associate(index_generator(gens[i] * gens[j]))
                count += 1
                if T.values[prod] != T.values[gens[i]] * T.values[gens[j]]:
                    bad += 1
                    rep.exact(f"C(ab) = C(a)C(b) for norms {norms[i]},{norms[j]}",
                              T.values[prod], T.values[gens[i]] * T.values[gens[j]], prov)
    rep.flag("multiplicativity over coprime ideals", bad == 0, {"pairs": count, "failures": bad}, prov)
    rep.constants["raw_unit_index"] = T.raw[T.indices[0].mu] if T.indices else None
    rep.constants["n_indices"] = len(T.indices)
    return rep


def _coprime(a: QuadFieldElement, b: QuadFieldElement, na: int, nb: int) -> bool:
    g = math.gcd(na, nb)
    if g == 1:
        return True
    # shared rational primes: coprime only if a and b sit over different split primes
    for p, _ in factorize(g):
        for pi in _norm_p_gens(a.D, p):
            if (a / pi).is_integral() and (b / pi).is_integral():
                return False
        if not _norm_p_gens(a.D, p):
            return False
    return True


def euler_factor_identity(c_p, chi_p) -> bool:
    """1 - C X^2 + chi^2 X^4 = (1 - c X + chi X^2)(1 + c X + chi X^2) with C = c^2 - 2 chi."""
    C = c_p * c_p - 2 * chi_p
    lhs = [1, 0, -C, 0, chi_p * chi_p]
    a = [1, -c_p, chi_p]
    b = [1, c_p, chi_p]
    rhs = [0] * 5
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            rhs[i + j] = rhs[i + j] + x * y
    return all(l == r for l, r in zip(lhs, rhs))


# ---------------------------------------------------------------------------
# archimedean polynomials

@dataclass(frozen=True)
class ArchPolynomial:
    """p^{delta,eps}(lambda) = -i (a - delta b + i eps (nu + delta nu'))."""

    delta: int
    eps: int

    def __post_init__(self):
        if self.delta not in (1, -1) or self.eps not in (1, -1):
            raise DomainError("delta and eps must be +1 or -1")

    def __call__(self, lam) -> complex:
        a, b, nu, nup = lam
        return -1j * (a - self.delta * b + 1j * self.eps * (nu + self.delta * nup))


def as_matrix(lam) -> np.ndarray:
    a, b, nu, nup = lam
    return np.array([[a, nu], [nup, b]], dtype=float)


def from_matrix(M) -> tuple:
    return (M[0, 0], M[1, 1], M[0, 1], M[1, 0])


def w1(lam):
    a, b, nu, nup = lam
    return (a, -b, nu, -nup)


def w2(lam):
    a, b, nu, nup = lam
    return (a, -b, -nu, nup)


def q_plus(lam, A: float = 1.0) -> float:
    a, b, nu, nup = lam
    return A / 2 * (a * a + b * b + nu * nu + nup * nup)


def q_form(lam, A: float = 1.0) -> float:
    a, b, nu, nup = lam
    return A * (a * b - nu * nup)


def phi_inf(delta: int, eps: int, lam, A: float = 1.0) -> complex:
    return ArchPolynomial(delta, eps)(lam) * math.exp(-2 * math.pi * q_plus(lam, A))


def phi_tau(delta: int, eps: int, tau: complex, lam, A: float = 1.0) -> complex:
    """omega(g_tau) phi_inf at lambda, g_tau = n(u) m(sqrt v)."""
    u, v = tau.real, tau.imag
    s = math.sqrt(v)
    scaled = tuple(s * x for x in lam)
    return v * np.exp(2j * math.pi * q_form(lam, A) * u) * phi_inf(delta, eps, scaled, A)


def _rot(t: float) -> np.ndarray:
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def arch_identity_check(trials: int = 1000, seed: int = 0, A: float = 1.0) -> VerificationReport:
    if trials < 1:
        raise DomainError("need at least one trial")
    rng = np.random.default_rng(seed)
    rep = VerificationReport(f"archimedean identities trials={trials} seed={seed}")
    e_w1 = e_w2 = e_k = e_tau = e_q = 0.0
    signs = [(d, e) for d in (1, -1) for e in (1, -1)]
    for _ in range(trials):
        lam = tuple(rng.normal(size=4))
        for d, e in signs:
            P = ArchPolynomial(d, e)
            e_w1 = max(e_w1, abs(P(w1(lam)) - ArchPolynomial(-d, e)(lam)))
            e_w2 = max(e_w2, abs(P(w2(lam)) - ArchPolynomial(-d, -e)(lam)))
            # weight (delta eps, eps) under (k1, k2): lambda -> k1 lambda k2^t
            t1, t2 = rng.uniform(0, 2 * math.pi, size=2)
            moved = from_matrix(_rot(t1) @ as_matrix(lam) @ _rot(t2).T)
            lhs = phi_inf(d, e, moved, A)
            rhs = np.exp(1j * (d * e * t1 + e * t2)) * phi_inf(d, e, lam, A)
            e_k = max(e_k, abs(lhs - rhs))
            e_q = max(e_q, abs(q_plus(moved, A) - q_plus(lam, A)))
            # g_tau1 g_tau2 = g_tau3 with tau3 = u1 + v1 u2 + i v1 v2
            u1, u2 = rng.normal(size=2)
            v1, v2 = rng.uniform(0.3, 3.0, size=2)
            tau2 = complex(u2, v2)
            tau3 = complex(u1 + v1 * u2, v1 * v2)
            s1 = math.sqrt(v1)
            inner = phi_tau(d, e, tau2, tuple(s1 * x for x in lam), A)
            composed = v1 * np.exp(2j * math.pi * q_form(lam, A) * u1) * inner
            e_tau = max(e_tau, abs(composed - phi_tau(d, e, tau3, lam, A)))
    prov = ["archimedean Schwartz polynomial", "w1/w2 substitution"]
    rep.close("p(w1 lambda) = p^{-delta,eps}(lambda)", e_w1, 0.0, 1e-12, prov, absolute=True)
    rep.close("p(w2 lambda) = p^{-delta,-eps}(lambda)", e_w2, 0.0, 1e-12, prov, absolute=True)
    rep.close("K_inf weight (delta eps, eps)", e_k, 0.0, 1e-10, prov, absolute=True)
    rep.close("Q_+ is K_inf invariant", e_q, 0.0, 1e-10, prov, absolute=True)
    rep.close("omega(g_tau1) omega(g_tau2) = omega(g_tau1 g_tau2)", e_tau, 0.0, 1e-12, prov, absolute=True)
    for d, e in signs:
        rep.close(f"p^{{{d},{e}}}(0) = 0", abs(ArchPolynomial(d, e)((0, 0, 0, 0))), 0.0, 1e-15, absolute=True)
    return rep
