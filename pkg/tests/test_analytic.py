import math
import random
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from dnlab.analytic import (ad0_L1, ad0_twist_L1, dedekind_sum, dirichlet_L1, dirichlet_L1_series,
                            eta, eta_multiplier, eta_series, example_fields, gamma0_cosets,
                            is_fundamental, modular_L1, petersson_eta23, quadratic_class_number,
                            trivial_table, verify_motivic_chain)
from dnlab.arith import DomainError, kronecker
from dnlab.forms import dihedral_coeffs

LOG_EPS = math.log(1.3247179572447460)


@pytest.fixture(scope="module")
def f0():
    return dihedral_coeffs(-23, 2000)


def mp_L1(disc):
    """L(1, chi) = -(1/q) sum chi(a) digamma(a/q)."""
    q = abs(disc)
    return float(-sum(kronecker(disc, a) * mpmath.digamma(mpmath.mpf(a) / q) for a in range(1, q)) / q)


def test_closed_forms():
    assert abs(dirichlet_L1(-23).value - 3 * math.pi / math.sqrt(23)) < 1e-14
    assert abs(dirichlet_L1(-115).value - 2 * math.pi / math.sqrt(115)) < 1e-14
    assert abs(dirichlet_L1(5).value - 0.430409) < 1e-6
    with pytest.raises(DomainError):
        dirichlet_L1(20)


@pytest.mark.parametrize("disc", [d for d in range(-200, 201) if is_fundamental(d)])
def test_dirichlet_against_mpmath(disc):
    assert abs(dirichlet_L1(disc).value - mp_L1(disc)) / mp_L1(disc) < 1e-6


def test_class_numbers_known():
    # small tabulated values
    table = {-23: 3, -47: 5, -71: 7, -199: 9, 5: 1, 65: 2, 145: 4, 229: 3, 136: 2, 12: 1}
    for d, h in table.items():
        assert quadratic_class_number(d) == h


def test_series_doubling_bound():
    r = dirichlet_L1_series(-23, terms=10)
    r2 = dirichlet_L1_series(-23, terms=20)
    assert abs(r.value - r2.value) <= r.error_estimate + 1e-15


def test_modular_L1_split_invariance(f0):
    a = modular_L1(f0, 23)
    b = modular_L1(f0, 23, split=1.25)
    assert abs(a.value - b.value) < 1e-12
    assert abs(a.value - 2 * math.pi * LOG_EPS / math.sqrt(23)) < 1e-10
    # the wrong root number breaks the invariance
    c = modular_L1(f0, 23, root_number=-1, split=1.25)
    d = modular_L1(f0, 23, root_number=-1)
    assert abs(c.value - d.value) > 1e-3


def test_modular_L1_twist(f0):
    a = modular_L1(f0, 23, twist=5)
    b = modular_L1(f0, 23, twist=5, split=0.8)
    assert abs(a.value - b.value) / a.value < 1e-10
    assert a.error_estimate / a.value < 1e-4


def test_modular_L1_bound_error():
    small = dihedral_coeffs(-23, 30)
    with pytest.raises(DomainError, match="needs bound"):
        modular_L1(small, 23)


def test_trivial_table_single_term():
    A = 1 / (2 * math.pi)
    weight = math.exp(-1 / A) + exp1_oracle(1 / A) / A
    assert abs(modular_L1(trivial_table(), 1).value - weight) < 1e-15
    with pytest.raises(DomainError):
        modular_L1(trivial_table(5), 1)


def exp1_oracle(x):
    return float(mpmath.e1(x))


def test_ad0_values(f0):
    a = ad0_L1(-23, f0)
    assert abs(a.value - 0.72400) < 1e-5
    assert abs(a.value * 23 / (6 * math.pi ** 2 * LOG_EPS) - 1) < 1e-4
    t = ad0_twist_L1(-23, 5, f0)
    assert t.value > 0
    ref = modular_L1(f0, 23, twist=5).value * 2 * math.pi / math.sqrt(115)
    assert abs(t.value - ref) < 1e-12
    with pytest.raises(DomainError):
        ad0_twist_L1(-23, 23, f0)


def cot_dedekind(h, k):
    return sum(mpmath.cot(mpmath.pi * r / k) * mpmath.cot(mpmath.pi * h * r / k) for r in range(1, k)) / (4 * k)


def test_dedekind_sum_cot_formula():
    for k in range(2, 15):
        for h in range(1, k):
            if math.gcd(h, k) == 1:
                assert abs(float(dedekind_sum(h, k)) - float(cot_dedekind(h, k))) < 1e-12
    assert dedekind_sum(1, 3) == Fraction(1, 18)


def test_eta_transformation():
    rng = random.Random(2)
    mats = [(1, 0, 1, 1), (2, 1, 3, 2), (5, 2, 7, 3), (0, -1, 1, 0), (3, -1, 7, -2)]
    for a, b, c, d in mats:
        for _ in range(4):
            t = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.5))
            Mt = (a * t + b) / (c * t + d)
            lhs = complex(eta_series(np.array([Mt]), terms=200)[0])
            rhs = eta_multiplier(a, b, c, d) * np.sqrt(-1j * (c * t + d)) * complex(eta_series(np.array([t]))[0])
            assert abs(lhs - rhs) < 1e-10 * abs(rhs)


def test_eta_reduction_matches_series():
    for t in (0.1 + 0.05j, -0.31 + 0.02j, 0.45 + 0.3j):
        direct = complex(mpmath.exp(2j * mpmath.pi * t / 24) *
                         mpmath.qp(mpmath.exp(2j * mpmath.pi * t)))
        assert abs(eta(t) - direct) < 1e-9 * abs(direct)


def test_cosets():
    cs = gamma0_cosets(23)
    assert len(cs) == 24
    rows = {(c % 23, d % 23) for _, _, c, d in cs}
    assert len(rows) == 24


def test_petersson():
    r = petersson_eta23()
    assert abs(r.value / (3 * LOG_EPS) - 1) < 0.005
    assert abs(r.adelic_normalized - 0.017575) < 1e-6
    assert r.value == r.adelic_normalized * 48
    assert r.converged


def test_motivic_chain():
    rep = verify_motivic_chain()
    assert rep.ok
    assert rep.get("(i) <f0,f0> / log eps is a small-denominator rational").lhs["rational"] == Fraction(1, 16)
    assert rep.constants["(ii) tight recognition"] == Fraction(16, 115)


def test_example_fields_partial():
    ex = example_fields(coeff_bound=1)
    assert ex.delta is None
    rep = verify_motivic_chain(fields=ex, petersson=petersson_eta23(24, 24))
    assert rep.status == "partial"
