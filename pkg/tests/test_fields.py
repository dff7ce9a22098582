import math
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy

from dnlab.arith import DomainError
from dnlab.fields import (UnitSystem, baker_heuristic, compositum, exact_norm,
                          nf_create, recognize, recognize_rational, regulator, relative_norm,
                          unit_lattice_basis, unit_search, field_json)

PHI = (1 + 5 ** 0.5) / 2


@pytest.fixture(scope="module")
def K():
    return nf_create([1, 0, -1, -1], "K")


@pytest.fixture(scope="module")
def F():
    return nf_create([1, 0, -5], "F")


@pytest.fixture(scope="module")
def FK(K, F):
    return compositum(K, F, "FK")


def test_signatures(K, F):
    assert K.signature == (1, 1)
    assert abs(K.embeddings[0] - 1.3247179572447460) < 1e-14
    assert F.signature == (2, 0)
    assert nf_create([1, 0, 115]).signature == (0, 1)
    # deterministic ordering: reals descending, then upper half-plane
    assert F.embeddings[0].real > F.embeddings[1].real
    assert K.embeddings[1].imag > 0


def test_vieta_against_sympy(K):
    x = sympy.Symbol("x")
    exact = sympy.Poly(x ** 3 - x - 1, x).nroots(n=30)
    for z in exact:
        assert min(abs(complex(z) - r) for r in K.roots) < 1e-14


def test_reducible_rejected():
    with pytest.raises(DomainError):
        nf_create([1, 0, -4])
    with pytest.raises(DomainError):
        nf_create([2, 0, -1])


def test_exact_norms(K):
    eps = K.gen()
    assert exact_norm(eps) == 1
    golden = nf_create([1, -1, -1]).gen()
    assert exact_norm(golden) == -1
    assert exact_norm(K([Fraction(3, 2)])) == Fraction(27, 8)


def test_norm_multiplicative_and_float_product(K):
    rng = random.Random(4)
    for _ in range(25):
        a = K([rng.randint(-5, 5) for _ in range(3)])
        b = K([Fraction(rng.randint(-5, 5), rng.randint(1, 3)) for _ in range(3)])
        assert exact_norm(a * b) == exact_norm(a) * exact_norm(b)
        assert abs(float(exact_norm(a)) - a.norm_float()) < 0.5


def test_charpoly_matches_sympy(K):
    e = K([1, -2, 3])
    M = sympy.Matrix(e.matrix())
    ref = M.charpoly().all_coeffs()
    assert [Fraction(int(c)) for c in ref] == e.charpoly()


def test_inverse(K):
    e = K([2, 1, -1])
    assert e * e.inverse() == 1
    with pytest.raises(ZeroDivisionError):
        K([0]).inverse()


def test_unit_search_small_fields(K):
    units = unit_search(K, 2)
    eps = K.gen()
    lv = eps.log_vector()
    assert any(np.allclose(np.abs(u.log_vector()), np.abs(lv)) for u in units)
    gF = nf_create([1, -1, -1])
    assert any(np.allclose(np.abs(u.log_vector()), [math.log(PHI)] * 2) for u in unit_search(gF, 2))


def test_compositum_structure(FK, K, F):
    L, a, b = FK
    assert L.degree == 6 and L.signature == (2, 2)
    # sigma_1, sigma_2 lie over the real place of K; sigma_3 agrees with sigma_1 on F
    e_a, e_b = a.embed(), b.embed()
    assert abs(e_a[0] - e_a[1]) < 1e-12
    assert abs(e_b[0] - e_b[2]) < 1e-12
    assert abs(e_b[0] + e_b[1]) < 1e-12


def test_relative_norms(FK, K):
    L, a, b = FK
    assert relative_norm(L([2]), 0) == K([4])
    assert relative_norm(a, 0) == K.gen() ** 2
    assert relative_norm(b, 0) == K([-5])


def product_basis(a, b):
    return [a ** i * b ** j for j in range(2) for i in range(3)]


@pytest.fixture(scope="module")
def fk_units(FK):
    L, a, b = FK
    return unit_search(L, 2, product_basis(a, b))


def test_relative_unit_found(FK, fk_units, K):
    L, a, b = FK
    rel = [u for u in fk_units if relative_norm(u, 0) == K([-1])]
    assert rel
    # a direct oracle: the float relative norm of the chosen unit
    d = rel[0].conjugates()
    groups = {}
    for r, (i, _) in enumerate(L.pairs):
        groups.setdefault(i, 1)
        groups[i] *= d[r]
    assert all(abs(v + 1) < 1e-9 for v in groups.values())


def test_regulators_direct(K, F):
    gF = nf_create([1, -1, -1])
    assert abs(regulator(UnitSystem(gF, [gF.gen()])) - 0.4812118250596034) < 1e-12
    assert abs(regulator(UnitSystem(K, [K.gen()])) - math.log(1.3247179572447460)) < 1e-12


def test_fk_regulator_identity(FK, fk_units, K):
    L, a, b = FK
    delta = next(u for u in fk_units if relative_norm(u, 0) == K([-1])
                 and abs(abs(u.embed()[0]) - abs(u.embed()[2])) > 1e-6)
    system = UnitSystem(L, [a, (1 + b) / 2, delta])
    e = delta.embed()
    target = 4 * math.log(1.3247179572447460) * math.log(PHI) * abs(math.log(abs(e[0] / e[2])))
    reg = regulator(system)
    assert abs(reg - target) / target < 1e-8
    for drop in range(4):
        assert abs(system.regulator(drop) - reg) < 1e-10
    # the searched units span the same lattice
    idx = unit_lattice_basis(fk_units)
    assert len(idx) == 3
    assert abs(UnitSystem(L, [fk_units[i] for i in idx]).regulator() - reg) < 1e-9


def test_dependent_units_flagged(K, FK):
    L, a, b = FK
    with pytest.raises(DomainError):
        regulator(UnitSystem(L, [a, a * a, (1 + b) / 2]))


def test_hilbert_class_field_regulator(K):
    M = nf_create([1, 0, 23], "M")
    L, a1, s = compositum(K, M, "L")
    assert L.signature == (0, 3)
    a2 = (-a1 + s / (3 * a1 * a1 - 1)) / 2
    assert a2 ** 3 - a2 - 1 == 0 and a2 != a1
    dl = a2.inverse()
    assert exact_norm(dl) in (1, -1)
    assert relative_norm(dl, 0) == K.gen()
    reg = regulator(UnitSystem(L, [a1, dl]))
    assert abs(reg - 3 * math.log(1.3247179572447460) ** 2) / reg < 1e-8


def test_recognize_grid():
    for q in range(1, 51):
        for p in range(-2 * q, 2 * q + 1):
            if math.gcd(p, q) == 1:
                assert recognize_rational(p / q + 3e-11, 50, 1e-9) == Fraction(p, q)


def test_recognize_examples():
    assert recognize_rational(0.333333333, 100, 1e-6) == Fraction(1, 3)
    assert recognize_rational(math.pi, 10 ** 4, 1e-9) is None
    # the tolerance is absolute below 1, so a coarse convergent can win
    assert recognize_rational(16 / 115, 100, 1e-3) == Fraction(5, 36)
    assert recognize_rational(16 / 115, 100, 1e-9) is None
    r = recognize(16 / 115, 100, 1e-4)
    assert r.value is None and r.near_miss
    assert recognize_rational(16 / 115, 1000, 1e-12) == Fraction(16, 115)
    with pytest.raises(DomainError):
        recognize(float("nan"), 10, 1e-3)


def test_baker_heuristic():
    le = math.log(1.3247179572447460)
    assert not baker_heuristic(le, le, 10).ok
    assert baker_heuristic(le, math.log(PHI), 100).ok
    # at q <= 10^4 and 1e-8 a convergent of the ratio does fall within tolerance
    x = le / math.log(PHI)
    oracle = Fraction(x).limit_denominator(10 ** 4)
    assert abs(float(oracle) - x) < 1e-8
    rep = baker_heuristic(le, math.log(PHI), 10 ** 4)
    assert not rep.ok
    assert rep.checks[0].lhs["found"] == Fraction(3377, 5779)


def test_json(K):
    text = field_json(K, [K.gen()])
    assert '"minpoly": [1, 0, -1, -1]' in text
