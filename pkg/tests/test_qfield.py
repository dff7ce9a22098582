import math
from collections import Counter

import pytest

from dnlab.arith import DirichletCharacter, DomainError, divisors
from dnlab.qfield import (NARROW_CLASS_ONE, LiftIndex, QuadFieldElement as Q, SplitType,
                          UnsupportedConfiguration, canonical_associate, divisors_of_mu,
                          enumerate_lift_indices, fundamental_unit, split_type,
                          totally_positive_unit)


def ideal_count(n, D):
    chi = DirichletCharacter.quadratic(D)
    return sum(chi.int_value(d) for d in divisors(n))


def test_element_arithmetic():
    g = Q(5, 1, 1)
    assert g.norm() == -1
    assert g * g == g + 1
    assert (g / g) == 1
    assert Q(5, 3, 1).is_integral() and not Q(5, 1, 0).is_integral()
    assert Q(5, 2, 0).is_integral()
    assert abs(g.sigma1 * g.sigma2 - float(g.norm())) < 1e-12


def test_split_type():
    assert split_type(11, 5) is SplitType.SPLIT
    assert split_type(3, 5) is SplitType.INERT
    assert split_type(5, 5) is SplitType.RAMIFIED
    with pytest.raises(DomainError):
        split_type(2, 5)


def test_units():
    assert fundamental_unit(5) == Q(5, 1, 1)
    assert fundamental_unit(13) == Q(13, 3, 1)
    for D in NARROW_CLASS_ONE:
        assert fundamental_unit(D).norm() == -1
        assert totally_positive_unit(D).is_totally_positive()


def test_class_number_one_table_analytically():
    # h = sqrt(D) L(1, chi_D) / (2 log eps) via partial sums of the L-series
    for D in NARROW_CLASS_ONE:
        chi = DirichletCharacter.quadratic(D)
        X = 20000
        s = sum(chi.int_value(n) / n for n in range(1, X))
        h = math.sqrt(D) * s / (2 * math.log(fundamental_unit(D).sigma1))
        assert abs(h - 1) < 0.05


def test_enumeration_examples():
    (one,) = enumerate_lift_indices(5, 1)
    assert one.mu == Q(5, 1, 1) and one.ideal_norm == 1
    assert enumerate_lift_indices(5, 0) == []
    idx4 = [i for i in enumerate_lift_indices(5, 4) if i.ideal_norm == 4]
    assert len(idx4) == 1 and idx4[0].mu == Q(5, 2, 2)


@pytest.mark.parametrize("D,bound", [(5, 200), (13, 200), (17, 120)])
def test_counts_match_ideal_counts(D, bound):
    counts = Counter(i.ideal_norm for i in enumerate_lift_indices(D, bound))
    for n in range(1, bound + 1):
        assert counts[n] == ideal_count(n, D), n


def test_index_invariants():
    for idx in enumerate_lift_indices(5, 300):
        mu = idx.mu
        assert mu.sign(1) > 0 > mu.sign(2)
        assert idx.ideal_norm == -mu.norm()
        assert 5 * idx.nu.norm() == -mu.norm()
        assert idx.nu.is_totally_positive()


def test_canonical_idempotent():
    u = fundamental_unit(5)
    for idx in enumerate_lift_indices(5, 100):
        for k in range(-3, 4):
            moved = idx.mu * u ** (2 * k)
            assert canonical_associate(moved) == idx.mu
            assert canonical_associate(canonical_associate(moved)) == idx.mu


def test_unsupported_D():
    with pytest.raises(UnsupportedConfiguration):
        enumerate_lift_indices(21, 10)
    with pytest.raises(DomainError):
        enumerate_lift_indices(6, 10)


def test_divisors_of_mu():
    assert divisors_of_mu(LiftIndex(Q(5, 1, 1))) == [1]
    assert divisors_of_mu(LiftIndex(Q(5, 3, 3))) == [1, 3]
    assert divisors_of_mu(LiftIndex(Q(5, 0, 2))) == [1]
    assert divisors_of_mu(LiftIndex(Q(5, 2, 2))) == [1, 2]


def test_divisors_brute_force():
    for idx in enumerate_lift_indices(13, 150):
        mu = idx.mu
        brute = [d for d in range(1, idx.ideal_norm + 1) if Q(13, mu.x / d, mu.y / d).is_integral()]
        assert divisors_of_mu(idx) == brute
