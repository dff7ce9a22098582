import random

import pytest

from dnlab.arith import DomainError, kronecker, primes_up_to
from dnlab.forms import (BQForm, bqf_rep_count, class_number, dihedral_coeffs, eta_product_coeffs,
                         export_qexp, import_qexp, parse_qexp, reduced_forms)


def naive_reps(Q, n, box=60):
    return sum(1 for x in range(-box, box + 1) for y in range(-box, box + 1) if Q(x, y) == n)


def naive_eta_23(bound):
    # q * prod (1 - q^n)(1 - q^{23 n}) by repeated polynomial multiplication
    series = [0] * (bound + 1)
    series[1] = 1
    for d in (1, 23):
        for n in range(1, bound + 1):
            if d * n > bound:
                break
            new = series[:]
            for k in range(d * n, bound + 1):
                new[k] -= series[k - d * n]
            series = new
    return series


def test_rep_counts():
    P, R = BQForm(1, 1, 6), BQForm(2, 1, 3)
    assert bqf_rep_count(P, 0) == 1
    assert bqf_rep_count(R, 2) == 2
    # (0, +-1) and (1, -1), (-1, 1)
    assert bqf_rep_count(P, 6) == 4
    for n in range(0, 80):
        assert bqf_rep_count(P, n) == naive_reps(P, n)
        assert bqf_rep_count(R, n) == naive_reps(R, n)


def test_reduced_forms():
    assert reduced_forms(-23) == [BQForm(1, 1, 6), BQForm(2, -1, 3), BQForm(2, 1, 3)]
    assert class_number(-23) == 3 and class_number(-115) == 2 and class_number(-3) == 1
    assert not BQForm(2, -2, 3).is_reduced() and BQForm(2, 1, 3).is_reduced()


def test_dihedral_examples():
    f = dihedral_coeffs(-23, 100)
    assert f[1] == 1 and f[2] == -1 and f[4] == 0 and f[25] == 1
    assert f.level == 23 and f.character.modulus == 23
    with pytest.raises(DomainError):
        dihedral_coeffs(-115, 10)


def test_eta_examples():
    e = eta_product_coeffs([(1, 1), (23, 1)], 30)
    assert e[0] == 0 and e[1] == 1 and e[3] == -1
    with pytest.raises(DomainError):
        eta_product_coeffs([(1, 1)], 10)
    # eta(z)^24 has coefficients of Delta: tau(2) = -24, tau(3) = 252
    d = eta_product_coeffs([(1, 24)], 5)
    assert d[1:4] == [1, -24, 252]
    # inverse power: eta(z)^-24 eta(z)^48 = eta(z)^24
    assert eta_product_coeffs([(1, -24), (1, 48)], 5) == d


def test_eta_equals_naive_product():
    assert eta_product_coeffs([(1, 1), (23, 1)], 400) == naive_eta_23(400)


def test_dihedral_equals_eta():
    f = dihedral_coeffs(-23, 2000)
    e = eta_product_coeffs([(1, 1), (23, 1)], 2000)
    assert all(f[n] == e[n] for n in range(1, 2001))


def test_prime_coefficients():
    f = dihedral_coeffs(-23, 1000)
    P = BQForm(1, 1, 6)
    for p in primes_up_to(1000):
        if p == 23:
            continue
        assert f[p] in (-1, 0, 1, 2)
        assert (f[p] == 2) == (bqf_rep_count(P, p) > 0)
        if kronecker(-23, p) == -1:
            assert f[p] == 0


def test_table_invariants():
    f = dihedral_coeffs(-23, 600)
    assert f.check_invariants() == []
    rng = random.Random(7)
    for _ in range(200):
        m, n = rng.randint(1, 24), rng.randint(1, 24)
        from math import gcd
        if gcd(m, n) == 1:
            assert f[m * n] == f[m] * f[n]


def test_import(tmp_path):
    p = tmp_path / "f.txt"
    p.write_text("1 1\n2 -1\n3 -1\n")
    t = import_qexp(p)
    assert t[2] == -1 and not t.warnings
    p.write_text("1 1\n2 -1\n3 -1\n4 0\n5 0\n6 3\n")
    assert any("c(6)" in w for w in import_qexp(p).warnings)
    p.write_text("")
    with pytest.raises(DomainError):
        import_qexp(p)


def test_import_errors_carry_line_numbers():
    with pytest.raises(DomainError, match="line 2"):
        parse_qexp("1 1\nx 3\n")
    with pytest.raises(DomainError, match="line 3"):
        parse_qexp("1 1\n2 1\n2 1\n")
    with pytest.raises(DomainError, match="line 2"):
        parse_qexp("1 1\n2 1+z\n")


def test_zeta_roundtrip(tmp_path):
    t = parse_qexp("#zeta 4\n1 1\n2 -1+z\n3 2*z^3-1\n")
    text = export_qexp(t.values, zeta=4)
    back = parse_qexp(text)
    assert back.values == t.values
    assert abs(t[2].to_complex() - (-1 + 1j)) < 1e-12


def test_dihedral_export_roundtrip(tmp_path):
    f = dihedral_coeffs(-23, 200)
    path = tmp_path / "f0.txt"
    export_qexp(f.values, path)
    g = import_qexp(path, f.character, 23)
    assert g.values == f.values and g.warnings == []
