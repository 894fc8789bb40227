# tests/test_padic_core.py

import random
from fractions import Fraction

import pytest

import errors
from conftest import N, padic
from padic_core import (LogBranch, PadicNumber, Qp2Number, branch_log, exp_p, iwasawa_log,
                        qp2_nonresidue, teichmuller)


def test_from_rational_normal_form():
    x = PadicNumber.from_rational(Fraction(10), 5, 4)
    assert (x.v, x.u) == (1, 2)
    y = PadicNumber.from_rational(Fraction(1, 3), 3, 5)
    assert str(y) == "3^-1 * 1 + O(3^5)"


def test_addition_cancels_to_one():
    third = PadicNumber.from_rational(Fraction(1, 3), 3, 5)
    two_thirds = PadicNumber.from_rational(Fraction(2, 3), 3, 5)
    assert third + two_thirds == PadicNumber.one(3, 5)


def test_exact_constants_do_not_limit_precision():
    x = PadicNumber.one(3, 5)
    assert (x * 3).N == 6
    assert (x * 3).v == 1


def test_zero_keeps_its_precision():
    z = PadicNumber.zero(5, 7)
    assert z.is_zero()
    assert str(z) == "0 + O(5^7)"
    assert (z + PadicNumber.one(5, 3)).N == 3


def test_division_keeps_the_smaller_relative_precision():
    # 2/5 carries 13 relative digits, 2 carries 12
    q = padic(Fraction(2, 5), 5) / padic(2, 5)
    assert (q.v, q.N) == (-1, N - 1)
    assert q.is_close(padic(Fraction(1, 5), 5), N - 1)
    assert (padic(Fraction(2, 5), 5) / 2).N == N


def test_division_by_zero():
    with pytest.raises(errors.DivisionByZero):
        PadicNumber.one(3, 5) / PadicNumber.zero(3, 5)


def test_prime_mismatch():
    with pytest.raises(errors.PrimeMismatch):
        PadicNumber.one(3, 5) + PadicNumber.one(5, 5)


@pytest.mark.parametrize("text", ["3^2 * 7 + O(3^9)", "0 + O(3^4)", "3^-1 * 2 + O(3^6)"])
def test_parse_tagged(text):
    assert str(PadicNumber.parse(text)) == text


def test_parse_rational_needs_prime():
    assert PadicNumber.parse("13/2", 3, 10) == PadicNumber.from_rational(Fraction(13, 2), 3, 10)
    with pytest.raises(errors.InvalidFile):
        PadicNumber.parse("13/2")
    with pytest.raises(errors.PrimeMismatch):
        PadicNumber.parse("5^0 * 1 + O(5^3)", 3)


def test_unit_part_and_residue():
    x = padic(Fraction(18, 5), 3)
    assert x.v == 2
    assert x.unit_part().v == 0
    assert x.residue() == (2 * pow(5, -1, 3)) % 3


@pytest.mark.parametrize("p", [3, 5, 7, 11])
def test_teichmuller_is_a_root_of_unity(p):
    for a in range(1, p):
        t = teichmuller(a, p, N)
        assert t.residue() == a
        assert (t ** (p - 1) - 1).is_zero()


def test_teichmuller_rejects_multiples_of_p():
    with pytest.raises(errors.ZeroResidue):
        teichmuller(6, 3)


@pytest.mark.parametrize("p", [3, 5, 7])
def test_exp_inverts_log(p):
    rng = random.Random(p)
    for _ in range(30):
        x = PadicNumber.make(p, N, 0, 1 + p * rng.randrange(p ** (N - 1)))
        assert exp_p(iwasawa_log(x)).agreement(x) >= N - 1


@pytest.mark.parametrize("p", [3, 5])
def test_log_is_a_homomorphism(p):
    rng = random.Random(10 + p)
    for _ in range(20):
        x = padic(rng.randrange(1, 10 ** 6) * p + 1, p)
        y = padic(rng.randrange(1, 10 ** 6) * p + 2, p)
        lhs = iwasawa_log(x * y)
        rhs = iwasawa_log(x) + iwasawa_log(y)
        assert lhs.agreement(rhs) >= N - 2


def test_log_of_p_and_roots_of_unity_vanish():
    assert iwasawa_log(padic(3, 3)).is_zero()
    assert iwasawa_log(teichmuller(2, 5, N)).is_zero()


def test_exp_outside_the_disc():
    with pytest.raises(errors.ConvergenceDomain):
        exp_p(padic(2, 3))


def test_branch_log_kills_u():
    u = padic(3 * 4, 3)
    branch = LogBranch(3, u)
    assert branch_log(branch, u).is_zero()
    # log_u(p) = -log(4) since u = 3 * 4
    assert branch_log(branch, padic(3, 3)).agreement(-iwasawa_log(padic(4, 3))) >= N - 2


def test_branch_grammar():
    assert LogBranch.parse("iwasawa", 5, N).u == padic(5, 5)
    assert LogBranch.parse("u:15", 5, N).u == padic(15, 5)
    with pytest.raises(errors.UsageError):
        LogBranch.parse("natural", 5, N)
    with pytest.raises(errors.UsageError):
        LogBranch.parse("u:2", 5, N)


def test_branch_needs_positive_valuation():
    with pytest.raises(errors.ValidationError):
        LogBranch(3, padic(2, 3))


def test_log_of_zero():
    with pytest.raises(errors.ZeroInput):
        iwasawa_log(PadicNumber.zero(3, 5))


@pytest.mark.parametrize("p, d", [(3, -1), (7, -1), (5, 2), (13, 2)])
def test_qp2_nonresidue(p, d):
    assert qp2_nonresidue(p) == d


def test_qp2_arithmetic():
    w = Qp2Number.omega(3, N)
    square = w * w
    assert square.a.is_close(padic(-1, 3), N - 1)
    assert square.b.is_close(padic(0, 3), N - 1)
    z = Qp2Number.from_parts(1, 1, 3, N)
    assert z.norm() == padic(2, 3)
    assert z.trace() == padic(2, 3)
    assert (z / z).is_close(1, N - 2)
