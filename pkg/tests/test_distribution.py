# tests/test_distribution.py

from fractions import Fraction

import pytest

import errors
import harmonic
from bt_tree import INFINITY, Disc, TwistedMatrix, edge_to_disc, standard_edge
from conftest import N, padic
from distribution import (LocallyAnalyticFunction, PolyPiece, TreeDistribution, boundary_points_check,
                          indicator_piece, integrate, j_of_q, j_times_q_series, l_invariant, lambda_value,
                          q_of_s_series, schneider_value, tate_parameter, telescoped_lambda_check,
                          vanishing_check)
from padic_core import LogBranch, PadicNumber, Qp2Number, branch_log

WEIGHT_FOUR_ATOMS = {Fraction(0): 1, Fraction(1): -3, Fraction(2): 3, Fraction(3): -1}


@pytest.fixture
def weight_four():
    return harmonic.boundary_cocycle(3, 4, WEIGHT_FOUR_ATOMS, 6)


def test_moments_are_additive(weight_four):
    d = TreeDistribution(weight_four)
    for m in range(1, 5):
        for e in d.cover(m):
            disc = edge_to_disc(e)
            if disc.outer:
                continue
            for j in range(3):
                children = sum((d.moment(child, j) for child in disc.children()), Fraction(0))
                assert d.moment(disc, j) == children


def test_moment_index_range(axis3):
    d = TreeDistribution(axis3)
    assert d.moment(Disc(3, 0, 0), 0) == 1
    with pytest.raises(errors.BadMomentIndex):
        d.moment(Disc(3, 0, 0), 1)


def test_total_mass_vanishes(axis3, weight_four):
    assert TreeDistribution(axis3).total_mass() == (0,)
    assert TreeDistribution(weight_four).total_mass() == (0, 0, 0)


def test_growth_constant_bounds_the_moments(weight_four):
    d = TreeDistribution(weight_four)
    A = d.growth_constant(4)
    assert A > 0
    assert d.growth_bound_holds(A, 4)


def test_polynomials_integrate_exactly(weight_four):
    d = TreeDistribution(weight_four)
    on_3z3 = lambda coeffs: LocallyAnalyticFunction(3, [(Disc(3, 0, 1), PolyPiece(coeffs))])
    # atoms 0 (weight 1) and 3 (weight -1) lie in 3Z_3
    assert integrate(d, on_3z3((1,)), 4).value == 0
    assert integrate(d, on_3z3((0, 1)), 4).value == -3
    assert integrate(d, on_3z3((0, 0, 1)), 4).value == -9


def test_straddling_cover_disc(axis3):
    f = LocallyAnalyticFunction(3, [(Disc(3, 0, 3), indicator_piece())])
    with pytest.raises(errors.DepthTooShallow):
        integrate(TreeDistribution(axis3), f, 1)


def test_depth_beyond_the_table(axis3):
    with pytest.raises(errors.DepthTooShallow):
        TreeDistribution(axis3).cover(axis3.depth + 1)


def test_vanishing_with_a_p1_coordinate():
    q = padic(3, 3)
    multi = harmonic.MultiCocycle([harmonic.axis_cocycle(3, q, 5), harmonic.axis_cocycle(3, q, 5)])
    g = LocallyAnalyticFunction(3, [(Disc(3, 0, 1), indicator_piece())])
    assert vanishing_check(multi, [g], 0, 5).value == 0
    with pytest.raises(errors.BadMomentIndex):
        vanishing_check(multi, [g], 1, 5)


def test_schneider_value_counts_the_translation_length():
    c = harmonic.axis_cocycle(3, padic(36, 3), 4)
    assert schneider_value(c, c.gamma) == 2


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("k", [1, 2])
def test_axis_l_invariant(p, k):
    qt = padic(p ** k * (1 + p), p)
    c = harmonic.axis_cocycle(p, qt, 4)
    branch = LogBranch(p, padic(p, p))
    L = l_invariant(c, c.gamma, branch, 4)
    oracle = branch_log(branch, qt) / k
    assert L.value.agreement(oracle) >= N - 5


def test_axis_l_invariant_with_qtilde_p_is_zero():
    c = harmonic.axis_cocycle(3, padic(3, 3), 4)
    L = l_invariant(c, c.gamma, LogBranch.iwasawa(3, N), 4)
    assert L.value.is_zero() or L.value.v >= N - 5


def test_two_point_oracle(axis3, iwasawa3):
    atoms = {Fraction(0): 1, INFINITY: -1}
    oracle, riemann, agreement = boundary_points_check(axis3, atoms, axis3.gamma, iwasawa3, 6)
    assert agreement >= N - 5
    assert oracle.agreement(riemann.value) == agreement


def test_zero_schneider_value(iwasawa3):
    c = harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 2: -1}, 5, axis_weight=0)
    with pytest.raises(errors.ZeroSchneider):
        l_invariant(c, c.gamma, iwasawa3, 5)


def test_orbit_l_invariant_is_the_closed_form(periodic3, iwasawa3):
    # lambda = log(qtilde) + log(1) - log(2) against a Schneider value of 1
    expected = branch_log(iwasawa3, padic(12, 3)) - branch_log(iwasawa3, padic(2, 3))
    L = l_invariant(periodic3, periodic3.gamma, iwasawa3, 7, method="orbit")
    assert L.value.agreement(expected) >= N - 2
    assert L.digits >= N - 2
    assert l_invariant(periodic3, periodic3.gamma, iwasawa3, 7, method="auto").value == L.value
    assert l_invariant(periodic3.scale(3), periodic3.gamma, iwasawa3, 7, method="orbit").value.agreement(
        L.value) >= N - 2


def test_riemann_sums_approach_the_orbit_closed_form(periodic3, iwasawa3):
    exact = l_invariant(periodic3, periodic3.gamma, iwasawa3, 7, method="orbit").value
    summed = l_invariant(periodic3, periodic3.gamma, iwasawa3, 7).value
    assert summed.agreement(exact) >= 7 - 4


def test_orbit_l_invariant_preconditions(periodic3, iwasawa3):
    with pytest.raises(errors.UsageError):
        l_invariant(periodic3, periodic3.gamma, iwasawa3, 5, method="simpson")
    # A perturbed table no longer remembers its boundary measure
    bent = periodic3.with_value(standard_edge(3), (Fraction(5),))
    with pytest.raises(errors.ValidationError):
        l_invariant(bent, bent.gamma, iwasawa3, 5, method="orbit")
    with pytest.raises(errors.ValidationError):
        l_invariant(periodic3, periodic3.gamma ** 2, iwasawa3, 5, method="orbit")


def test_coleman_integral_preconditions(axis3, iwasawa3):
    with pytest.raises(errors.Z0InQp):
        lambda_value(axis3, axis3.gamma, iwasawa3, Qp2Number.from_parts(1, 0, 3, N), 4)
    c4 = harmonic.boundary_cocycle(3, 4, WEIGHT_FOUR_ATOMS, 4)
    with pytest.raises(errors.ValidationError):
        lambda_value(c4, TwistedMatrix.identity(), iwasawa3)


def test_j_series():
    assert j_times_q_series(4) == [1, 744, 196884, 21493760]
    assert q_of_s_series(3)[1:] == [1, 744, 750420]


def test_tate_parameter_inverts_j():
    j = PadicNumber.make(3, 10, -5, 2)
    q = tate_parameter(j)
    assert q.v == 5
    assert j_of_q(q).agreement(j) >= j.N - 3


def test_tate_parameter_needs_a_pole():
    with pytest.raises(errors.IntegralJInvariant):
        tate_parameter(padic(2, 3))


def test_telescoped_identity_needs_vanishing_endpoint_mass(periodic3, iwasawa3):
    _, tele, mass = telescoped_lambda_check(periodic3, iwasawa3, 5)
    assert tele is None
    assert mass != 0


def test_telescoped_integral_over_the_fundamental_domain(iwasawa3):
    # atoms 1 and 2 are the only mass in {v(x) = 0}
    c = harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 2: -1}, 5, axis_weight=0)
    _, tele, mass = telescoped_lambda_check(c, iwasawa3, 5)
    assert mass == 0
    assert tele.value.agreement(-branch_log(iwasawa3, padic(2, 3))) >= N - 3
