# tests/test_theta.py

from fractions import Fraction

import pytest

import errors
import harmonic
from anticyclo import Direction, FiniteCharacter, LinearLogFunctional, cyclic_tower
from conftest import N, padic
from padic_core import LogBranch, PadicNumber
from theta import (GrossPointData, MultiplierParams, L_series, L_value, build_gross_data_from_cocycle, family_value,
                   check_compatibility, integrate_log_power, leading_term_check, multiplier_display,
                   multiplier_e, representative_logs, script_L, series_at, square_series, theta_element,
                   transfer_check)

THIRD = Fraction(1, 3)


def uniform_data():
    tower = cyclic_tower(5, 2, finite_order=2)
    values = {}
    for level in tower.levels:
        G = tower.group(level)
        values[level] = {x: padic(Fraction(1, G.size), 5) for x in G.elements()}
    return GrossPointData(tower, {5: padic(1, 5)}, {5: True}, values)


def alpha_two_data():
    tower = cyclic_tower(5, 1)
    values = {(0,): {(): padic(1, 5)}, (1,): {(a,): padic(Fraction(2, 5), 5) for a in range(5)}}
    return GrossPointData(tower, {5: padic(2, 5)}, {5: True}, values)


@pytest.fixture(scope="module")
def built():
    c = harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 2: -1}, 7)
    return c, build_gross_data_from_cocycle([c], 4, N=N)


def test_uniform_data_is_compatible():
    data = uniform_data()
    assert data.validate() == []
    assert check_compatibility(data, (1,), (0,))
    assert check_compatibility(data, (2,), (0,))
    with pytest.raises(errors.ValidationError):
        check_compatibility(data, (0,), (1,))


def test_character_values_of_uniform_data():
    data = uniform_data()
    assert script_L(data).is_close(padic(1, 5), N)
    assert L_value(data).is_close(padic(1, 5), N)
    quadratic = FiniteCharacter(data.tower, (0,), (Fraction(1, 2),))
    assert script_L(data, quadratic).is_close(padic(0, 5), N)


def test_theta_divides_by_alpha():
    data = alpha_two_data()
    assert data.validate() == []
    theta = theta_element(data, (1,))
    assert all(c.is_close(padic(Fraction(1, 5), 5), min(c.N, N)) for c in theta.coeffs.values())
    assert check_compatibility(data, (1,), (0,))


def test_broken_trace_is_reported():
    data = alpha_two_data()
    data.values[(1,)][(0,)] = padic(Fraction(3, 5), 5)
    assert data.validate() == ["trace [1]->[0] fails at 1"]
    assert not check_compatibility(data, (1,), (0,))


def test_missing_level():
    with pytest.raises(errors.MissingLevel):
        alpha_two_data().table((2,))


@pytest.mark.parametrize("chi_P, chi_Pbar, alpha, zero", [
    (1, 1, 1, True),
    (-1, -1, 1, False),
    (1, 1, -1, False),
])
def test_unramified_display(chi_P, chi_Pbar, alpha, zero):
    value = multiplier_display(MultiplierParams("split", alpha, THIRD, 0, 0, Fraction(chi_P), Fraction(chi_Pbar)))
    assert (value == 0) is zero


@pytest.mark.parametrize("n", [1, 2, 3])
@pytest.mark.parametrize("alpha", [1, -1])
def test_ramified_display(n, alpha):
    assert multiplier_display(MultiplierParams("split", alpha, THIRD, 0, n)) == 3 ** n


def test_multiplier_chain():
    inert = multiplier_e(MultiplierParams("inert", 2, THIRD))
    assert inert.e_bar == Fraction(3, 4)
    assert inert.e == Fraction(1, 4)
    wild = multiplier_e(MultiplierParams("split", 2, THIRD, 0, 2))
    assert wild.e == Fraction(1, 16)
    exact = multiplier_e(MultiplierParams("split", 1, THIRD, 1, 0, Fraction(1), Fraction(2)))
    assert exact.e_tilde == exact.e_bar * THIRD ** 2


@pytest.mark.parametrize("s", [1, 2, 3])
@pytest.mark.parametrize("alpha", [1, -1, 2])
def test_multiplier_normalizations_differ_by_abs_p(s, alpha):
    params = MultiplierParams("split", alpha, THIRD, 0, s)
    assert multiplier_display(params) == Fraction(3) ** s / Fraction(alpha) ** (2 * s)
    assert multiplier_e(params).e == Fraction(alpha) ** (-2 * s)
    assert multiplier_e(params).e == THIRD ** s * multiplier_display(params)


def test_inconsistent_multiplier_cases():
    with pytest.raises(errors.InconsistentCase):
        multiplier_e(MultiplierParams("split", 2, THIRD, 1, 1))
    with pytest.raises(errors.InconsistentCase):
        multiplier_e(MultiplierParams("split", 1, THIRD, 0, 0))
    with pytest.raises(errors.InconsistentCase):
        multiplier_e(MultiplierParams("twisted", 1, THIRD))
    with pytest.raises(errors.InconsistentCase):
        multiplier_display(MultiplierParams("inert", 1, THIRD, 0, 1))


def test_built_data(built):
    c, data = built
    assert data.provenance == "cocycle"
    assert data.validate() == []
    assert all(check_compatibility(data, (n,), (n - 1,)) for n in range(1, 5))
    lhs, rhs, equal = transfer_check(c)
    assert equal and lhs == rhs


def test_exceptional_zero(built):
    _, data = built
    assert script_L(data).agreement(PadicNumber.zero(3, N)) >= N - 5


def test_leading_term(built):
    c, data = built
    branch = LogBranch(3, padic(3, 3))
    report = leading_term_check(data, [c], [branch], Direction.parse(["1"], 3, N), 7)
    assert report.rank == 1
    assert report.lower_order_digits[0] >= N - 5
    assert report.agreement >= N - 6
    assert report.main_agreement is None
    assert report.l_digits[0] >= N - 2


def test_leading_term_main_term_when_branch_kills_qtilde(built):
    c, data = built
    report = leading_term_check(data, [c], [LogBranch(3, padic(12, 3))], Direction.parse(["1"], 3, N), 7)
    assert report.main_agreement is not None
    assert report.main_agreement >= N - 6
    assert report.agreement >= N - 6
    assert report.ok(N - 6)


def test_leading_term_with_riemann_sums_is_depth_limited(built):
    c, data = built
    report = leading_term_check(data, [c], [LogBranch(3, padic(3, 3))], Direction.parse(["1"], 3, N), 7,
                                method="riemann")
    assert report.agreement >= 7 - 4
    assert report.lower_order_digits[0] >= N - 5


def test_built_data_needs_depth():
    c = harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 2: -1}, 4)
    with pytest.raises(errors.DepthTooShallow):
        build_gross_data_from_cocycle([c], 4, N=N)


def test_representative_logs_need_built_data():
    with pytest.raises(errors.ValidationError):
        representative_logs(uniform_data(), [LogBranch.iwasawa(5, N)])


def test_single_level_does_not_stabilize():
    data = uniform_data()
    data.values = {(0,): data.values[(0,)]}
    logs = [LinearLogFunctional("s", 5, N, {None: (1,)})]
    with pytest.raises(errors.NoStabilization) as info:
        integrate_log_power(data, None, logs, 1, Direction.parse(["1"], 5, N))
    assert info.value.best is not None


def test_series_helpers():
    assert square_series([1, 2, 3]) == [1, 4, 10]
    assert series_at([1, 2, 3], 3) == 34
    with pytest.raises(errors.ValidationError):
        L_series(uniform_data(), [], Direction(()), 7)


def test_series_matches_direct_summation(built):
    _, data = built
    logs = representative_logs(data, [LogBranch(3, padic(3, 3))])
    direction = Direction.parse(["1"], 3, N)
    coeffs = L_series(data, logs, direction, 4)
    t = padic(9, 3)
    direct = family_value(data, None, logs, direction.point(t), (4,))
    assert series_at(coeffs, t).agreement(direct) >= N - 4
