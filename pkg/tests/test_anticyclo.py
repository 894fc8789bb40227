# tests/test_anticyclo.py

from fractions import Fraction

import pytest

import errors
from anticyclo import (CharacterFamilyPoint, Direction, FiniteCharacter, LevelGroup, LinearLogFunctional,
                       check_log_bound, cyclic_tower, epsilon_eval, finite_character, product_tower,
                       tower_validate, trivial_character)
from conftest import N, padic
from padic_core import exp_p


@pytest.fixture
def tower5():
    return cyclic_tower(5, 3, finite_order=2)


def test_invariant_factors():
    G = LevelGroup.from_relations((0,), [[2, 0], [0, 3]], 2)
    assert G.orders == (6,)
    assert G.size == 6
    with pytest.raises(errors.ValidationError):
        LevelGroup.from_relations((0,), [[2, 0]], 2)


def test_element_labels():
    G = LevelGroup((1,), (2, 5))
    assert G.label_of((1, 3)) == "1,3"
    assert G.label_of((3, 7)) == "1,2"
    assert G.element("1,3") == (1, 3)
    trivial = LevelGroup((0,), ())
    assert trivial.label_of(()) == "1"
    assert trivial.element("1") == ()
    with pytest.raises(errors.InvalidFile):
        G.element("a,b")


def test_cyclic_tower_is_consistent(tower5):
    assert tower_validate(tower5) == []
    assert tower5.group((0,)).orders == (2,)
    assert tower5.group((2,)).orders == (2, 25)
    assert tower5.project((1, 7), (2,), (1,)) == (1, 2)
    with pytest.raises(errors.MissingLevel):
        tower5.group((4,))


def test_broken_projection_is_reported(tower5):
    tower5.projections[((1,), (0,))] = [(0,), (0,)]
    report = tower_validate(tower5)
    assert any("surjective" in line for line in report)


def test_product_tower():
    tower = product_tower(cyclic_tower(3, 1), cyclic_tower(5, 1))
    assert set(tower.levels) == {(0, 0), (1, 1)}
    assert tower.primes == (3, 5)
    assert tower_validate(tower) == []


def test_quadratic_character(tower5):
    chi = FiniteCharacter(tower5, (0,), (Fraction(1, 2),))
    assert chi.order == 2
    assert chi.value((1,), 5, N).is_close(padic(-1, 5), N)
    assert chi.value((0,), 5, N).is_close(padic(1, 5), N)
    assert (chi * chi).is_trivial()


def test_pullback_and_conductor(tower5):
    chi = FiniteCharacter(tower5, (0,), (Fraction(1, 2),))
    lifted = chi.pullback((2,))
    assert lifted.angles == (Fraction(1, 2), Fraction(0))
    assert lifted.factors_through((0,))
    assert lifted.conductor() == (0,)
    wild = FiniteCharacter(tower5, (1,), (Fraction(0), Fraction(1, 5)))
    assert wild.conductor() == (1,)
    assert (chi * wild).level == (1,)


def test_character_errors(tower5):
    with pytest.raises(errors.NotMultiplicative):
        FiniteCharacter(tower5, (1,), (Fraction(0), Fraction(1, 3)))
    with pytest.raises(errors.NotMultiplicative):
        FiniteCharacter(tower5, (1,), (Fraction(1, 2),))
    wild = FiniteCharacter(tower5, (1,), (Fraction(0), Fraction(1, 5)))
    with pytest.raises(errors.CharacterNotEmbeddable):
        wild.value((0, 1), 5, N)


def test_character_from_table(tower5):
    chi = finite_character(tower5, (0,), {"1": "1/2"})
    assert chi.angles == (Fraction(1, 2),)
    assert trivial_character(tower5).is_trivial()
    with pytest.raises(errors.NotMultiplicative):
        finite_character(tower5, (0,), {"0": "0"})
    with pytest.raises(errors.NotMultiplicative):
        finite_character(tower5, (0,), {"1": "1/2", "0": "1/2"})


def test_family_domain():
    with pytest.raises(errors.DomainViolation):
        CharacterFamilyPoint.parse(["1"], 5, N)
    with pytest.raises(errors.DomainViolation):
        CharacterFamilyPoint.parse(["5"], 5, N)
    assert CharacterFamilyPoint.parse(["25"], 5, N).s[0].v == 2
    assert Direction.parse(["1"], 5, N).point(25).s[0].v == 2


def test_log_bound(tower5):
    check_log_bound(LinearLogFunctional("s", 5, N, {None: (0, Fraction(1, 5))}), tower5, (1,), 5)
    with pytest.raises(errors.DomainViolation):
        check_log_bound(LinearLogFunctional("s", 5, N, {None: (0, Fraction(1, 25))}), tower5, (1,), 5)


def test_epsilon_is_a_character(tower5):
    logs = [LinearLogFunctional("s", 5, N, {None: (0, 1)})]
    s = CharacterFamilyPoint.parse(["25"], 5, N)
    one = epsilon_eval(logs, s, (2,), (0, 1))
    two = epsilon_eval(logs, s, (2,), (0, 2))
    assert one.is_close(exp_p(padic(25, 5)), N - 1)
    assert two.is_close(one * one, N - 1)
    with pytest.raises(errors.ValidationError):
        epsilon_eval(logs + logs, s, (2,), (0, 1))
