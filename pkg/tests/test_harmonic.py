# tests/test_harmonic.py

from fractions import Fraction

import pytest

import errors
import harmonic
from bt_tree import INFINITY, TreeEdge, TreeVertex, TwistedMatrix, standard_edge
from conftest import padic


@pytest.mark.parametrize("p", [3, 5])
@pytest.mark.parametrize("h", [1, 2, 3])
def test_axis_cocycle_is_harmonic(p, h):
    c = harmonic.axis_cocycle(p, padic(p ** h * (1 + p), p), 4)
    assert harmonic.validate(c).ok
    assert harmonic.evaluate(c, standard_edge(p)) == (1,)
    assert harmonic.evaluate(c, standard_edge(p).reverse()) == (-1,)


def test_periodic_cocycle_is_harmonic(periodic3):
    report = harmonic.validate(periodic3)
    assert report.ok, report.as_list()


def test_weight_four_boundary_cocycle():
    atoms = {Fraction(0): 1, Fraction(1): -3, Fraction(2): 3, Fraction(3): -1}
    c = harmonic.boundary_cocycle(3, 4, atoms, 5)
    assert harmonic.validate(c).ok
    # Z_3 holds every atom, so its moments are the (vanishing) totals
    assert harmonic.evaluate(c, standard_edge(3)) == (0, 0, 0)


def test_boundary_measure_needs_vanishing_moments():
    with pytest.raises(errors.InvalidCocycle):
        harmonic.boundary_cocycle(3, 2, {Fraction(0): 1}, 4)
    with pytest.raises(errors.InvalidCocycle):
        harmonic.boundary_cocycle(3, 4, {Fraction(0): 1, INFINITY: -1}, 4)


def test_periodic_atoms_are_checked():
    with pytest.raises(errors.InvalidCocycle):
        harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 2: 1}, 4)
    with pytest.raises(errors.InvalidCocycle):
        harmonic.periodic_cocycle(3, padic(12, 3), {1: 1, 3: -1}, 4)


def test_odd_weight_is_rejected():
    with pytest.raises(errors.ValidationError):
        harmonic.HarmonicCocycle(3, 3, 2, {})


def test_perturbations_are_reported(axis3):
    edges = [e for e in sorted(axis3.values) if axis3.in_region(e)][:8]
    for e in edges:
        bad = axis3.with_value(e, (axis3.values[e][0] + 1,))
        report = harmonic.validate(bad)
        assert not report.ok
        assert report.antisymmetry


def _bumped_reports(c, e):
    bad = c.with_value(e, (c.values.get(e, c.zero_vector())[0] + 1,))
    return set(harmonic.validate(bad).as_list())


def test_perturbation_reports_name_the_right_edge_and_vertices():
    c = harmonic.boundary_cocycle(3, 2, {Fraction(0): 1, Fraction(1): 1, INFINITY: -2}, 3)
    assert harmonic.validate(c).ok
    # Tabulated in both orientations: antisymmetry plus both endpoint sums
    e = standard_edge(3)
    assert _bumped_reports(c, e) == {f"antisymmetry fails on {e.label()}",
                                     "outgoing sum nonzero at V(-1;0)", "incoming sum nonzero at V(0;0)"}
    assert _bumped_reports(c, e.reverse()) == {f"antisymmetry fails on {e.label()}",
                                               "outgoing sum nonzero at V(0;0)", "incoming sum nonzero at V(-1;0)"}
    # Off every ray the reverse is untabulated, so only the vertex sums move
    off = TreeEdge(TreeVertex.make(3, 0, 0), TreeVertex.make(3, 1, 2))
    assert off not in c.values
    assert _bumped_reports(c, off) == {"outgoing sum nonzero at V(0;0)", "incoming sum nonzero at V(1;2)"}
    # Vertices at the rim of the table are not summed
    rim = TreeEdge(TreeVertex.make(3, 2, 0), TreeVertex.make(3, 3, 0))
    rim_rev = rim.reverse()
    assert _bumped_reports(c, rim) == {f"antisymmetry fails on {min(rim, rim_rev).label()}",
                                       "outgoing sum nonzero at V(2;0)"}


def test_periodicity_extends_the_table():
    c = harmonic.axis_cocycle(3, padic(3, 3), 3)
    far = TreeEdge(TreeVertex.make(3, 9, 0), TreeVertex.make(3, 10, 0))
    assert not c.in_region(far)
    assert harmonic.evaluate(c, far) == (1,)


def test_out_of_table_without_periodicity():
    c = harmonic.boundary_cocycle(3, 2, {Fraction(0): 1, INFINITY: -1}, 3)
    far = TreeEdge(TreeVertex.make(3, 9, 0), TreeVertex.make(3, 10, 0))
    with pytest.raises(errors.OutOfTable):
        harmonic.evaluate(c, far)


def test_act_star_by_identity(axis3):
    moved = harmonic.act_star(TwistedMatrix.identity(), axis3)
    assert moved.values == axis3.values


def test_boundedness_norm(axis3):
    assert harmonic.boundedness_norm(axis3) == 1


def test_multi_cocycle(axis3):
    multi = harmonic.MultiCocycle([axis3, axis3])
    assert multi.rank == 2
    assert multi.validate().ok
    e = standard_edge(3)
    assert multi.evaluate([e, e.reverse()]) == -1
    c4 = harmonic.boundary_cocycle(3, 4, {Fraction(0): 1, Fraction(1): -3, Fraction(2): 3, Fraction(3): -1}, 3)
    with pytest.raises(errors.ValidationError):
        harmonic.MultiCocycle([axis3, c4])
