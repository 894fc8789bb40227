# src/harmonic.py
# Harmonic cocycles on the tree: finite edge tables with optional hyperbolic
# periodicity, validation, the weight-k action g*c, and test constructors.

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

import errors
from bt_tree import (
    INFINITY, TreeEdge, TreeVertex, TwistedMatrix, act, as_matrix, base_vertex,
    distance, edge_to_disc, edges_from, geodesic, hyperbolic_axis, vp,
)
from padic_core import PadicNumber

logger = logging.getLogger(__name__)


def is_zero(x) -> bool:
    return x.is_zero() if isinstance(x, PadicNumber) else x == 0


def values_equal(x, y) -> bool:
    return all(is_zero(a - b) for a, b in zip(x, y))


def coefficient_norm(x, p: int) -> Fraction:
    if isinstance(x, PadicNumber):
        return x.abs_value()
    return Fraction(0) if x == 0 else Fraction(p) ** (-vp(x, p))


def _poly_mul(f, g):
    out = [Fraction(0)] * (len(f) + len(g) - 1)
    for i, a in enumerate(f):
        for j, b in enumerate(g):
            out[i + j] += a * b
    return out


def _poly_pow(f, n):
    out = [Fraction(1)]
    for _ in range(n):
        out = _poly_mul(out, f)
    return out


def weight_action(g, weight: int) -> tuple:
    # rho(g)[j][i] = coefficient of s^i in (a s + b)^j (c s + d)^(k-2-j); g -> rho(g) is multiplicative
    (a, b), (c, d) = as_matrix(g).effective()
    n = weight - 2
    rows = []
    for j in range(n + 1):
        poly = _poly_mul(_poly_pow([b, a], j), _poly_pow([d, c], n - j))
        rows.append(tuple(poly[i] if i < len(poly) else Fraction(0) for i in range(n + 1)))
    return tuple(rows)


def apply_weight(rho, vec) -> tuple:
    if len(rho) == 1 and rho[0][0] == 1:
        return tuple(vec)
    return tuple(sum((rho[j][i] * vec[i] for i in range(len(vec))), Fraction(0)) for j in range(len(rho)))


@dataclass(frozen=True)
class ValidationReport:
    antisymmetry: list = field(default_factory=list)
    vertex_sums: list = field(default_factory=list)
    periodicity: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.antisymmetry or self.vertex_sums or self.periodicity)

    def as_list(self) -> list[str]:
        return self.antisymmetry + self.vertex_sums + self.periodicity


@dataclass(frozen=True)
class OrbitMeasure:
    # t(delta_0 - delta_inf) plus the qtilde^Z-orbits of unit atoms sum w_i delta_{x_i}
    axis_weight: Fraction
    atoms: dict = field(default_factory=dict)

    def scale(self, factor) -> "OrbitMeasure":
        return OrbitMeasure(self.axis_weight * factor, {x: w * factor for x, w in self.atoms.items()})


@dataclass
class HarmonicCocycle:
    """
    Edge-value table of a harmonic cocycle of even weight k >= 2.

    Values are vectors of length k-1 in the monomial basis x^j, so that the
    value on e is the moment vector of the associated distribution on U_e.
    The table covers the edges whose endpoints lie within distance depth of
    center; unlisted edges there are zero. Edges outside are reached through
    the periodicity gamma when one is given.
    """
    p: int
    weight: int
    depth: int
    values: dict
    gamma: TwistedMatrix | None = None
    qtilde: PadicNumber | None = None
    center: TreeVertex | None = None
    # Boundary measure the table was built from, when known
    orbit: OrbitMeasure | None = None

    def __post_init__(self):
        if self.weight < 2 or self.weight % 2:
            raise errors.ValidationError(f"weight {self.weight} is not an even integer >= 2")
        if self.center is None:
            self.center = base_vertex(self.p)
        self._powers = {}

    @classmethod
    def from_table(cls, p, weight, depth, table: dict, gamma=None, qtilde=None, center=None):
        # Missing orientations are filled in by antisymmetry
        values = {e: tuple(v) for e, v in table.items()}
        for e, v in list(values.items()):
            values.setdefault(e.reverse(), tuple(-x for x in v))
        return cls(p, weight, depth, values, gamma, qtilde, center)

    @property
    def size(self) -> int:
        return self.weight - 1

    def zero_vector(self) -> tuple:
        return (Fraction(0),) * self.size

    def in_region(self, e: TreeEdge) -> bool:
        return max(distance(self.center, e.source), distance(self.center, e.target)) <= self.depth

    def with_value(self, e: TreeEdge, value) -> "HarmonicCocycle":
        # Copy with a single orientation overwritten (used to build perturbations)
        values = dict(self.values)
        values[e] = tuple(value)
        return HarmonicCocycle(self.p, self.weight, self.depth, values, self.gamma, self.qtilde, self.center)

    def scale(self, factor) -> "HarmonicCocycle":
        values = {e: tuple(x * factor for x in v) for e, v in self.values.items()}
        return HarmonicCocycle(self.p, self.weight, self.depth, values, self.gamma, self.qtilde, self.center,
                               self.orbit.scale(factor) if self.orbit is not None else None)

    def _gamma_power(self, k: int) -> TwistedMatrix:
        if k not in self._powers:
            self._powers[k] = self.gamma ** k
        return self._powers[k]

    def support_edges(self) -> list[TreeEdge]:
        return [e for e, v in self.values.items() if not all(is_zero(x) for x in v)]


def evaluate(c: HarmonicCocycle, e: TreeEdge) -> tuple:
    if c.in_region(e):
        return c.values.get(e, c.zero_vector())
    if c.gamma is not None:
        # Find gamma^-k e inside the table; c(e) = rho(gamma^k) c(gamma^-k e)
        h = c.qtilde.v if c.qtilde is not None else 1
        reach = (distance(c.center, e.source) + c.depth) // max(h, 1) + 2
        for k in sorted(range(-reach, reach + 1), key=abs):
            if k == 0:
                continue
            moved = act(c._gamma_power(-k), e)
            if c.in_region(moved):
                base = c.values.get(moved, c.zero_vector())
                if c.weight == 2:
                    return base
                return apply_weight(weight_action(c._gamma_power(k), c.weight), base)
    raise errors.OutOfTable(f"edge {e.label()} lies outside the table of depth {c.depth}")


def validate(c: HarmonicCocycle) -> ValidationReport:
    report = ValidationReport()
    listed = [e for e in c.values if c.in_region(e)]

    for e in listed:
        rev = e.reverse()
        if rev in c.values and e < rev:
            total = tuple(a + b for a, b in zip(c.values[e], c.values[rev]))
            if not all(is_zero(x) for x in total):
                report.antisymmetry.append(f"antisymmetry fails on {e.label()}")

    vertices = set()
    for e in listed:
        vertices.add(e.source)
        vertices.add(e.target)
    for v in sorted(vertices):
        if distance(c.center, v) > c.depth - 1:
            continue
        outgoing = edges_from(v)
        out_sum = c.zero_vector()
        in_sum = c.zero_vector()
        for e in outgoing:
            out_sum = tuple(a + b for a, b in zip(out_sum, c.values.get(e, c.zero_vector())))
            in_sum = tuple(a + b for a, b in zip(in_sum, c.values.get(e.reverse(), c.zero_vector())))
        if not all(is_zero(x) for x in out_sum):
            report.vertex_sums.append(f"outgoing sum nonzero at {v.label()}")
        if not all(is_zero(x) for x in in_sum):
            report.vertex_sums.append(f"incoming sum nonzero at {v.label()}")

    if c.gamma is not None:
        rho = weight_action(c.gamma, c.weight)
        for e in listed:
            moved = act(c.gamma, e)
            if not c.in_region(moved):
                continue
            expected = apply_weight(rho, c.values[e])
            if not values_equal(c.values.get(moved, c.zero_vector()), expected):
                report.periodicity.append(f"periodicity fails on {e.label()} -> {moved.label()}")

    if not report.ok:
        logger.debug("cocycle validation found %d violations", len(report.as_list()))
    return report


def act_star(g, c: HarmonicCocycle) -> HarmonicCocycle:
    # (g*c)(e) = rho(g) c(g^-1 e); the table moves with g
    g = as_matrix(g)
    rho = weight_action(g, c.weight)
    values = {act(g, e): apply_weight(rho, v) for e, v in c.values.items()}
    gamma = None
    if c.gamma is not None:
        gamma = g @ c.gamma @ g.inverse()
    return HarmonicCocycle(c.p, c.weight, c.depth, values, gamma, c.qtilde, act(g, c.center))


def boundedness_norm(c: HarmonicCocycle, samples=None) -> Fraction:
    # max |rho(g) c(g^-1 e0)| over the sampled g; over the whole table when no samples are given
    if samples is None:
        vectors = list(c.values.values())
    else:
        e0 = TreeEdge(TreeVertex.make(c.p, -1, 0), TreeVertex.make(c.p, 0, 0))
        vectors = []
        for g in samples:
            g = as_matrix(g)
            try:
                base = evaluate(c, act(g.inverse(), e0))
            except errors.OutOfTable:
                continue
            vectors.append(apply_weight(weight_action(g, c.weight), base))
    best = Fraction(0)
    for vec in vectors:
        for x in vec:
            best = max(best, coefficient_norm(x, c.p))
    return best


# --- constructors ---

def point_vector(x, weight: int) -> tuple:
    # (x^j)_j for finite points; infinity evaluates only the top monomial
    n = weight - 2
    if x == INFINITY:
        return tuple(Fraction(1 if j == n else 0) for j in range(n + 1))
    x = Fraction(x)
    return tuple(x ** j for j in range(n + 1))


def _ray(center: TreeVertex, x, steps: int) -> list[TreeEdge]:
    # First `steps` edges of the ray from center toward the boundary point x
    p = center.p
    if x == INFINITY:
        path = []
        v = center
        for _ in range(steps):
            path.append(TreeEdge(v, v.parent()))
            v = v.parent()
        return path
    level = center.n + steps
    v_x = vp(x, p)
    if v_x != INFINITY and v_x < 0:
        level += -v_x
    return geodesic(center, TreeVertex.make(p, level, x))[:steps]


def boundary_cocycle(p: int, weight: int, atoms: dict, depth: int, center=None) -> HarmonicCocycle:
    """
    Cocycle of the finite boundary measure sum w_x delta_x.

    The total moment vector sum w_x (x^j)_j must vanish, which makes the
    value table harmonic. Values are nonzero only on the subtree spanned by
    the atoms, so only the rays toward atoms are tabulated.
    """
    center = center or base_vertex(p)
    atoms = {x: Fraction(w) for x, w in atoms.items()}
    total = [Fraction(0)] * (weight - 1)
    for x, w in atoms.items():
        for j, t in enumerate(point_vector(x, weight)):
            total[j] += w * t
    if any(total):
        raise errors.InvalidCocycle("boundary measure has nonzero total moments")
    table = {}
    for x in atoms:
        for e in _ray(center, x, depth):
            for edge in (e, e.reverse()):
                if edge in table:
                    continue
                disc = edge_to_disc(edge)
                vec = [Fraction(0)] * (weight - 1)
                for y, w in atoms.items():
                    if disc.contains(y):
                        for j, t in enumerate(point_vector(y, weight)):
                            vec[j] += w * t
                table[edge] = tuple(vec)
    return HarmonicCocycle(p, weight, depth, table, center=center)


def axis_cocycle(p: int, qtilde: PadicNumber, depth: int) -> HarmonicCocycle:
    # +1 on edges V(m-1;0) > V(m;0), i.e. the cocycle of delta_0 - delta_inf, periodic under x -> qtilde*x
    gamma, _ = hyperbolic_axis(qtilde)
    c = boundary_cocycle(p, 2, {Fraction(0): 1, INFINITY: -1}, depth)
    c.gamma = gamma
    c.qtilde = qtilde
    c.orbit = OrbitMeasure(Fraction(1))
    return c


def periodic_cocycle(p: int, qtilde: PadicNumber, atoms: dict, depth: int, axis_weight=1) -> HarmonicCocycle:
    """
    Weight-2 cocycle invariant under x -> qtilde*x.

    The measure is t(delta_0 - delta_inf) plus the qtilde^Z-orbits of unit
    atoms sum w_i delta_{x_i} with sum w_i = 0. Balls around 0 carry mass t;
    a ball missing 0 sees only the finitely many orbit points inside it.
    """
    gamma, _ = hyperbolic_axis(qtilde)
    h = qtilde.v
    q = qtilde.rational()
    atoms = {Fraction(x): Fraction(w) for x, w in atoms.items()}
    if sum(atoms.values()) != 0:
        raise errors.InvalidCocycle("periodic atoms must have total weight zero")
    if any(vp(x, p) != 0 for x in atoms):
        raise errors.InvalidCocycle("periodic atoms must be p-adic units")
    t = Fraction(axis_weight)

    def ball_mass(a, m):
        if vp(a, p) >= m:
            return t
        va = vp(a, p)
        if va % h:
            return Fraction(0)
        k = va // h
        scale = q ** k
        return sum((w for x, w in atoms.items() if vp(scale * x - a, p) >= m), Fraction(0))

    center = base_vertex(p)
    kmax = ceil(depth / h) + 1
    points = [Fraction(0), INFINITY] + [q ** k * x for k in range(-kmax, kmax + 1) for x in atoms]
    table = {}
    for x in points:
        for e in _ray(center, x, depth):
            for edge in (e, e.reverse()):
                if edge in table:
                    continue
                disc = edge_to_disc(edge)
                mass = ball_mass(disc.a, disc.m)
                table[edge] = (-mass if disc.outer else mass,)
    c = HarmonicCocycle(p, 2, depth, table, gamma, qtilde, center, OrbitMeasure(t, atoms))
    logger.debug("periodic cocycle with %d atoms per period, %d table entries", len(atoms), len(table))
    return c


@dataclass
class MultiCocycle:
    # Product of weight-2 cocycles, c(e_1, ..., e_r) = prod c_i(e_i)
    components: list

    def __post_init__(self):
        for c in self.components:
            if c.weight != 2:
                raise errors.ValidationError("multi-variable cocycles are weight 2 in every coordinate")

    @property
    def rank(self) -> int:
        return len(self.components)

    def evaluate(self, edges) -> Fraction:
        value = Fraction(1)
        for c, e in zip(self.components, edges):
            value = value * evaluate(c, e)[0]
        return value

    def validate(self) -> ValidationReport:
        report = ValidationReport()
        for i, c in enumerate(self.components):
            sub = validate(c)
            report.antisymmetry.extend(f"[{i}] {m}" for m in sub.antisymmetry)
            report.vertex_sums.extend(f"[{i}] {m}" for m in sub.vertex_sums)
            report.periodicity.extend(f"[{i}] {m}" for m in sub.periodicity)
        return report
