# src/anticyclo.py
# Ring-class-group towers as ingested data: finite abelian level groups, projections,
# finite-order characters embedded in Q_p, log functionals and the character family eps^s.

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from itertools import product
from math import lcm

from sympy import primitive_root

import errors
from padic_core import PadicNumber, as_padic, exp_p, teichmuller

logger = logging.getLogger(__name__)


# --- Smith normal form ---

def _swap_cols(rows, V, i, j):
    for r in rows:
        r[i], r[j] = r[j], r[i]
    for r in V:
        r[i], r[j] = r[j], r[i]


def _add_col(rows, V, src, dst, q):
    # column dst -= q * column src
    for r in rows:
        r[dst] -= q * r[src]
    for r in V:
        r[dst] -= q * r[src]


def smith_form(relations, n: int):
    """
    Diagonal d and unimodular V with A V = U^-1 diag(d) for the relation rows A.

    Row operations are not tracked: Z^n / rowspace(A) is identified with
    sum Z/d_t through x -> x V.
    """
    A = [list(r) + [0] * (n - len(r)) for r in relations]
    V = [[int(i == j) for j in range(n)] for i in range(n)]
    m = len(A)
    t = 0
    while t < min(m, n):
        entries = [(abs(A[i][j]), i, j) for i in range(t, m) for j in range(t, n) if A[i][j]]
        if not entries:
            break
        _, i, j = min(entries)
        A[t], A[i] = A[i], A[t]
        _swap_cols(A, V, t, j)
        clean = True
        for i in range(t + 1, m):
            q = A[i][t] // A[t][t]
            A[i] = [a - q * b for a, b in zip(A[i], A[t])]
            clean = clean and A[i][t] == 0
        for j in range(t + 1, n):
            _add_col(A, V, t, j, A[t][j] // A[t][t])
            clean = clean and A[t][j] == 0
        if not clean:
            continue
        # Divisibility of the rest of the block by the pivot
        bad = next((i for i in range(t + 1, m) for j in range(t + 1, n) if A[i][j] % A[t][t]), None)
        if bad is not None:
            A[t] = [a + b for a, b in zip(A[t], A[bad])]
            continue
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
        t += 1
    d = [A[i][i] if i < m else 0 for i in range(n)]
    return d, V


# --- level groups ---

@dataclass(frozen=True)
class LevelGroup:
    """
    Finite abelian group prod Z/orders[t], elements are integer tuples.

    basis maps generator coordinates (as given in a file or relation list)
    to the cyclic coordinates; None means the identity presentation.
    """
    level: tuple
    orders: tuple
    labels: tuple = ()
    basis: tuple | None = None

    def __post_init__(self):
        if any(o < 1 for o in self.orders):
            raise errors.ValidationError(f"level {list(self.level)}: cyclic orders must be positive")

    @classmethod
    def from_relations(cls, level, relations, n_gens: int) -> "LevelGroup":
        # Z^n_gens modulo the relation rows, reduced to invariant factors
        d, V = smith_form(relations, n_gens)
        if any(x == 0 for x in d):
            raise errors.ValidationError(f"level {list(level)}: relations leave an infinite factor")
        keep = [t for t, x in enumerate(d) if x != 1]
        basis = tuple(tuple(V[i][t] for t in keep) for i in range(n_gens))
        return cls(tuple(level), tuple(d[t] for t in keep), (), basis)

    @property
    def size(self) -> int:
        return reduce(lambda a, b: a * b, self.orders, 1)

    @property
    def rank(self) -> int:
        return len(self.orders)

    def identity(self) -> tuple:
        return (0,) * self.rank

    def generators(self) -> list[tuple]:
        return [tuple(int(i == t) for i in range(self.rank)) for t in range(self.rank)]

    def elements(self):
        return product(*(range(o) for o in self.orders))

    def reduce(self, x) -> tuple:
        return tuple(int(a) % o for a, o in zip(x, self.orders))

    def add(self, x, y) -> tuple:
        return self.reduce(a + b for a, b in zip(x, y))

    def scale(self, x, k: int) -> tuple:
        return self.reduce(k * a for a in x)

    def from_generators(self, coords) -> tuple:
        # Element of the group from coordinates in the presenting generators
        if self.basis is None:
            return self.reduce(coords)
        out = [0] * self.rank
        for c, row in zip(coords, self.basis):
            for t, v in enumerate(row):
                out[t] += c * v
        return self.reduce(out)

    def label_of(self, x) -> str:
        x = self.reduce(x)
        if self.labels:
            return self.labels[self._index(x)]
        return ",".join(str(a) for a in x) if x else "1"

    def element(self, label: str) -> tuple:
        if self.labels:
            if label not in self.labels:
                raise errors.InvalidFile(f"unknown element label {label!r} at level {list(self.level)}")
            return self._element_at(self.labels.index(label))
        if label == "1" and not self.orders:
            return ()
        try:
            return self.reduce(int(a) for a in label.split(","))
        except ValueError as e:
            raise errors.InvalidFile(f"bad element label {label!r}") from e

    def _index(self, x) -> int:
        idx = 0
        for a, o in zip(x, self.orders):
            idx = idx * o + a
        return idx

    def _element_at(self, idx: int) -> tuple:
        out = []
        for o in reversed(self.orders):
            out.append(idx % o)
            idx //= o
        return tuple(reversed(out))


def level_leq(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b))


@dataclass
class ClassGroupTower:
    """
    Projective system of level groups G_n for the prime set J.

    projections[(hi, lo)] lists the images in G_lo of the cyclic generators
    of G_hi; other pairs are reached by composing listed ones.
    """
    primes: tuple
    c0: int
    levels: dict
    projections: dict
    conductor: str = "1"
    _cache: dict = field(default_factory=dict, repr=False)

    def group(self, level) -> LevelGroup:
        level = tuple(level)
        if level not in self.levels:
            raise errors.MissingLevel(f"level {list(level)} is not in the tower")
        return self.levels[level]

    def sorted_levels(self) -> list[tuple]:
        return sorted(self.levels, key=lambda n: (sum(n), n))

    def zero_level(self) -> tuple:
        return (0,) * len(self.primes)

    def projection_images(self, hi, lo) -> list[tuple]:
        hi, lo = tuple(hi), tuple(lo)
        key = (hi, lo)
        if key in self._cache:
            return self._cache[key]
        G_hi, G_lo = self.group(hi), self.group(lo)
        if hi == lo:
            images = G_hi.generators()
        elif key in self.projections:
            images = [G_lo.reduce(x) for x in self.projections[key]]
        else:
            images = None
            for (a, mid) in self.projections:
                if a == hi and mid != lo and level_leq(lo, mid):
                    try:
                        first = self.projection_images(hi, mid)
                        images = [self._project_with(self.projection_images(mid, lo), G_lo, x) for x in first]
                        break
                    except errors.MissingLevel:
                        continue
            if images is None:
                raise errors.MissingLevel(f"no projection from level {list(hi)} to {list(lo)}")
        self._cache[key] = images
        return images

    @staticmethod
    def _project_with(images, G_lo: LevelGroup, x) -> tuple:
        out = G_lo.identity()
        for a, img in zip(x, images):
            out = G_lo.add(out, G_lo.scale(img, a))
        return out

    def project(self, x, hi, lo) -> tuple:
        return self._project_with(self.projection_images(hi, lo), self.group(lo), x)


def _subgroup_size(G: LevelGroup, gens) -> int:
    seen = {G.identity()}
    frontier = [G.identity()]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = G.add(x, g)
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return len(seen)


def tower_validate(tower: ClassGroupTower) -> list[str]:
    # Structural report: empty when the tower is consistent
    report = []
    if tower.zero_level() not in tower.levels:
        report.append("level (0,...,0) is missing")
    for (hi, lo), images in tower.projections.items():
        name = f"{list(hi)}->{list(lo)}"
        if hi not in tower.levels or lo not in tower.levels:
            report.append(f"projection {name} refers to a missing level")
            continue
        if not level_leq(lo, hi):
            report.append(f"projection {name} does not go down the tower")
        G_hi, G_lo = tower.levels[hi], tower.levels[lo]
        if len(images) != G_hi.rank:
            report.append(f"projection {name} needs {G_hi.rank} generator images, got {len(images)}")
            continue
        for t, (order, img) in enumerate(zip(G_hi.orders, images)):
            if G_lo.scale(img, order) != G_lo.identity():
                report.append(f"projection {name} is not a homomorphism on generator {t}")
        if _subgroup_size(G_lo, [G_lo.reduce(x) for x in images]) != G_lo.size:
            report.append(f"projection {name} is not surjective")
    # Compatibility of composites along listed triples
    for (a, b) in tower.projections:
        for (b2, c) in tower.projections:
            if b2 != b or (a, c) not in tower.projections:
                continue
            G_a = tower.levels.get(a)
            if G_a is None or b not in tower.levels or c not in tower.levels:
                continue
            direct = [tower.levels[c].reduce(x) for x in tower.projections[(a, c)]]
            composed = [
                tower._project_with([tower.levels[c].reduce(x) for x in tower.projections[(b, c)]],
                                    tower.levels[c], tower.levels[b].reduce(img))
                for img in tower.projections[(a, b)]
            ]
            if direct != composed:
                report.append(f"projections {list(a)}->{list(b)}->{list(c)} do not compose to {list(a)}->{list(c)}")
    return report


# --- log functionals and the character family ---

@dataclass(frozen=True)
class LinearLogFunctional:
    # log_sigma(x) = sum coeffs[t] * x_t on the integer lift of the cyclic coordinates
    label: str
    p: int
    N: int
    coeffs: dict

    def __call__(self, level, x) -> PadicNumber:
        level = tuple(level)
        row = self.coeffs.get(level, self.coeffs.get(None))
        if row is None:
            raise errors.MissingLevel(f"log functional {self.label} has no values at level {list(level)}")
        total = PadicNumber.zero(self.p, self.N)
        for c, a in zip(row, x):
            total = total + c * a
        return total


@dataclass(frozen=True)
class RepresentativeLogFunctional:
    # Values tabulated per level and element, e.g. log_u of coset representatives
    label: str
    table: dict

    def __call__(self, level, x) -> PadicNumber:
        try:
            return self.table[tuple(level)][tuple(x)]
        except KeyError as e:
            raise errors.MissingLevel(f"log functional {self.label} has no value at {list(level)}:{x}") from e


def check_log_bound(log, tower: ClassGroupTower, level, p: int):
    # Image valuation >= -v_p(c0) - 1
    bound = -_vp_int(tower.c0, p) - 1
    G = tower.group(level)
    for g in G.generators():
        value = log(level, g)
        if not value.is_zero() and value.v < bound:
            raise errors.DomainViolation(f"log {log.label} has valuation {value.v} < {bound} on a generator")


def _vp_int(n: int, p: int) -> int:
    v = 0
    n = abs(n)
    while n and n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class CharacterFamilyPoint:
    # s = (s_sigma) with |s_sigma| <= |c0| p^-2
    s: tuple
    c0: int = 1

    def __post_init__(self):
        for x in self.s:
            if x.is_zero():
                continue
            bound = _vp_int(self.c0, x.p) + 2
            if x.v < bound:
                raise errors.DomainViolation(f"|s| too large: v(s) = {x.v} < {bound}")

    @classmethod
    def parse(cls, values, p: int, N: int, c0: int = 1) -> "CharacterFamilyPoint":
        return cls(tuple(as_padic(v, p, N) for v in values), c0)

    def __add__(self, other: "CharacterFamilyPoint") -> "CharacterFamilyPoint":
        return CharacterFamilyPoint(tuple(a + b for a, b in zip(self.s, other.s)), self.c0)

    def scaled(self, t) -> "CharacterFamilyPoint":
        return CharacterFamilyPoint(tuple(a * t for a in self.s), self.c0)


@dataclass(frozen=True)
class Direction:
    # Tangent direction in the family; carries no domain bound
    s: tuple

    @classmethod
    def parse(cls, values, p: int, N: int) -> "Direction":
        return cls(tuple(as_padic(v, p, N) for v in values))

    def point(self, t, c0: int = 1) -> CharacterFamilyPoint:
        return CharacterFamilyPoint(tuple(x * t for x in self.s), c0)


def direction_log(logs, s, level, g) -> PadicNumber:
    # l(g) = sum_sigma s_sigma * log_sigma(g)
    total = None
    for log, x in zip(logs, s.s):
        term = x * log(level, g)
        total = term if total is None else total + term
    return total


def epsilon_eval(logs, s: CharacterFamilyPoint, level, g) -> PadicNumber:
    if len(logs) != len(s.s):
        raise errors.ValidationError("one coordinate of s per log functional is required")
    return exp_p(direction_log(logs, s, level, g))


# --- finite-order characters ---

@dataclass(frozen=True)
class FiniteCharacter:
    """
    Character of G_level with values exp(2 pi i * angle), angles in Q/Z.

    angles[t] is the angle on the t-th cyclic generator. Values enter Q_p
    through Teichmüller lifts, which needs the order to divide p - 1.
    """
    tower: ClassGroupTower
    level: tuple
    angles: tuple

    def __post_init__(self):
        G = self.tower.group(self.level)
        if len(self.angles) != G.rank:
            raise errors.NotMultiplicative("one angle per cyclic generator is required")
        for o, a in zip(G.orders, self.angles):
            if (a * o).denominator != 1:
                raise errors.NotMultiplicative(f"angle {a} is not killed by the generator order {o}")

    @property
    def order(self) -> int:
        return reduce(lcm, (a.denominator for a in self.angles), 1)

    def angle(self, x) -> Fraction:
        total = sum((a * c for a, c in zip(self.angles, x)), Fraction(0))
        return total - (total.numerator // total.denominator)

    def pullback(self, level) -> "FiniteCharacter":
        level = tuple(level)
        if level == self.level:
            return self
        images = self.tower.projection_images(level, self.level)
        return FiniteCharacter(self.tower, level, tuple(self.angle(img) for img in images))

    def __mul__(self, other: "FiniteCharacter") -> "FiniteCharacter":
        level = self.level
        if other.level != level:
            if level_leq(other.level, level):
                other = other.pullback(level)
            elif level_leq(level, other.level):
                return other * self
            else:
                raise errors.LevelUnavailable("characters at incomparable levels")
        return FiniteCharacter(self.tower, level, tuple(
            (a + b) - ((a + b).numerator // (a + b).denominator) for a, b in zip(self.angles, other.angles)))

    def is_trivial(self) -> bool:
        return all(a == 0 for a in self.angles)

    def factors_through(self, lo) -> bool:
        lo = tuple(lo)
        if not level_leq(lo, self.level) or lo not in self.tower.levels:
            return False
        G = self.tower.group(self.level)
        images = self.tower.projection_images(self.level, lo)
        kernel_trivial = self.tower.group(lo).identity()
        for x in G.elements():
            if self.tower._project_with(images, self.tower.group(lo), x) == kernel_trivial and self.angle(x) != 0:
                return False
        return True

    def conductor(self) -> tuple:
        # Minimal present level through which the character factors
        candidates = [n for n in self.tower.sorted_levels() if self.factors_through(n)]
        return candidates[0] if candidates else self.level

    def value(self, x, p: int, N: int) -> PadicNumber:
        return embed_root_of_unity(self.angle(x), p, N)


def embed_root_of_unity(angle: Fraction, p: int, N: int) -> PadicNumber:
    # exp(2 pi i angle) -> Teichmüller lift of g^((p-1) angle), g a primitive root mod p
    if angle == 0:
        return PadicNumber.one(p, N)
    m = angle.denominator
    if (p - 1) % m:
        raise errors.CharacterNotEmbeddable(f"roots of unity of order {m} do not lie in Q_{p}")
    g = primitive_root(p)
    exponent = (angle.numerator * (p - 1) // m) % (p - 1)
    return teichmuller(pow(g, exponent, p), p, N)


def finite_character(tower: ClassGroupTower, level, table: dict) -> FiniteCharacter:
    """
    Character from a table label -> angle (Fraction in [0, 1)).

    The table must contain the cyclic generators; every other entry is
    checked against the value the generators force.
    """
    level = tuple(level)
    G = tower.group(level)
    values = {G.element(k): Fraction(v) for k, v in table.items()}
    angles = []
    for g in G.generators():
        if g not in values:
            raise errors.NotMultiplicative(f"generator {G.label_of(g)} has no value")
        angles.append(values[g])
    chi = FiniteCharacter(tower, level, tuple(angles))
    for x, a in values.items():
        if (chi.angle(x) - a).denominator != 1:
            raise errors.NotMultiplicative(f"value on {G.label_of(x)} breaks multiplicativity")
    return chi


def trivial_character(tower: ClassGroupTower, level=None) -> FiniteCharacter:
    level = tuple(level) if level is not None else tower.zero_level()
    return FiniteCharacter(tower, level, (Fraction(0),) * tower.group(level).rank)


# --- synthetic towers ---

def cyclic_tower(p: int, depth: int, finite_order: int = 1, c0: int = 1) -> ClassGroupTower:
    # G_n = Z/finite_order x Z/p^n with the obvious reductions, a split-prime model tower
    levels = {}
    projections = {}
    for n in range(depth + 1):
        orders = tuple(o for o in (finite_order, p ** n) if o > 1)
        levels[(n,)] = LevelGroup((n,), orders)
    for n in range(1, depth + 1):
        hi, lo = levels[(n,)], levels[(n - 1,)]
        images = []
        for g in hi.generators():
            full = _split_coords(g, finite_order, p ** n)
            images.append(_join_coords(full, finite_order, p ** (n - 1), lo))
        projections[((n,), (n - 1,))] = images
    tower = ClassGroupTower((p,), c0, levels, projections)
    logger.debug("cyclic tower for p=%d through level %d", p, depth)
    return tower


def _split_coords(x, f: int, q: int) -> tuple:
    it = iter(x)
    a = next(it) if f > 1 else 0
    b = next(it) if q > 1 else 0
    return a, b


def _join_coords(ab, f: int, q: int, G: LevelGroup) -> tuple:
    a, b = ab
    out = []
    if f > 1:
        out.append(a % f)
    if q > 1:
        out.append(b % q)
    return G.reduce(out)


def product_tower(a: ClassGroupTower, b: ClassGroupTower, diagonal: bool = True) -> ClassGroupTower:
    # Tower for J = J_a u J_b on the levels (n, m); diagonal keeps only n = m steps
    levels = {}
    for la, Ga in a.levels.items():
        for lb, Gb in b.levels.items():
            if diagonal and la[-1] != lb[-1]:
                continue
            levels[la + lb] = LevelGroup(la + lb, Ga.orders + Gb.orders)
    projections = {}
    for (ha, lo_a), _ in a.projections.items():
        for (hb, lo_b), _ in b.projections.items():
            hi, lo = ha + hb, lo_a + lo_b
            if hi in levels and lo in levels:
                ia = a.projection_images(ha, lo_a)
                ib = b.projection_images(hb, lo_b)
                zeros_b = (0,) * b.levels[lo_b].rank
                zeros_a = (0,) * a.levels[lo_a].rank
                projections[(hi, lo)] = [tuple(x) + zeros_b for x in ia] + [zeros_a + tuple(y) for y in ib]
    return ClassGroupTower(a.primes + b.primes, a.c0, levels, projections)
