# src/theta.py
# Theta elements over class-group towers, the p-adic L-function and its square,
# interpolation multipliers, cocycle-built Gross-point data and the derivative engine.

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from sympy.ntheory import discrete_log, primitive_root

import errors
from anticyclo import (
    ClassGroupTower, CharacterFamilyPoint, FiniteCharacter, LevelGroup,
    RepresentativeLogFunctional, direction_log, epsilon_eval, level_leq, trivial_character,
)
from bt_tree import Disc
from distribution import TreeDistribution, l_invariant, schneider_value
from harmonic import HarmonicCocycle, is_zero
from padic_core import INF, LogBranch, PadicNumber, branch_log

logger = logging.getLogger(__name__)


@dataclass
class GrossPointData:
    """
    Per-level value tables of a p-stabilized toric period.

    values[level][x] stands for phi(a * sigma^(n)) nu(a) at the element x of
    G_level; missing elements are zero. For every listed projection
    hi -> lo the fibre sums of the hi-table equal prod alpha_p^(hi_p - lo_p)
    times the lo-table.
    """
    tower: ClassGroupTower
    alpha: dict
    split: dict
    values: dict
    provenance: str = "ingested"
    representatives: dict = field(default_factory=dict, repr=False)
    # Total weight of the extra finite factor of cocycle-built data
    finite_weight: Fraction = Fraction(1)

    @property
    def p(self) -> int:
        return self.tower.primes[0]

    @property
    def precision(self) -> int:
        N = min((x.N for table in self.values.values() for x in table.values()), default=None)
        if N is None:
            N = min(a.N for a in self.alpha.values())
        return N

    def levels(self) -> list[tuple]:
        return sorted(self.values, key=lambda n: (sum(n), n))

    def table(self, level) -> dict:
        level = tuple(level)
        if level not in self.values:
            raise errors.MissingLevel(f"no theta values at level {list(level)}")
        return self.values[level]

    def alpha_power(self, level) -> PadicNumber:
        total = PadicNumber.one(self.p, self.precision)
        for prime, n in zip(self.tower.primes, level):
            total = total * self.alpha[prime] ** n
        return total

    def validate(self) -> list[str]:
        report = []
        for prime, a in self.alpha.items():
            if a.is_zero() or a.v != 0:
                report.append(f"alpha_{prime} is not a p-adic unit")
        for (hi, lo) in self.tower.projections:
            if hi not in self.values or lo not in self.values:
                continue
            factor = PadicNumber.one(self.p, self.precision)
            for prime, a, b in zip(self.tower.primes, hi, lo):
                factor = factor * self.alpha[prime] ** (a - b)
            pushed = pushforward(self.tower, self.values[hi], hi, lo)
            G_lo = self.tower.group(lo)
            for y in G_lo.elements():
                lower = self.values[lo].get(y)
                expected = factor * lower if lower is not None else None
                got = pushed.get(y)
                if not _same(got, expected):
                    report.append(f"trace {list(hi)}->{list(lo)} fails at {G_lo.label_of(y)}")
        return report


def _same(x, y) -> bool:
    if x is None and y is None:
        return True
    if x is None:
        return is_zero(y)
    if y is None:
        return is_zero(x)
    return (x - y).is_zero()


def pushforward(tower: ClassGroupTower, coeffs: dict, hi, lo) -> dict:
    G_lo = tower.group(lo)
    images = tower.projection_images(hi, lo)
    out = {}
    for x, c in coeffs.items():
        y = tower._project_with(images, G_lo, x)
        out[y] = out[y] + c if y in out else c
    return out


@dataclass
class ThetaElement:
    group: LevelGroup
    coeffs: dict

    def evaluate(self, chi: FiniteCharacter, p: int, N: int) -> PadicNumber:
        total = PadicNumber.zero(p, N)
        for x, c in self.coeffs.items():
            total = total + c * chi.value(x, p, N)
        return total


def theta_element(data: GrossPointData, level) -> ThetaElement:
    level = tuple(level)
    table = data.table(level)
    scale = data.alpha_power(level)
    return ThetaElement(data.tower.group(level), {x: c / scale for x, c in table.items()})


def check_compatibility(data: GrossPointData, hi, lo) -> bool:
    hi, lo = tuple(hi), tuple(lo)
    if not level_leq(lo, hi):
        raise errors.ValidationError(f"level {list(lo)} is not below {list(hi)}")
    upper = theta_element(data, hi)
    lower = theta_element(data, lo)
    pushed = pushforward(data.tower, upper.coeffs, hi, lo)
    keys = set(pushed) | set(lower.coeffs)
    return all(_same(pushed.get(y), lower.coeffs.get(y)) for y in keys)


# --- character values ---

def character_at(chi: FiniteCharacter, level) -> FiniteCharacter:
    # The same character seen at another level of the tower
    level = tuple(level)
    if level == chi.level:
        return chi
    if level_leq(chi.level, level):
        return chi.pullback(level)
    if not chi.factors_through(level):
        raise errors.LevelUnavailable(f"character does not factor through level {list(level)}")
    tower = chi.tower
    G_hi, G_lo = tower.group(chi.level), tower.group(level)
    images = tower.projection_images(chi.level, level)
    preimage = {}
    for x in G_hi.elements():
        preimage.setdefault(tower._project_with(images, G_lo, x), x)
    return FiniteCharacter(tower, level, tuple(chi.angle(preimage[g]) for g in G_lo.generators()))


def evaluation_level(data: GrossPointData, chi: FiniteCharacter) -> tuple:
    conductor = chi.conductor()
    for level in data.levels():
        if level_leq(conductor, level) and (level_leq(level, chi.level) or level_leq(chi.level, level)):
            return level
    raise errors.LevelUnavailable(f"no data level above the conductor {list(conductor)}")


def script_L(data: GrossPointData, chi: FiniteCharacter | None = None, level=None) -> PadicNumber:
    chi = chi or trivial_character(data.tower)
    level = tuple(level) if level is not None else evaluation_level(data, chi)
    return theta_element(data, level).evaluate(character_at(chi, level), data.p, data.precision)


def L_value(data: GrossPointData, chi: FiniteCharacter | None = None, level=None) -> PadicNumber:
    value = script_L(data, chi, level)
    return value * value


# --- interpolation multipliers ---

MULTIPLIER_CASES = ("split", "inert", "ramified")


@dataclass(frozen=True)
class MultiplierParams:
    case: str
    alpha: Fraction
    abs_p: Fraction
    r: int = 0
    s: int = 0
    chi_P: Fraction | None = None
    chi_Pbar: Fraction | None = None

    def check(self):
        if self.case not in MULTIPLIER_CASES:
            raise errors.InconsistentCase(f"unknown case {self.case!r}")
        if self.r not in (0, 1):
            raise errors.InconsistentCase("ord_p of the level must be 0 or 1")
        if self.s < 0:
            raise errors.InconsistentCase("conductor exponent must be >= 0")
        if not 0 < self.abs_p < 1:
            raise errors.InconsistentCase("|p| must lie in (0, 1)")
        if self.r == 1 and self.alpha not in (1, -1):
            raise errors.InconsistentCase("alpha must be +1 or -1 when p divides the level exactly")
        if self.s == 0 and self.case == "split" and (self.chi_P is None or self.chi_Pbar is None):
            raise errors.InconsistentCase("split unramified case needs chi(P) and chi(Pbar)")
        if self.s == 0 and self.case == "ramified" and self.chi_P is None:
            raise errors.InconsistentCase("ramified case needs chi(P)")


@dataclass(frozen=True)
class MultiplierResult:
    e_bar: Fraction
    e_tilde: Fraction
    e: Fraction


def multiplier_e(params: MultiplierParams) -> MultiplierResult:
    params.check()
    a = Fraction(params.alpha)
    if params.s > 0:
        e_bar = Fraction(1)
    elif params.case == "split":
        e_bar = (1 - params.chi_P / a) * (1 - params.chi_Pbar / a)
    elif params.case == "inert":
        e_bar = 1 - 1 / (a * a)
    else:
        e_bar = 1 - params.chi_P / a
    if params.s == 0:
        tail = a * a * params.abs_p ** 2
    else:
        tail = params.abs_p ** params.s
    e_tilde = e_bar ** (2 - params.r) * tail
    e = (a * a * params.abs_p) ** (-params.s) * e_tilde
    return MultiplierResult(e_bar, e_tilde, e)


def multiplier_display(params: MultiplierParams) -> Fraction:
    # Two-case closed form for split primes with trivial twist
    params.check()
    if params.case != "split":
        raise errors.InconsistentCase("the closed form covers split primes only")
    a = Fraction(params.alpha)
    if params.s == 0:
        return a * a * (1 - a * params.chi_P) * (1 - a * params.chi_Pbar) * params.abs_p ** 2
    n = params.s
    return params.abs_p ** (-n) / a ** (2 * n)


# --- Gross-point data from a periodic cocycle ---

@dataclass
class _LocalLevel:
    group: LevelGroup
    reps: dict      # element -> (i, u)
    index: dict     # (i, u) -> element


def _unit_generator(p: int) -> int:
    # Primitive root mod p^2, hence mod every p^n
    g = primitive_root(p)
    if pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _local_level(p: int, h: int, unit_tilde: int, n: int) -> _LocalLevel:
    # Q_p^x / (qtilde^Z (1 + p^n Z_p)) with generators the class of p and a unit generator
    if n == 0:
        relations = [[h, 0], [0, 1]]
        units = [1]
        logs = {1: 0}
    else:
        mod = p ** n
        phi = (p - 1) * p ** (n - 1)
        r = _unit_generator(p)
        k = discrete_log(mod, unit_tilde % mod, r)
        relations = [[h, -k], [0, phi]]
        logs = {}
        x = 1
        for e in range(phi):
            logs[x] = e
            x = x * r % mod
        units = sorted(logs)
    group = LevelGroup.from_relations((n,), relations, 2)
    reps, index = {}, {}
    for i in range(h):
        for u in units:
            x = group.from_generators((i, logs[u]))
            reps[x] = (i, u)
            index[(i, u)] = x
    if len(reps) != group.size:
        raise errors.InvalidCocycle(f"coset representatives do not match the level-{n} group")
    return _LocalLevel(group, reps, index)


def _coset_mass(d: TreeDistribution, p: int, i: int, u: int, n: int) -> Fraction:
    # mu of p^i u (1 + p^n Z_p), or of the shell v = i when n = 0
    if n == 0:
        return d.moment(Disc(p, 0, i), 0) - d.moment(Disc(p, 0, i + 1), 0)
    return d.moment(Disc(p, Fraction(p) ** i * u, i + n), 0)


def build_gross_data_from_cocycle(cocycles: list[HarmonicCocycle], max_level: int,
                                  finite_part: dict | None = None, finite_order: int = 1,
                                  N: int | None = None) -> GrossPointData:
    """
    Gross-point data whose level-n table is the cocycle measure on the cosets
    p^i u (1 + p^n Z_p) of a fundamental domain for x -> qtilde x.

    One periodic weight-2 cocycle per exceptional prime; several cocycles give
    the product measure on the diagonal levels (n, ..., n). finite_part maps
    residues mod finite_order to weights of an extra finite factor.
    """
    if not cocycles:
        raise errors.InvalidCocycle("at least one cocycle is required")
    for c in cocycles:
        if c.weight != 2 or c.gamma is None or c.qtilde is None:
            raise errors.InvalidCocycle("Gross-point data needs periodic weight-2 cocycles")
        # Coset balls B(p^i u, i + n) with i < h must lie inside the table
        if max_level + c.qtilde.v > c.depth:
            raise errors.DepthTooShallow(f"level {max_level} needs a table of depth {max_level + c.qtilde.v}")
    N = N or min(c.qtilde.N for c in cocycles)
    weights = {k % finite_order: Fraction(w) for k, w in (finite_part or {0: 1}).items()}
    primes = tuple(c.p for c in cocycles)
    locals_, masses = [], []
    for c in cocycles:
        h = c.qtilde.v
        unit_tilde = c.qtilde.u
        d = TreeDistribution(c)
        per_level, per_mass = {}, {}
        for n in range(max_level + 1):
            loc = _local_level(c.p, h, unit_tilde, n)
            per_level[n] = loc
            per_mass[n] = {x: _coset_mass(d, c.p, i, u, n) for x, (i, u) in loc.reps.items()}
        locals_.append(per_level)
        masses.append(per_mass)

    levels, values, reps = {}, {}, {}
    f_orders = (finite_order,) if finite_order > 1 else ()
    for n in range(max_level + 1):
        level = (n,) * len(cocycles)
        orders = f_orders + tuple(o for loc in locals_ for o in loc[n].group.orders)
        G = LevelGroup(level, orders)
        levels[level] = G
        table = {}
        for x in G.elements():
            parts, f_part = _split_element(x, f_orders, [loc[n].group.rank for loc in locals_])
            w = weights.get(f_part, Fraction(0))
            if w == 0:
                continue
            mass = w
            for k, part in enumerate(parts):
                mass *= masses[k][n][part]
                if mass == 0:
                    break
            if mass != 0:
                table[x] = PadicNumber.from_rational(mass, primes[0], N)
        values[level] = table
        reps[level] = {x: tuple(locals_[k][n].reps[part] for k, part in enumerate(
            _split_element(x, f_orders, [loc[n].group.rank for loc in locals_])[0])) for x in G.elements()}

    projections = {}
    for n in range(1, max_level + 1):
        hi, lo = (n,) * len(cocycles), (n - 1,) * len(cocycles)
        images = []
        for g in levels[hi].generators():
            parts, f_part = _split_element(g, f_orders, [loc[n].group.rank for loc in locals_])
            lower = []
            for k, part in enumerate(parts):
                i, u = locals_[k][n].reps[part]
                p = primes[k]
                u_low = u % p ** (n - 1) if n > 1 else 1
                lower.append(locals_[k][n - 1].index[(i, u_low)])
            images.append(_join_element(f_part, f_orders, lower))
        projections[(hi, lo)] = images
    tower = ClassGroupTower(primes, 1, levels, projections)
    one = PadicNumber.one(primes[0], N)
    data = GrossPointData(tower, {p: one for p in primes}, {p: True for p in primes}, values,
                          provenance="cocycle", representatives=reps,
                          finite_weight=sum(weights.values(), Fraction(0)))
    logger.debug("built Gross-point data for primes %s through level %d", primes, max_level)
    return data


def _split_element(x, f_orders, ranks):
    x = tuple(x)
    pos = len(f_orders)
    f_part = x[0] if f_orders else 0
    parts = []
    for r in ranks:
        parts.append(x[pos:pos + r])
        pos += r
    return parts, f_part


def _join_element(f_part, f_orders, parts) -> tuple:
    out = [f_part % f_orders[0]] if f_orders else []
    for part in parts:
        out.extend(part)
    return tuple(out)


def representative_logs(data: GrossPointData, branches: list[LogBranch]) -> list[RepresentativeLogFunctional]:
    # log_u of the coset representative p^i u, one functional per exceptional prime
    if not data.representatives:
        raise errors.ValidationError("data carries no coset representatives")
    logs = []
    for k, branch in enumerate(branches):
        p = branch.p
        N = branch.u.N
        cache = {}
        table = {}
        for level, reps in data.representatives.items():
            row = {}
            for x, rep in reps.items():
                i, u = rep[k]
                if (i, u) not in cache:
                    cache[(i, u)] = branch_log(branch, PadicNumber.from_rational(Fraction(p) ** i * u, p, N))
                row[x] = cache[(i, u)]
            table[level] = row
        logs.append(RepresentativeLogFunctional(f"log[{k}]", table))
    return logs


def transfer_check(c: HarmonicCocycle) -> tuple:
    # mu(Z_p) from disc moments against the restricted value delta/h from the Schneider sum
    d = TreeDistribution(c)
    lhs = d.moment(Disc(c.p, 0, 0), 0)
    rhs = Fraction(schneider_value(c, c.gamma)) / c.qtilde.v
    return lhs, rhs, lhs == rhs


# --- log-power integrals and the series in t ---

@dataclass(frozen=True)
class LevelSumResult:
    value: PadicNumber
    level: tuple
    digits: int | float
    gap: int | float

    def __str__(self):
        return f"{self.value} [digits={self.digits}, level={list(self.level)}]"


def _level_chain(data: GrossPointData, chi: FiniteCharacter) -> list[tuple]:
    conductor = chi.conductor()
    chain = []
    for level in data.levels():
        if not level_leq(conductor, level):
            continue
        if not (level_leq(level, chi.level) or level_leq(chi.level, level)):
            continue
        if chain and not level_leq(chain[-1], level):
            continue
        chain.append(level)
    if not chain:
        raise errors.LevelUnavailable(f"no data level above the conductor {list(conductor)}")
    return chain


def level_sum(data: GrossPointData, chi: FiniteCharacter, logs, direction, k: int, level) -> PadicNumber:
    # sum_a Theta_n[a] chi(a) l(a)^k with l = sum s_sigma log_sigma
    level = tuple(level)
    theta = theta_element(data, level)
    chi_n = character_at(chi, level)
    p, N = data.p, data.precision
    total = PadicNumber.zero(p, N)
    for x, c in theta.coeffs.items():
        term = c * chi_n.value(x, p, N)
        if k:
            term = term * direction_log(logs, direction, level, x) ** k
        total = total + term
    return total


def integrate_log_power(data: GrossPointData, chi: FiniteCharacter | None, logs, k: int,
                        direction) -> LevelSumResult:
    if k < 0:
        raise errors.ValidationError("k must be >= 0")
    chi = chi or trivial_character(data.tower)
    chain = _level_chain(data, chi)
    target = data.precision - 2
    previous = None
    best = None
    for level in chain:
        value = level_sum(data, chi, logs, direction, k, level)
        if k == 0:
            # Compatibility makes the k = 0 sums level independent
            return LevelSumResult(value, level, value.N, INF)
        if previous is not None:
            gap = value.agreement(previous)
            if gap >= target:
                logger.debug("log-power integral k=%d stabilized at level %s", k, list(level))
                return LevelSumResult(value, level, min(value.N, gap), gap)
            best = (value, gap, level)
        previous = value
    if best is None:
        raise errors.NoStabilization("only one level available", best=previous, gap=0, level=chain[-1])
    value, gap, level = best
    logger.warning("log-power integral k=%d did not stabilize: gap %s at level %s", k, gap, list(level))
    raise errors.NoStabilization(f"level sums agree to {gap} digits only", best=value, gap=gap, level=level)


def L_series(data: GrossPointData, logs, direction, order: int,
             chi: FiniteCharacter | None = None) -> list[PadicNumber]:
    # c_k = integral of chi l^k / k! for k = 0..order
    if order > 6:
        raise errors.ValidationError("series order is limited to 6")
    coeffs = []
    for k in range(order + 1):
        result = integrate_log_power(data, chi, logs, k, direction)
        coeffs.append(result.value / factorial(k))
    return coeffs


def square_series(coeffs: list) -> list:
    out = []
    for n in range(len(coeffs)):
        total = coeffs[0] * coeffs[n]
        for i in range(1, n + 1):
            total = total + coeffs[i] * coeffs[n - i]
        out.append(total)
    return out


def series_at(coeffs: list, t: PadicNumber) -> PadicNumber:
    total = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        total = total * t + c
    return total


def family_value(data: GrossPointData, chi: FiniteCharacter | None, logs,
                 point: CharacterFamilyPoint, level) -> PadicNumber:
    # Direct sum of Theta_n[a] chi(a) eps^s(a)
    chi = chi or trivial_character(data.tower)
    level = tuple(level)
    theta = theta_element(data, level)
    chi_n = character_at(chi, level)
    p, N = data.p, data.precision
    total = PadicNumber.zero(p, N)
    for x, c in theta.coeffs.items():
        total = total + c * chi_n.value(x, p, N) * epsilon_eval(logs, point, level, x)
    return total


# --- the leading term at exceptional characters ---

@dataclass
class LeadingTermReport:
    rank: int
    coefficients: list
    predicted: PadicNumber
    main_term: PadicNumber
    l_invariants: list
    restricted: list
    lower_order_digits: list
    agreement: int | float
    # Agreement with the main term, set when every log_u(qtilde) vanishes
    main_agreement: int | float | None = None
    l_digits: list = field(default_factory=list)

    def ok(self, digits: int) -> bool:
        if self.main_agreement is not None and self.main_agreement < digits:
            return False
        return self.agreement >= digits and all(d >= digits for d in self.lower_order_digits)


def leading_term_check(data: GrossPointData, cocycles: list[HarmonicCocycle], branches: list[LogBranch],
                       direction, depth: int = 8, method: str = "auto") -> LeadingTermReport:
    """
    Compare the order-r coefficient of the series with the L-invariant side.

    For every exceptional prime the fundamental-domain integral of log_u is
    h L - log_u(qtilde) times the restricted value delta/h; the order-r
    coefficient is the product of these times prod s_i. The main term
    prod h L R is reported next to it and compared too when log_u kills
    every qtilde. L comes from the orbit closed form when the cocycle
    carries one, otherwise from a depth-m Riemann sum.
    """
    r = len(cocycles)
    if len(branches) != r or len(direction.s) != r:
        raise errors.ValidationError("one branch and one direction coordinate per exceptional prime")
    for p, a in data.alpha.items():
        if not (a - 1).is_zero():
            raise errors.ValidationError(f"alpha_{p} != 1: prime {p} is not exceptional")
    logs = representative_logs(data, branches)
    coeffs = L_series(data, logs, direction, r)
    N = data.precision
    p = data.p
    predicted = PadicNumber.one(p, N)
    main = PadicNumber.one(p, N)
    l_invs, restricted, l_digits = [], [], []
    kills_qtilde = True
    for c, branch, s in zip(cocycles, branches, direction.s):
        h = c.qtilde.v
        result = l_invariant(c, c.gamma, branch, depth, method=method)
        L = result.value
        _, R, _ = transfer_check(c)
        log_q = branch_log(branch, c.qtilde)
        kills_qtilde = kills_qtilde and log_q.is_zero()
        predicted = predicted * s * (L * h - log_q) * R
        main = main * s * L * h * R
        l_invs.append(L)
        restricted.append(R)
        l_digits.append(result.digits)
    predicted = predicted * data.finite_weight
    main = main * data.finite_weight
    lower = [coeffs[k].agreement(PadicNumber.zero(p, N)) for k in range(r)]
    main_agreement = coeffs[r].agreement(main) if kills_qtilde else None
    report = LeadingTermReport(r, coeffs, predicted, main, l_invs, restricted, lower,
                               coeffs[r].agreement(predicted), main_agreement, l_digits)
    logger.debug("leading term r=%d agreement %s, main term %s", r, report.agreement, main_agreement)
    return report
