# src/distribution.py
# The distribution of a bounded harmonic cocycle: disc moments, Riemann sums of
# locally analytic functions, Schneider and Coleman evaluation, L-invariants,
# and the Tate parameter of a j-invariant.

import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb

from sympy import divisor_sigma

import errors
from bt_tree import (
    INFINITY, Disc, TreeEdge, act, as_matrix, base_vertex, disc_to_edge,
    edge_to_disc, edges_from, geodesic, vp,
)
from harmonic import HarmonicCocycle, MultiCocycle, evaluate, is_zero
from padic_core import INF, LogBranch, PadicNumber, Qp2Number, branch_log

logger = logging.getLogger(__name__)


# --- locally analytic integrands ---

@dataclass(frozen=True)
class PolyPiece:
    # f(x) = sum coeffs[i] x^i
    coeffs: tuple

    def taylor(self, a, degree: int) -> list:
        n = len(self.coeffs)
        return [
            sum((self.coeffs[k] * comb(k, i) * a ** (k - i) for k in range(i, n)), Fraction(0))
            for i in range(degree + 1)
        ]

    def at_infinity(self):
        if any(not is_zero(c) for c in self.coeffs[1:]):
            raise errors.ValidationError("a non-constant polynomial has a pole at infinity")
        return self.coeffs[0] if self.coeffs else Fraction(0)

    def oscillation(self, p: int, disc: Disc):
        # Lower bound on v(f(x) - f(center)) over the disc
        if disc.outer:
            return INF
        best = INF
        for i, c in enumerate(self.taylor(disc.a, len(self.coeffs) - 1)[1:], start=1):
            if not is_zero(c):
                v = c.v if isinstance(c, PadicNumber) else vp(c, p)
                best = min(best, v + i * disc.m)
        return best


def indicator_piece(value=1) -> PolyPiece:
    return PolyPiece((Fraction(value) if not isinstance(value, PadicNumber) else value,))


@dataclass(frozen=True)
class LogRatioPiece:
    # f(x) = log_u((x - w1)/(x - w2))
    branch: LogBranch
    w1: object
    w2: object

    def taylor(self, a, degree: int) -> list:
        d1 = Fraction(a) - self.w1
        d2 = Fraction(a) - self.w2
        if d1.is_zero() or d2.is_zero():
            raise errors.DepthTooShallow("sample point hits a pole of the logarithm")
        out = [branch_log(self.branch, d1 / d2)]
        if degree >= 1:
            inv1, inv2 = 1 / d1, 1 / d2
            pow1, pow2 = inv1, inv2
            for i in range(1, degree + 1):
                sign = Fraction(1 if i % 2 else -1, i)
                out.append((pow1 - pow2) * sign)
                pow1, pow2 = pow1 * inv1, pow2 * inv2
        return out

    def at_infinity(self):
        return Fraction(0)

    def oscillation(self, p: int, disc: Disc):
        if disc.outer:
            # (x - w1)/(x - w2) = 1 + (w2 - w1)/(x - w2) with v(x) <= m - 1 < 0
            if disc.a != 0 or disc.m > 0:
                return 0
            return (self.w2 - self.w1).valuation() - (disc.m - 1)
        d1 = Fraction(disc.a) - self.w1
        d2 = Fraction(disc.a) - self.w2
        return disc.m - max(d1.valuation(), d2.valuation())


@dataclass
class LocallyAnalyticFunction:
    """
    Finite list of (Disc, piece) pairs with pairwise disjoint discs.

    The function vanishes off the listed discs. A Riemann sum at depth m
    needs every cover disc to be inside a piece or disjoint from it.
    """
    p: int
    pieces: list

    @classmethod
    def on_p1(cls, p: int, piece) -> "LocallyAnalyticFunction":
        # The same piece on Z_p and on its complement
        return cls(p, [(Disc(p, 0, 0), piece), (Disc(p, 0, 0, True), piece)])

    def piece_for(self, disc: Disc):
        for piece_disc, piece in self.pieces:
            if disc_inside(disc, piece_disc):
                return piece
            if discs_meet(disc, piece_disc):
                raise errors.DepthTooShallow(f"cover disc {disc.label()} straddles {piece_disc.label()}")
        return None


def disc_inside(inner: Disc, outer: Disc) -> bool:
    p = inner.p
    if not inner.outer and not outer.outer:
        return inner.m >= outer.m and vp(inner.a - outer.a, p) >= outer.m
    if not inner.outer and outer.outer:
        return vp(inner.a - outer.a, p) < min(inner.m, outer.m)
    if inner.outer and outer.outer:
        return disc_inside(Disc(p, outer.a, outer.m), Disc(p, inner.a, inner.m))
    return False


def discs_meet(x: Disc, y: Disc) -> bool:
    p = x.p
    if x.outer and y.outer:
        return True
    if not x.outer and not y.outer:
        return vp(x.a - y.a, p) >= min(x.m, y.m)
    ball, comp = (x, y) if not x.outer else (y, x)
    return not disc_inside(ball, Disc(p, comp.a, comp.m))


# --- the distribution ---

@dataclass(frozen=True)
class IntegrationResult:
    value: object
    depth: int
    digits: int | float
    gap_digits: int | float
    bound_digits: int | float

    def __str__(self):
        return f"{self.value} [digits={self.digits}, depth={self.depth}]"


def value_digits(x) -> int | float:
    # Valuation of a value, with exact zeros reporting their precision
    if isinstance(x, PadicNumber):
        return x.N if x.is_zero() else x.v
    if isinstance(x, Qp2Number):
        return min(value_digits(x.a), value_digits(x.b))
    return INF


def arithmetic_precision(x) -> int | float:
    if isinstance(x, (PadicNumber, Qp2Number)):
        return x.N
    return INF


class TreeDistribution:
    """
    Moment and Riemann-sum view of a bounded harmonic cocycle.

    moment(U_e, j) is the j-th coordinate of c(e). The moment cache is
    shared between threads and guarded by a lock.
    """

    def __init__(self, cocycle: HarmonicCocycle):
        self.cocycle = cocycle
        self.p = cocycle.p
        self._cache = {}
        self._lock = threading.Lock()
        self._support = None

    def moment(self, disc: Disc, j: int):
        k = self.cocycle.weight
        if not 0 <= j <= k - 2:
            raise errors.BadMomentIndex(f"moment index {j} outside 0..{k - 2}")
        key = (disc, j)
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        value = evaluate(self.cocycle, disc_to_edge(disc))[j]
        with self._lock:
            self._cache[key] = value
        return value

    def moments(self, disc: Disc) -> tuple:
        return tuple(self.moment(disc, j) for j in range(self.cocycle.weight - 1))

    def centered_moment(self, disc: Disc, j: int):
        # integral of (x - a)^j over the ball B(a, m)
        if disc.outer:
            raise errors.ValidationError("centered moments need a finite disc")
        a = disc.a
        return sum((comb(j, l) * (-a) ** (j - l) * self.moment(disc, l) for l in range(j + 1)), Fraction(0))

    def support_index(self) -> set:
        # Outward edges whose disc meets the support of the table
        if self._support is None:
            c = self.cocycle
            center = c.center
            index = set()
            for e in c.support_edges():
                if not c.in_region(e):
                    continue
                path = geodesic(center, e.target)
                if path and path[-1] == e:
                    index.update(path)
            self._support = index
        return self._support

    def cover(self, m: int) -> list[TreeEdge]:
        # Edges at distance m from the center pointing outward, pruned to the support
        c = self.cocycle
        if m < 1:
            raise errors.DepthTooShallow("Riemann sums need depth >= 1")
        if m > c.depth:
            raise errors.DepthTooShallow(f"depth {m} exceeds the table depth {c.depth}")
        support = self.support_index()
        frontier = [e for e in edges_from(c.center) if e in support]
        for _ in range(m - 1):
            frontier = [
                f for e in frontier for f in edges_from(e.target)
                if f.target != e.source and f in support
            ]
        return frontier

    def growth_constant(self, max_level: int) -> Fraction:
        # Measured A with |int_{B(a,m)} (x-a)^j| <= A p^(-m(j+1-k/2)) over balls down to max_level
        k = self.cocycle.weight
        best = Fraction(0)
        for disc in self._balls(max_level):
            for j in range(k - 1):
                value = self.centered_moment(disc, j)
                if is_zero(value):
                    continue
                norm = value.abs_value() if isinstance(value, PadicNumber) else Fraction(self.p) ** (-vp(value, self.p))
                best = max(best, norm * Fraction(self.p) ** (disc.m * (j + 1 - Fraction(k, 2))))
        return best

    def growth_bound_holds(self, A: Fraction, max_level: int) -> bool:
        k = self.cocycle.weight
        for disc in self._balls(max_level):
            for j in range(k - 1):
                value = self.centered_moment(disc, j)
                if is_zero(value):
                    continue
                norm = value.abs_value() if isinstance(value, PadicNumber) else Fraction(self.p) ** (-vp(value, self.p))
                if norm > A * Fraction(self.p) ** (-disc.m * (j + 1 - Fraction(k, 2))):
                    return False
        return True

    def _balls(self, max_level: int):
        for m in range(1, max_level + 1):
            for e in self.cover(m):
                disc = edge_to_disc(e)
                if not disc.outer and disc.m >= 0:
                    yield disc

    def total_mass(self) -> tuple:
        # Moments over P^1: the sum over the depth-1 cover, zero for a harmonic table
        total = [Fraction(0)] * (self.cocycle.weight - 1)
        for e in edges_from(self.cocycle.center):
            vec = evaluate(self.cocycle, e)
            total = [t + x for t, x in zip(total, vec)]
        return tuple(total)


def _contribution(d: TreeDistribution, f: LocallyAnalyticFunction, e: TreeEdge):
    vec = evaluate(d.cocycle, e)
    if all(is_zero(x) for x in vec):
        return None
    disc = edge_to_disc(e)
    piece = f.piece_for(disc)
    if piece is None:
        return None
    k = d.cocycle.weight
    if disc.outer:
        if k > 2:
            raise errors.ValidationError("weight > 2 integrands must vanish near infinity")
        return piece.at_infinity() * vec[0], piece.oscillation(d.p, disc), vec[0]
    a = disc.a
    coeffs = piece.taylor(a, k - 2)
    total = Fraction(0)
    for i, fi in enumerate(coeffs):
        for l in range(i + 1):
            total = total + fi * (comb(i, l) * (-a) ** (i - l) * vec[l])
    return total, piece.oscillation(d.p, disc), vec[0]


def riemann_sum(d: TreeDistribution, f: LocallyAnalyticFunction, m: int, workers: int = 1):
    # Depth-m Riemann sum and the a-priori digits sum_U osc_U(f) * |mu(U)|
    cover = d.cover(m)
    if workers > 1 and len(cover) > 64:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda e: _contribution(d, f, e), cover))
    else:
        parts = [_contribution(d, f, e) for e in cover]
    total = Fraction(0)
    bound = INF
    for part in parts:
        if part is None:
            continue
        value, osc, mass = part
        total = total + value
        mass_v = value_digits(mass) if not isinstance(mass, Fraction) else vp(mass, d.p)
        bound = min(bound, osc + mass_v)
    return total, bound


def integrate(d: TreeDistribution, f: LocallyAnalyticFunction, m: int, workers: int = 1) -> IntegrationResult:
    value, bound = riemann_sum(d, f, m, workers)
    if m >= 2:
        previous, _ = riemann_sum(d, f, m - 1, workers)
        gap = value_digits(value - previous)
    else:
        gap = INF
    digits = min(arithmetic_precision(value), gap)
    logger.debug("integrate depth=%d gap=%s bound=%s", m, gap, bound)
    return IntegrationResult(value, m, digits, gap, bound)


def vanishing_check(multi: MultiCocycle, functions: list, j: int, depth: int) -> IntegrationResult:
    """
    Integral of g_1 x ... x g_{r-1} x (x^j on P^1) against the product measure.

    The last coordinate runs over all of P^1, so every product sum carries a
    factor of the total mass and the result vanishes.
    """
    if multi.rank < 2:
        raise errors.ValidationError("vanishing_check needs at least two components")
    if len(functions) != multi.rank - 1:
        raise errors.ValidationError("one function per leading coordinate is required")
    if j != 0:
        raise errors.BadMomentIndex("weight-2 coordinates only admit x^0")

    def product_sum(m):
        factors = []
        for c, g in zip(multi.components[:-1], functions):
            d = TreeDistribution(c)
            terms = [part[0] for part in (_contribution(d, g, e) for e in d.cover(m)) if part is not None]
            factors.append(terms)
        last = TreeDistribution(multi.components[-1])
        whole = LocallyAnalyticFunction.on_p1(last.p, indicator_piece())
        factors.append([part[0] for part in (_contribution(last, whole, e) for e in last.cover(m)) if part is not None])
        total = Fraction(0)
        for combo in product(*factors):
            term = Fraction(1)
            for x in combo:
                term = term * x
            total = total + term
        return total

    value = product_sum(depth)
    gap = value_digits(value - product_sum(depth - 1)) if depth >= 2 else INF
    return IntegrationResult(value, depth, min(arithmetic_precision(value), gap), gap, INF)


# --- Schneider and Coleman evaluation ---

def schneider_value(c: HarmonicCocycle, gamma, v=None):
    # sum of c(e) along the geodesic v -> gamma v
    v = v or base_vertex(c.p)
    path = geodesic(v, act(gamma, v))
    total = Fraction(0) if c.weight == 2 else c.zero_vector()
    for e in path:
        value = evaluate(c, e)
        if c.weight == 2:
            total = total + value[0]
        else:
            total = tuple(a + b for a, b in zip(total, value))
    return total


def moebius_qp2(g, z: Qp2Number) -> Qp2Number:
    (a, b), (c, d) = as_matrix(g).effective()
    return (z * a + b) / (z * c + d)


def lambda_value(c: HarmonicCocycle, gamma, branch: LogBranch, z0: Qp2Number | None = None,
                 depth: int = 8, workers: int = 1) -> IntegrationResult:
    """
    Riemann sum of log_u((x - gamma z0)/(x - z0)) over P^1(Q_p).

    For weight 2 the value lies in Q_p and does not depend on z0; the
    w-coordinate of the sum is checked to vanish to the reported digits.
    """
    if c.weight != 2:
        raise errors.ValidationError("the Coleman integral is implemented for weight 2")
    if z0 is None:
        z0 = Qp2Number.omega(c.p, branch.u.N)
    if z0.b.is_zero():
        raise errors.Z0InQp("z0 must lie outside Q_p")
    gz0 = moebius_qp2(gamma, z0)
    f = LocallyAnalyticFunction.on_p1(c.p, LogRatioPiece(branch, gz0, z0))
    result = integrate(TreeDistribution(c), f, depth, workers)
    value = result.value
    if isinstance(value, Fraction):
        value = Qp2Number.from_parts(value, 0, c.p, branch.u.N)
    digits = min(result.digits, arithmetic_precision(value))
    if value_digits(value.b) < digits:
        logger.warning("Coleman sum has a w-part of valuation %s below %s digits", value_digits(value.b), digits)
        digits = value_digits(value.b)
    scalar = value.a.with_precision(digits) if digits != INF else value.a
    return IntegrationResult(scalar, depth, min(result.digits, scalar.N), result.gap_digits, result.bound_digits)


def orbit_lambda_value(c: HarmonicCocycle, branch: LogBranch) -> IntegrationResult:
    """
    Closed form of lambda for a cocycle that carries its orbit measure.

    Against t(delta_0 - delta_inf) the integrand gives t log_u(qtilde). Over a
    qtilde-orbit the terms telescope to log_u(x_i) up to a log_u(qtilde) drift
    that cancels because the orbit weights sum to zero.
    """
    if c.weight != 2 or c.orbit is None or c.qtilde is None:
        raise errors.ValidationError("the closed form needs a periodic weight-2 cocycle with its orbit measure")
    p, N = c.p, branch.u.N
    total = branch_log(branch, c.qtilde.with_precision(N)) * c.orbit.axis_weight
    for x, w in c.orbit.atoms.items():
        total = total + branch_log(branch, PadicNumber.from_rational(x, p, N)) * w
    return IntegrationResult(total, 0, total.N, INF, INF)


def l_invariant(c: HarmonicCocycle, gamma, branch: LogBranch, depth: int = 8,
                z0: Qp2Number | None = None, workers: int = 1, method: str = "riemann") -> IntegrationResult:
    # method: "riemann", "orbit", or "auto" (orbit when the cocycle carries one)
    if method == "auto":
        method = "orbit" if c.orbit is not None and gamma is c.gamma else "riemann"
    delta = schneider_value(c, gamma)
    if is_zero(delta):
        raise errors.ZeroSchneider("Schneider value vanishes")
    if method == "orbit":
        if gamma is not c.gamma:
            raise errors.ValidationError("the closed form integrates against the cocycle's own period")
        lam = orbit_lambda_value(c, branch)
    elif method == "riemann":
        lam = lambda_value(c, gamma, branch, z0, depth, workers)
    else:
        raise errors.UsageError(f"unknown L-invariant method {method!r}")
    value = lam.value / delta
    return IntegrationResult(value, lam.depth, min(lam.digits, value.N), lam.gap_digits, lam.bound_digits)


def boundary_points_check(c: HarmonicCocycle, atoms: dict, gamma, branch: LogBranch, depth: int = 8,
                          z0: Qp2Number | None = None) -> tuple:
    """
    Two-point oracle for the Coleman integral of a finite boundary measure.

    For mu = sum w_x delta_x the integral of log_u((x - gamma z0)/(x - z0))
    is sum w_x log_u((x - gamma z0)/(x - z0)), the point at infinity
    contributing log_u(1) = 0. Returns (oracle, Riemann sum, agreement).
    """
    p, N = c.p, branch.u.N
    if z0 is None:
        z0 = Qp2Number.omega(p, N)
    gz0 = moebius_qp2(gamma, z0)
    total = Qp2Number.from_parts(0, 0, p, N)
    for x, w in atoms.items():
        if x == INFINITY:
            continue
        ratio = (gz0 - Fraction(x)) / (z0 - Fraction(x))
        total = total + branch_log(branch, ratio) * Fraction(w)
    if value_digits(total.b) < N - 2:
        raise errors.ValidationError("two-point oracle has a nonzero w-part")
    oracle = total.a
    riemann = lambda_value(c, gamma, branch, z0, depth)
    agreement = oracle.agreement(riemann.value)
    logger.debug("boundary oracle vs Riemann sum at depth %d agree to %s digits", depth, agreement)
    return oracle, riemann, agreement


def telescoped_lambda_check(c: HarmonicCocycle, branch: LogBranch, depth: int = 8):
    """
    Compare lambda with the fundamental-domain integral of log_u(x).

    Only meaningful when the endpoint masses vanish; otherwise returns
    (lambda, None, mass) and the identity is not asserted.
    """
    d = TreeDistribution(c)
    mass = d.moment(Disc(c.p, 0, depth), 0)
    lam = lambda_value(c, c.gamma, branch, depth=depth)
    if not is_zero(mass):
        return lam, None, mass
    h = c.qtilde.v
    pieces = []
    # F = {0 <= v(x) < h}: the shells p^i Z_p^x, each a union of balls B(p^i u, i+1)
    for i in range(h):
        for u in range(1, c.p):
            pieces.append((Disc(c.p, Fraction(c.p) ** i * u, i + 1), LogPiece(branch)))
    f = LocallyAnalyticFunction(c.p, pieces)
    tele = integrate(d, f, depth)
    return lam, tele, mass


@dataclass(frozen=True)
class LogPiece:
    # f(x) = log_u(x) on discs away from 0
    branch: LogBranch

    def taylor(self, a, degree: int) -> list:
        x = PadicNumber.from_rational(a, self.branch.p, self.branch.u.N)
        out = [branch_log(self.branch, x)]
        inv = Fraction(1) / Fraction(a)
        for i in range(1, degree + 1):
            out.append(Fraction(1 if i % 2 else -1, i) * inv ** i)
        return out

    def at_infinity(self):
        raise errors.ValidationError("log is not defined at infinity")

    def oscillation(self, p: int, disc: Disc):
        return disc.m - vp(disc.a, p)


# --- Tate parameter ---

def _series_mul(f, g, order):
    out = [0] * order
    for i, a in enumerate(f[:order]):
        if a:
            for j, b in enumerate(g[:order - i]):
                out[i + j] += a * b
    return out


def _series_inverse(f, order):
    # f[0] = 1
    out = [0] * order
    out[0] = Fraction(1, 1) / f[0]
    for n in range(1, order):
        out[n] = -sum(f[k] * out[n - k] for k in range(1, min(n, len(f) - 1) + 1)) / f[0]
    return out


def j_times_q_series(order: int) -> list:
    # q*j(q) = E4^3 / prod (1 - q^n)^24, integer coefficients
    e4 = [1] + [240 * int(divisor_sigma(n, 3)) for n in range(1, order)]
    e4_cubed = _series_mul(_series_mul(e4, e4, order), e4, order)
    eta = [1] + [0] * (order - 1)
    for n in range(1, order):
        factor = [1] + [0] * (order - 1)
        factor[n] = -1
        eta = _series_mul(eta, factor, order)
    eta24 = [1] + [0] * (order - 1)
    for _ in range(24):
        eta24 = _series_mul(eta24, eta, order)
    inverse = _series_inverse(eta24, order)
    return [int(x) for x in _series_mul(e4_cubed, inverse, order)]


def q_of_s_series(order: int) -> list:
    # Lagrange inversion of s = q / F(q): q = sum_n (1/n) [q^(n-1)] F^n s^n
    F = j_times_q_series(order)
    coeffs = [0] * (order + 1)
    power = [1] + [0] * (order - 1)
    for n in range(1, order + 1):
        power = _series_mul(power, F, order)
        coeffs[n] = Fraction(power[n - 1], n)
    return coeffs


def tate_parameter(j: PadicNumber, order: int | None = None) -> PadicNumber:
    if j.is_zero() or j.v >= 0:
        raise errors.IntegralJInvariant(f"v(j) = {j.v} is not negative")
    w = -j.v
    order = order or max(2 * j.N, j.N // w + 2)
    s = 1 / j
    coeffs = q_of_s_series(order)
    q = PadicNumber.zero(j.p, s.N)
    power = s
    for n in range(1, order + 1):
        q = q + power * coeffs[n]
        power = power * s
    logger.debug("tate parameter from %d series terms", order)
    return q


def j_of_q(q: PadicNumber, order: int | None = None) -> PadicNumber:
    order = order or 2 * q.N
    F = j_times_q_series(order)
    total = PadicNumber.zero(q.p, q.N)
    power = PadicNumber.one(q.p, q.relative_precision)
    for n in range(order):
        total = total + power * F[n]
        power = power * q
    return total / q
