# src/check_worker.py
# Acceptance suites and the background queue that runs them.
# Each suite is a list of named property checks over small, fixed-seed inputs.

import logging
import random
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import errors
import anticyclo
import bt_tree
import cohomology
import distribution
import harmonic
import local_factors
import padic_core
import theta
from bt_tree import Disc
from padic_core import LogBranch, PadicNumber

logger = logging.getLogger(__name__)


@dataclass
class CheckOutcome:
    name: str
    ok: bool
    detail: str = ""


@dataclass
class SuiteResult:
    suite: str
    outcomes: list = field(default_factory=list)
    duration: float = 0.0
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(o.ok for o in self.outcomes)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.outcomes.append(CheckOutcome(name, bool(ok), str(detail)))


def _padic(x, p: int, N: int) -> PadicNumber:
    return PadicNumber.from_rational(Fraction(x), p, N)


# --- suites ---

def suite_padic(res: SuiteResult, N: int, depth: int):
    rng = random.Random(1)
    for p in (3, 5, 7):
        worst = N
        for _ in range(200):
            x = PadicNumber.make(p, N, 0, 1 + p * rng.randrange(p ** (N - 1)))
            back = padic_core.exp_p(padic_core.iwasawa_log(x))
            worst = min(worst, back.agreement(x))
        res.add(f"exp(log x) = x for p={p}", worst >= N - 1, f"{worst} digits")
        ok = all((padic_core.teichmuller(a, p, N) ** (p - 1) - 1).is_zero() for a in range(1, p))
        res.add(f"teichmuller^(p-1) = 1 for p={p}", ok)
        u = _padic(p * (1 + p), p, N)
        res.add(f"log_u(u) = 0 for p={p}", padic_core.branch_log(LogBranch(p, u), u).is_zero())


def _random_matrix(rng, p: int):
    # Entries spread over several valuations so that poles land anywhere, infinity included
    while True:
        g = tuple(tuple(Fraction(rng.randrange(-9, 10) * p ** rng.randrange(3), p ** rng.randrange(2))
                        for _ in range(2)) for _ in range(2))
        if g[0][0] * g[1][1] - g[0][1] * g[1][0] != 0:
            return g


def suite_tree(res: SuiteResult, N: int, depth: int):
    rng = random.Random(2)
    for p in (3, 5):
        vertices = [bt_tree.TreeVertex.make(p, rng.randrange(-3, 5),
                                            Fraction(rng.randrange(p ** 5), p ** rng.randrange(3)))
                    for _ in range(50)]
        res.add(f"degree p+1 for p={p}", all(len(bt_tree.neighbors(v)) == p + 1 for v in vertices))
        edges = [bt_tree.edges_from(v)[rng.randrange(p + 1)] for v in vertices for _ in range(20)]
        res.add(f"edge <-> disc roundtrip for p={p}",
                all(bt_tree.disc_to_edge(bt_tree.edge_to_disc(e)) == e for e in edges))
        mismatches, outer = [], 0
        for _ in range(200):
            g = _random_matrix(rng, p)
            e = edges[rng.randrange(len(edges))]
            disc = bt_tree.edge_to_disc(e)
            outer += disc.outer
            moved = bt_tree.edge_to_disc(bt_tree.act(g, e))
            if moved != bt_tree.act(g, disc):
                mismatches.append(f"{e.label()}: {moved.label()} != {bt_tree.act(g, disc).label()}")
        res.add(f"U_ge = g U_e for p={p}", not mismatches and outer > 0,
                "; ".join(mismatches[:3]) or f"{outer} outer discs")


def _region_edges(c: harmonic.HarmonicCocycle) -> list:
    # Both orientations of every edge with endpoints within depth of the center
    seen, frontier, edges = {c.center}, [c.center], []
    for _ in range(c.depth):
        nxt = []
        for v in frontier:
            for e in bt_tree.edges_from(v):
                if e.target not in seen:
                    seen.add(e.target)
                    nxt.append(e.target)
                    edges.extend((e, e.reverse()))
        frontier = nxt
    return edges


def perturbation_reports(c: harmonic.HarmonicCocycle, e) -> set:
    # What validate must say after c(e) alone is changed on a cocycle without periodicity
    expected = set()
    if e.reverse() in c.values:
        expected.add(f"antisymmetry fails on {min(e, e.reverse()).label()}")
    if bt_tree.distance(c.center, e.source) <= c.depth - 1:
        expected.add(f"outgoing sum nonzero at {e.source.label()}")
    if bt_tree.distance(c.center, e.target) <= c.depth - 1:
        expected.add(f"incoming sum nonzero at {e.target.label()}")
    return expected


def suite_harmonic(res: SuiteResult, N: int, depth: int):
    for p in (3, 5):
        for h in (1, 2, 3):
            c = harmonic.axis_cocycle(p, _padic(p ** h * (1 + p), p, N), 4)
            res.add(f"axis cocycle valid p={p} h={h}", harmonic.validate(c).ok)
        atoms = {Fraction(0): 1, Fraction(1): 1, bt_tree.INFINITY: -2}
        c = harmonic.boundary_cocycle(p, 2, atoms, 4 if p == 3 else 3)
        res.add(f"boundary cocycle valid p={p}", harmonic.validate(c).ok)
        edges = _region_edges(c)
        wrong = []
        for e in edges:
            bad = c.with_value(e, (c.values.get(e, c.zero_vector())[0] + 1,))
            got = set(harmonic.validate(bad).as_list())
            if got != perturbation_reports(c, e):
                wrong.append(e.label())
        res.add(f"perturbations localized p={p}", not wrong,
                f"{len(edges) - len(wrong)}/{len(edges)}" + (f", first {wrong[0]}" if wrong else ""))


def suite_moments(res: SuiteResult, N: int, depth: int):
    cases = [
        (harmonic.axis_cocycle(3, _padic(3, 3, N), 6), "weight 2"),
        (harmonic.boundary_cocycle(3, 4, {Fraction(0): 1, Fraction(1): -3, Fraction(2): 3, Fraction(3): -1}, 6),
         "weight 4"),
    ]
    for c, name in cases:
        d = distribution.TreeDistribution(c)
        ok = True
        for m in range(1, 5):
            for e in d.cover(m):
                disc = bt_tree.edge_to_disc(e)
                if disc.outer:
                    continue
                for j in range(c.weight - 1):
                    parent = d.moment(disc, j)
                    children = sum((d.moment(child, j) for child in disc.children()), Fraction(0))
                    ok = ok and parent == children
        res.add(f"moment additivity {name}", ok)
        A = d.growth_constant(5)
        res.add(f"growth bound {name}", d.growth_bound_holds(A, 5), f"A={A}")


def suite_vanishing(res: SuiteResult, N: int, depth: int):
    q = _padic(3, 3, N)
    multi = harmonic.MultiCocycle([harmonic.axis_cocycle(3, q, 6), harmonic.axis_cocycle(3, q, 6)])
    g = distribution.LocallyAnalyticFunction(3, [(Disc(3, 0, 1), distribution.indicator_piece())])
    result = distribution.vanishing_check(multi, [g], 0, 6)
    res.add("product integral with a P^1 coordinate vanishes", result.value == 0, result.value)


def suite_linvariant(res: SuiteResult, N: int, depth: int):
    for p in (3, 5):
        for q in (p, p * (1 + p), p * p * (1 + p + p * p)):
            qt = _padic(q, p, N)
            c = harmonic.axis_cocycle(p, qt, depth)
            branch = LogBranch(p, _padic(p, p, N))
            L = distribution.l_invariant(c, c.gamma, branch, depth)
            oracle = padic_core.branch_log(branch, qt) / qt.v
            got = L.value.agreement(oracle)
            res.add(f"L-invariant of axis({q}) for p={p}", got >= N - 5, f"{got} digits")
        c = harmonic.axis_cocycle(p, _padic(p * (1 + p), p, N), depth)
        atoms = {Fraction(0): 1, bt_tree.INFINITY: -1}
        _, _, agreement = distribution.boundary_points_check(c, atoms, c.gamma, LogBranch.iwasawa(p, N), depth)
        res.add(f"two-point oracle for p={p}", agreement >= N - 5, f"{agreement} digits")
    # Riemann sums on orbits off the axis gain roughly one digit per level
    c = harmonic.periodic_cocycle(3, _padic(12, 3, N), {1: 1, 2: -1}, depth)
    branch = LogBranch.iwasawa(3, N)
    exact = distribution.l_invariant(c, c.gamma, branch, depth, method="orbit")
    summed = distribution.l_invariant(c, c.gamma, branch, depth, method="riemann")
    got = summed.value.agreement(exact.value)
    res.add("Riemann sum converges to the orbit closed form", exact.digits >= N - 2 and got >= min(N, depth) - 4,
            f"{got} digits at depth {depth}")


def suite_branch(res: SuiteResult, N: int, depth: int):
    rng = random.Random(7)
    p = 3
    qt = _padic(12, p, N)
    # Riemann sums are exact on the axis cocycle; the periodic one uses its orbit closed form
    cases = {"axis": (harmonic.axis_cocycle(p, qt, depth), "riemann"),
             "periodic": (harmonic.periodic_cocycle(p, qt, {1: 1, 2: -1}, depth), "orbit")}
    pool = [p * (1 + p * k) for k in range(1, 6)] + [p * p * (2 + p * k) for k in range(3)]
    omega = _padic(p, p, N)
    for name, (c, method) in cases.items():
        cache = {}

        def L(u):
            if u not in cache:
                branch = LogBranch(p, _padic(u, p, N))
                cache[u] = distribution.l_invariant(c, c.gamma, branch, depth, method=method).value
            return cache[u]

        worst = N
        for _ in range(20):
            u1, u2 = rng.sample(pool, 2)
            b1, b2 = LogBranch(p, _padic(u1, p, N)), LogBranch(p, _padic(u2, p, N))
            expected = padic_core.branch_log(b1, omega) - padic_core.branch_log(b2, omega)
            worst = min(worst, (L(u1) - L(u2)).agreement(expected))
        res.add(f"branch change moves L by log_u1(p) - log_u2(p) ({name})", worst >= N - 5, f"{worst} digits")


def _built_data(N: int, depth: int, max_level: int = 4):
    c = harmonic.periodic_cocycle(3, _padic(12, 3, N), {1: 1, 2: -1}, depth)
    return c, theta.build_gross_data_from_cocycle([c], max_level, N=N)


def suite_theta(res: SuiteResult, N: int, depth: int):
    c, data = _built_data(N, max(depth, 7), 5)
    res.add("built data passes the trace check", not data.validate())
    for n in range(1, 6):
        res.add(f"pi(Theta_{n}) = Theta_{n - 1}", theta.check_compatibility(data, (n,), (n - 1,)))
    tower = anticyclo.cyclic_tower(5, 3)
    one = PadicNumber.one(5, N)
    values = {(n,): {} for n in range(4)}
    values[(0,)] = {(): one}
    for n in range(1, 4):
        G = tower.group((n,))
        values[(n,)] = {x: PadicNumber.from_rational(Fraction(1, G.size), 5, N) for x in G.elements()}
    ingested = theta.GrossPointData(tower, {5: one}, {5: True}, values)
    res.add("ingested uniform data is compatible",
            all(theta.check_compatibility(ingested, (n,), (n - 1,)) for n in range(1, 4)))


def suite_multiplier(res: SuiteResult, N: int, depth: int):
    third = Fraction(1, 3)
    P = theta.MultiplierParams
    res.add("alpha = 1, chi(P) = chi(Pbar) = 1 gives 0",
            theta.multiplier_display(P("split", 1, third, 0, 0, Fraction(1), Fraction(1))) == 0)
    res.add("alpha = 1, nontrivial chi gives nonzero",
            theta.multiplier_display(P("split", 1, third, 0, 0, Fraction(-1), Fraction(-1))) != 0)
    res.add("alpha = -1, trivial chi gives nonzero",
            theta.multiplier_display(P("split", -1, third, 0, 0, Fraction(1), Fraction(1))) != 0)
    # For s > 0 the display form is p^s / alpha^(2s); the definitional chain gives e = alpha^(-2s) = |p|^s * display
    for n in (1, 2, 3):
        for a in (1, -1, 2):
            params = P("split", a, third, 0, n)
            value = theta.multiplier_display(params)
            res.add(f"display s={n} alpha={a} is p^s / alpha^(2s)", value == Fraction(3) ** n / Fraction(a) ** (2 * n))
            chain = theta.multiplier_e(params).e
            res.add(f"chain s={n} alpha={a} is alpha^(-2s) = |p|^s * display",
                    chain == Fraction(a) ** (-2 * n) and chain == third ** n * value)
    result = theta.multiplier_e(P("split", 1, third, 1, 0, Fraction(1), Fraction(2)))
    res.add("r = 1 chain e~ = e-bar * alpha^2 |p|^2", result.e_tilde == result.e_bar * third ** 2)


def suite_spiess(res: SuiteResult, N: int, depth: int):
    rng = random.Random(11)
    total = failures = 0
    for m in range(1, 5):
        for k in range(1, m + 1):
            for _ in range(50):
                rows = []
                for _ in range(k):
                    row = [Fraction(rng.randrange(-9, 10), rng.randrange(1, 5)) for _ in range(m - 1)]
                    rows.append(row + [-sum(row, Fraction(0))])
                total += 1
                if not cohomology.spiess_det_check(rows).holds:
                    failures += 1
    res.add("determinant equals the admissible-map sum", failures == 0, f"{total - failures}/{total}")


def suite_exceptional(res: SuiteResult, N: int, depth: int):
    c, data = _built_data(N, max(depth, 7))
    value = theta.script_L(data)
    res.add("script_L(trivial) = 0", value.agreement(PadicNumber.zero(3, N)) >= N - 5, value)
    branch = LogBranch(3, _padic(3, 3, N))
    direction = anticyclo.Direction.parse(["1"], 3, N)
    report = theta.leading_term_check(data, [c], [branch], direction, max(depth, 7))
    res.add("c_0 = 0", report.lower_order_digits[0] >= N - 5, report.lower_order_digits[0])
    res.add("c_1 matches the L-invariant side", report.agreement >= N - 6, f"{report.agreement} digits")
    # log_u(qtilde) = 0 for u = qtilde, so c_1 must equal s L h R itself
    report = theta.leading_term_check(data, [c], [LogBranch(3, _padic(12, 3, N))], direction, max(depth, 7))
    main = report.main_agreement
    res.add("c_1 equals the main term s L h R when log_u(qtilde) = 0",
            main is not None and main >= N - 6 and report.agreement >= N - 6, f"{main} digits")


def suite_rank2(res: SuiteResult, N: int, depth: int):
    d = max(depth, 6)
    c1 = harmonic.periodic_cocycle(3, _padic(12, 3, N), {1: 1, 2: -1}, d)
    c2 = harmonic.periodic_cocycle(3, _padic(3, 3, N), {1: 1, 4: -1}, d)
    data = theta.build_gross_data_from_cocycle([c1, c2], 3, N=N)
    branches = [LogBranch.iwasawa(3, N), LogBranch.iwasawa(3, N)]
    logs = theta.representative_logs(data, branches)
    direction = anticyclo.Direction.parse(["1", "1"], 3, N)
    coeffs = theta.L_series(data, logs, direction, 1)
    for k, ck in enumerate(coeffs):
        digits = ck.agreement(PadicNumber.zero(3, N))
        res.add(f"c_{k} = 0 at rank 2", digits >= N - 5, f"{digits} digits")


def suite_local(res: SuiteResult, N: int, depth: int):
    rng = random.Random(13)
    failures = 0
    for _ in range(1000):
        X = Fraction(1, rng.choice((2, 3, 5, 7)))
        chi = rng.choice((1, -1))
        T = rng.randrange(0, 8)
        if rng.random() < 0.5:
            params = {"mu": Fraction(rng.randrange(-5, 6), 3)}
            case = "special"
        else:
            params = {"mu1": Fraction(rng.randrange(1, 4), 2), "mu2": Fraction(-rng.randrange(1, 4), 3)}
            case = "unramified"
        try:
            check = local_factors.zeta_integral_check(case, chi, X, T, params)
        except errors.ValidationError:
            continue
        if not check.holds:
            failures += 1
    res.add("zeta integral: partial + tail = closed form", failures == 0, f"{failures} failures")
    w = Fraction(1, 3)
    res.add("inert special with eps + alpha = 0 vanishes",
            local_factors.toric_P_value("inert-special", {"abs_varpi": w, "eps": -1, "alpha": 1}) == 0)
    res.add("ramified with nu = -alpha vanishes",
            local_factors.toric_P_value("nb-ramified", {"alpha": 1, "nu_varpi": -1}) == 0)
    res.add("ramified with nu = alpha is 2 / zeta_v(1)",
            local_factors.toric_P_value("nb-ramified", {"alpha": 1, "nu_varpi": 1}) == 2 / local_factors.ZETA(1))
    res.add("old definite at c = 0 is 2(1 + |varpi|) / eps",
            local_factors.toric_P_value("old-definite", {"abs_varpi": w, "eps": -1, "c": 0, "ramified": True})
            == Fraction(-8, 3))
    res.add("archimedean k=2 m=0 is 1/pi",
            local_factors.toric_P_value("archimedean", {"k": 2, "m": 0}) == 1 / local_factors.pi)
    res.add("period ratio with factorized root numbers is 1",
            local_factors.period_ratio_check([{"factorized": True}, {"factorized": True}]).holds)


def suite_cohomology(res: SuiteResult, N: int, depth: int):
    rng = random.Random(17)
    group = cohomology.DeltaGroup.make((1, 2), [[Fraction(3), Fraction(-1)], [Fraction(2), Fraction(5)]])
    cocycles = [cohomology.DeltaCocycle(group, kind, i) for kind in ("ord", "log") for i in (0, 1)]
    ok = True
    for _ in range(100):
        c = rng.choice(cocycles)
        w1 = [(rng.randrange(2), rng.randrange(-2, 3)) for _ in range(rng.randrange(1, 3))]
        w2 = [(rng.randrange(2), rng.randrange(-2, 3)) for _ in range(rng.randrange(1, 3))]
        ok = ok and cohomology.cocycle_law_check(c, w1, w2)
    res.add("cocycle law on random words", ok)
    res.add("log cocycle of an ord-type log", cohomology.trivial_ord_check(group, 0, Fraction(2), [(0, 2), (1, -1)]))
    a, b = cocycles[0], cocycles[1]
    gens = [[(0, 1)], [(1, 1)]]
    res.add("cup product alternates",
            cohomology.cup_eval([a, b], gens).equals(-cohomology.cup_eval([b, a], gens)))
    terms = cohomology.determinant_expansion([[Fraction(1), Fraction(2), Fraction(-3)], [Fraction(-1), Fraction(4), Fraction(-3)]])
    res.add("determinant expansion matches the admissible-map sums", all(t.holds for t in terms))
    c = harmonic.periodic_cocycle(3, _padic(12, 3, N), {1: 1, 2: -1}, depth)
    check = cohomology.deriv_induction_check(c, LogBranch.iwasawa(3, N), depth)
    res.add("c_log - L c_ord pairs to zero", check.digits >= N - 5,
            f"{check.digits} digits, L known to {check.l_digits}")


SUITES = {
    "padic": suite_padic,
    "tree": suite_tree,
    "harmonic": suite_harmonic,
    "moments": suite_moments,
    "vanishing": suite_vanishing,
    "linvariant": suite_linvariant,
    "branch": suite_branch,
    "theta": suite_theta,
    "multiplier": suite_multiplier,
    "spiess": suite_spiess,
    "exceptional": suite_exceptional,
    "rank2": suite_rank2,
    "local": suite_local,
    "cohomology": suite_cohomology,
}


def expand_suites(names: list[str]) -> list[str]:
    out = []
    for name in names:
        if name == "all":
            out.extend(n for n in SUITES if n not in out)
        elif name in SUITES:
            if name not in out:
                out.append(name)
        else:
            raise errors.UsageError(f"unknown suite {name!r}")
    return out


class CheckWorker:
    """
    Runs a queue of suites on a thread pool.

    Callbacks (all optional, called from worker threads):
    - on_started(name, index): a suite begins
    - on_finished(name, duration): a suite completed, with or without failures
    - on_error(name, message): a suite raised
    Results come back in submission order.
    """

    def __init__(self, suites: list[str], N: int, depth: int, workers: int = 1,
                 on_started=None, on_finished=None, on_error=None):
        self.suites = expand_suites(suites)
        self.N = N
        self.depth = depth
        self.workers = max(1, workers)
        self.on_started = on_started
        self.on_finished = on_finished
        self.on_error = on_error
        self._stop = threading.Event()

    def _run_one(self, index: int, name: str) -> SuiteResult:
        result = SuiteResult(name)
        if self._stop.is_set():
            result.error = "stopped"
            return result
        if self.on_started:
            self.on_started(name, index)
        logger.info("suite %s started", name)
        start_time = time.time()
        try:
            SUITES[name](result, self.N, self.depth)
        except errors.PadicxError as e:
            result.error = e.message
        except Exception as e:
            result.error = f"{type(e).__name__}: {e}"
        result.duration = time.time() - start_time
        if result.error is not None:
            logger.warning("suite %s failed with %s", name, result.error)
            if self.on_error:
                self.on_error(name, result.error)
        else:
            logger.info("suite %s finished in %.2fs", name, result.duration)
            if self.on_finished:
                self.on_finished(name, result.duration)
        return result

    def run(self) -> list[SuiteResult]:
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(self._run_one, i, name) for i, name in enumerate(self.suites)]
            return [f.result() for f in futures]

    def stop(self):
        # Request the worker to stop (checked between suites)
        self._stop.set()
