# src/cohomology.py
# The free abelian group generated by the beta_p, the order and logarithm
# 1-cocycles with values in region functions, cup products, the determinant
# lemma over admissible maps, and the determinant expansion of log powers.

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations, product
from math import comb

import sympy

import errors
from bt_tree import Disc
from distribution import LocallyAnalyticFunction, LogPiece, TreeDistribution, indicator_piece, integrate, l_invariant
from harmonic import HarmonicCocycle, is_zero
from padic_core import LogBranch, PadicNumber, branch_log

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeltaGroup:
    """
    Free abelian group on generators beta_0..beta_{r-1}, one per prime.

    beta_i moves the local coordinate at prime i by valuation -h[i].
    ell[i][j] is the logarithm at prime i of beta_j; entries may be exact
    rationals or p-adic numbers.
    """
    h: tuple
    ell: tuple

    def __post_init__(self):
        if any(h < 1 for h in self.h):
            raise errors.ValidationError("translation lengths must be >= 1")
        if len(self.ell) != self.rank or any(len(row) != self.rank for row in self.ell):
            raise errors.ValidationError("the log matrix must be r x r")

    @classmethod
    def make(cls, h, ell=None) -> "DeltaGroup":
        h = tuple(int(x) for x in h)
        if ell is None:
            ell = [[Fraction(0)] * len(h) for _ in h]
        return cls(h, tuple(tuple(row) for row in ell))

    @property
    def rank(self) -> int:
        return len(self.h)

    def generator(self, j: int) -> tuple:
        return ((j, 1),)


def word_exponents(group: DeltaGroup, word) -> tuple:
    exps = [0] * group.rank
    for j, e in word:
        exps[j] += e
    return tuple(exps)


# --- region functions ---
# A factor (i, a, lp, op) is 1_{v_i >= a} * log_i^lp * ord_i^op in the local
# coordinate at prime i. A monomial is a sorted tuple of factors with distinct
# primes; primes absent from a monomial contribute the constant 1.

def _mul_factors(x: tuple, y: tuple) -> tuple:
    by_prime = {f[0]: f for f in x}
    for i, a, lp, op in y:
        if i in by_prime:
            _, a0, lp0, op0 = by_prime[i]
            by_prime[i] = (i, max(a, a0), lp + lp0, op + op0)
        else:
            by_prime[i] = (i, a, lp, op)
    return tuple(sorted(by_prime.values()))


@dataclass
class RegionFunction:
    terms: dict = field(default_factory=dict)

    @classmethod
    def zero(cls) -> "RegionFunction":
        return cls({})

    @classmethod
    def indicator(cls, i: int, a: int, coeff=1, lp: int = 0, op: int = 0) -> "RegionFunction":
        out = cls()
        out._add_term(((i, a, lp, op),), Fraction(coeff) if isinstance(coeff, int) else coeff)
        return out

    def _add_term(self, mono, coeff):
        total = self.terms.get(mono, Fraction(0)) + coeff
        if is_zero(total):
            self.terms.pop(mono, None)
        else:
            self.terms[mono] = total

    def __add__(self, other: "RegionFunction") -> "RegionFunction":
        out = RegionFunction(dict(self.terms))
        for mono, c in other.terms.items():
            out._add_term(mono, c)
        return out

    def __neg__(self) -> "RegionFunction":
        return self.scale(-1)

    def __sub__(self, other: "RegionFunction") -> "RegionFunction":
        return self + (-other)

    def scale(self, k) -> "RegionFunction":
        out = RegionFunction()
        for mono, c in self.terms.items():
            out._add_term(mono, c * k)
        return out

    def __mul__(self, other: "RegionFunction") -> "RegionFunction":
        out = RegionFunction()
        for (m1, c1), (m2, c2) in product(self.terms.items(), other.terms.items()):
            out._add_term(_mul_factors(m1, m2), c1 * c2)
        return out

    def is_zero(self) -> bool:
        return not self.normal_form().terms

    def primes(self) -> set:
        return {f[0] for mono in self.terms for f in mono}

    def act(self, group: DeltaGroup, exps) -> "RegionFunction":
        # (gamma^* f)(x) = f(gamma x)
        out = RegionFunction()
        for mono, c in self.terms.items():
            expansions = [[((), c)]]
            for i, a, lp, op in mono:
                s = group.h[i] * exps[i]
                t = sum((group.ell[i][j] * e for j, e in enumerate(exps) if e), Fraction(0))
                local = []
                for k in range(lp + 1):
                    for m in range(op + 1):
                        coeff = comb(lp, k) * t ** (lp - k) * comb(op, m) * (-s) ** (op - m)
                        if not is_zero(coeff):
                            local.append((((i, a + s, k, m),), coeff))
                expansions.append(local)
            for combo in product(*expansions):
                factors, coeff = (), Fraction(1)
                for fs, cf in combo:
                    factors = factors + fs
                    coeff = coeff * cf
                out._add_term(tuple(sorted(factors)), coeff)
        return out

    def substitute_log(self, i: int, lam) -> "RegionFunction":
        # log_i -> lam * ord_i
        out = RegionFunction()
        for mono, c in self.terms.items():
            factors, coeff = [], c
            for f in mono:
                if f[0] == i and f[2]:
                    coeff = coeff * lam ** f[2]
                    f = (f[0], f[1], 0, f[3] + f[2])
                factors.append(f)
            out._add_term(tuple(factors), coeff)
        return out

    def normal_form(self) -> "RegionFunction":
        """
        Rewrite every ord-power factor onto the base indicator 1_{v >= 0}.

        ord^n 1_{v>=a} differs from ord^n 1_{v>=0} by finitely many shells
        1_{v=i} = 1_{v>=i} - 1_{v>=i+1}, on which ord is the constant i.
        """
        out = RegionFunction()
        for mono, c in self.terms.items():
            choices = []
            for i, a, lp, op in mono:
                if op == 0 or a == 0:
                    choices.append([((i, a, lp, op), Fraction(1))])
                    continue
                local = [((i, 0, lp, op), Fraction(1))]
                shells = range(a, 0) if a < 0 else range(0, a)
                sign = 1 if a < 0 else -1
                for s in shells:
                    w = sign * Fraction(s) ** op
                    if w:
                        local.append(((i, s, lp, 0), w))
                        local.append(((i, s + 1, lp, 0), -w))
                choices.append(local)
            for combo in product(*choices):
                coeff = c
                for _, w in combo:
                    coeff = coeff * w
                out._add_term(tuple(sorted(f for f, _ in combo)), coeff)
        return out

    def equals(self, other: "RegionFunction") -> bool:
        return (self - other).is_zero()

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for mono in sorted(self.terms):
            names = []
            for i, a, lp, op in mono:
                name = f"1[v{i}>={a}]"
                if lp:
                    name += f"*log{i}" + (f"^{lp}" if lp > 1 else "")
                if op:
                    name += f"*ord{i}" + (f"^{op}" if op > 1 else "")
                names.append(name)
            parts.append(f"({self.terms[mono]})*" + "*".join(names))
        return " + ".join(parts)


# --- cocycles ---

def _power_value(group: DeltaGroup, value_of_generator, j: int, e: int) -> RegionFunction:
    # c(beta^e) from c(beta) by the cocycle rule
    base = value_of_generator(j)
    out = RegionFunction()
    step = [0] * group.rank
    if e > 0:
        for k in range(e):
            step[j] = k
            out = out + base.act(group, step)
    else:
        for k in range(1, -e + 1):
            step[j] = -k
            out = out - base.act(group, step)
    return out


def cocycle_on_word(group: DeltaGroup, value_of_generator, word) -> RegionFunction:
    # c(g g') = c(g) + g^* c(g'), read left to right
    out = RegionFunction()
    prefix = [0] * group.rank
    for j, e in word:
        if e == 0:
            continue
        out = out + _power_value(group, value_of_generator, j, e).act(group, prefix)
        prefix[j] += e
    return out


def _word(word) -> list:
    if word and isinstance(word[0], int):
        return [(j, e) for j, e in enumerate(word)]
    return list(word)


def c_ord_eval(group: DeltaGroup, i: int, word) -> RegionFunction:
    def generator_value(j):
        if j != i:
            return RegionFunction.zero()
        out = RegionFunction()
        for k in range(1, group.h[i] + 1):
            out = out + RegionFunction.indicator(i, k)
        return out

    return cocycle_on_word(group, generator_value, _word(word))


def c_log_eval(group: DeltaGroup, i: int, word) -> RegionFunction:
    def generator_value(j):
        ell = group.ell[i][j]
        if j != i:
            return RegionFunction.indicator(i, 0, -ell)
        h = group.h[i]
        return (RegionFunction.indicator(i, 0, lp=1)
                - RegionFunction.indicator(i, h, lp=1)
                - RegionFunction.indicator(i, h, ell))

    return cocycle_on_word(group, generator_value, _word(word))


def coboundary_value(group: DeltaGroup, f: RegionFunction, word) -> RegionFunction:
    # (gamma^* - 1) f
    exps = word_exponents(group, _word(word))
    return f.act(group, exps) - f


@dataclass(frozen=True)
class DeltaCocycle:
    group: DeltaGroup
    kind: str
    prime: int
    weight: object = 1

    def __call__(self, word) -> RegionFunction:
        if self.kind == "ord":
            value = c_ord_eval(self.group, self.prime, word)
        elif self.kind == "log":
            value = c_log_eval(self.group, self.prime, word)
        else:
            raise errors.ValidationError(f"unknown cocycle kind {self.kind!r}")
        return value if self.weight == 1 else value.scale(self.weight)

    def potential(self) -> RegionFunction:
        # c = (gamma^* - 1)(potential)
        if self.kind == "ord":
            return RegionFunction.indicator(self.prime, 0, -self.weight, op=1)
        return RegionFunction.indicator(self.prime, 0, -self.weight, lp=1)


def cocycle_law_check(cocycle: DeltaCocycle, word1, word2) -> bool:
    group = cocycle.group
    w1, w2 = _word(word1), _word(word2)
    lhs = cocycle(w1 + w2)
    rhs = cocycle(w1) + cocycle(w2).act(group, word_exponents(group, w1))
    boundary = coboundary_value(group, cocycle.potential(), w1 + w2)
    return lhs.equals(rhs) and lhs.equals(boundary)


def trivial_ord_check(group: DeltaGroup, i: int, lam, word) -> bool:
    """
    For a logarithm killing the units at prime i, log = lam * ord and the
    log cocycle is lam times the order cocycle.
    """
    ell = [list(row) for row in group.ell]
    ell[i] = [Fraction(0)] * group.rank
    ell[i][i] = -lam * group.h[i]
    ord_group = DeltaGroup.make(group.h, ell)
    lhs = c_log_eval(ord_group, i, word).substitute_log(i, lam)
    rhs = c_ord_eval(ord_group, i, word).scale(lam)
    return lhs.equals(rhs)


def _sign(perm) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def cup_eval(cocycles: list, gens: list) -> RegionFunction:
    # sum over permutations P of sign(P) prod_i c_i(g_{P(i)})
    k = len(cocycles)
    if len(gens) != k:
        raise errors.ValidationError("cup product needs one argument per cocycle")
    if k == 0:
        raise errors.ValidationError("cup product of no cocycles")
    if k > cocycles[0].group.rank:
        raise errors.ValidationError("cup degree exceeds the rank")
    out = RegionFunction()
    for perm in permutations(range(k)):
        term = None
        for i, c in enumerate(cocycles):
            value = c(_word(gens[perm[i]]))
            term = value if term is None else term * value
        out = out + term.scale(_sign(perm))
    return out


# --- the determinant lemma ---

def admissible_maps(k: int, m: int) -> list[tuple]:
    """
    Maps f: {0..k-1} -> {0..m-1} with f(S) not inside S for every nonempty
    S of {0..k-1}. Brute force; intended for small k and m.
    """
    if k > m:
        raise errors.ValidationError("admissible maps need k <= m")
    subsets = [set(s) for r in range(1, k + 1) for s in combinations(range(k), r)]
    out = []
    for f in product(range(m), repeat=k):
        if all(not {f[i] for i in S} <= S for S in subsets):
            out.append(f)
    return out


def _sym(x):
    if isinstance(x, sympy.Basic):
        return x
    x = Fraction(x)
    return sympy.Rational(x.numerator, x.denominator)


@dataclass(frozen=True)
class SpiessCheck:
    det_side: sympy.Expr
    sum_side: sympy.Expr

    @property
    def holds(self) -> bool:
        return sympy.simplify(self.det_side - self.sum_side) == 0


def spiess_det_check(c, k: int | None = None) -> SpiessCheck:
    rows = [[_sym(x) for x in row] for row in c]
    k = len(rows) if k is None else k
    m = len(rows[0]) if rows else 0
    for i, row in enumerate(rows[:k]):
        if sympy.simplify(sum(row)) != 0:
            raise errors.RowSumNonzero(f"row {i} sums to {sum(row)}")
    if k == 0:
        return SpiessCheck(sympy.Integer(1), sympy.Integer(1))
    det_side = sympy.expand((-sympy.Matrix([row[:k] for row in rows[:k]])).det())
    total = sympy.Integer(0)
    for f in admissible_maps(k, m):
        term = sympy.Integer(1)
        for i in range(k):
            term *= rows[i][f[i]]
        total += term
    return SpiessCheck(det_side, sympy.expand(total))


def one_minus_gamma_expand(t: tuple, beta_values: tuple) -> sympy.Expr:
    """
    (1 - beta^*) ell^t as a polynomial in the symbols ell_i, where
    beta^* ell_i = ell_i + ell_i(beta).
    """
    if len(t) != len(beta_values):
        raise errors.ValidationError("exponent and value vectors differ in length")
    ells = sympy.symbols(f"ell0:{len(t)}")
    mono = sympy.Integer(1)
    moved = sympy.Integer(1)
    for e, b, x in zip(t, beta_values, ells):
        mono *= x ** e
        moved *= (x + _sym(b)) ** e
    return sympy.expand(mono - moved)


@dataclass(frozen=True)
class ExpansionTerm:
    subset: tuple
    coefficient: sympy.Expr
    minor: sympy.Expr
    spiess_sum: sympy.Expr

    @property
    def holds(self) -> bool:
        return sympy.simplify(self.coefficient - self.minor) == 0 and sympy.simplify(self.minor - self.spiess_sum) == 0


def determinant_expansion(values) -> list[ExpansionTerm]:
    """
    Expand det(delta_ij Lambda_i - values[j][i] Lambda_0) over subsets Xi.

    values[i][v] is the logarithm at place v of beta_i; the first h places
    are the primes of the generators and every row sums to zero. Each
    coefficient of prod_{i in Xi} Lambda_i * Lambda_0^{h-|Xi|} is compared
    with the minor det(-values) on the complement of Xi and with the
    admissible-map sum on the complement rows.
    """
    rows = [[_sym(x) for x in row] for row in values]
    h = len(rows)
    for i, row in enumerate(rows):
        if len(row) < h:
            raise errors.ValidationError("every generator needs a value at each of the first h places")
        if sympy.simplify(sum(row)) != 0:
            raise errors.RowSumNonzero(f"row {i} sums to {sum(row)}")
    lam0 = sympy.Symbol("Lambda_0")
    lams = sympy.symbols(f"Lambda_1:{h + 1}")
    M = sympy.Matrix(h, h, lambda i, j: (lams[i] if i == j else 0) - rows[j][i] * lam0)
    poly = sympy.Poly(sympy.expand(M.det()), *lams, lam0)
    out = []
    for r in range(h + 1):
        for xi in combinations(range(h), r):
            powers = tuple(1 if i in xi else 0 for i in range(h)) + (h - r,)
            coeff = poly.coeff_monomial(powers)
            rest = [i for i in range(h) if i not in xi]
            if rest:
                minor = sympy.expand((-sympy.Matrix([[rows[i][j] for j in rest] for i in rest])).det())
                others = [v for v in range(len(rows[0])) if v not in rest]
                spiess = spiess_det_check([[rows[i][v] for v in rest + others] for i in rest]).sum_side
            else:
                minor = spiess = sympy.Integer(1)
            out.append(ExpansionTerm(xi, sympy.expand(coeff), minor, spiess))
    logger.debug("determinant expansion of size %d: %d subset terms", h, len(out))
    return out


# --- pairing with a measure ---

def pair_with_measure(f: RegionFunction, c: HarmonicCocycle, branch: LogBranch, depth: int = 8):
    """
    Integral of a one-prime region function against the measure of c.

    Terms sharing (log power, ord power) are grouped; a group with a log or
    ord factor must telescope into finitely many shells 1_{v=i}. Log powers
    above one are not supported.
    """
    if len(f.primes()) > 1:
        raise errors.ValidationError("pairing is defined for functions of one prime")
    d = TreeDistribution(c)
    groups = {}
    for mono, coeff in f.terms.items():
        if not mono:
            raise errors.ValidationError("a constant function is not integrable against a boundary measure")
        (_, a, lp, op), = mono
        groups.setdefault((lp, op), {})[a] = coeff
    total = Fraction(0)
    for (lp, op), by_a in sorted(groups.items()):
        if lp == 0 and op == 0:
            for a, coeff in by_a.items():
                total = total + coeff * d.moment(Disc(c.p, 0, a), 0)
            continue
        if lp > 1:
            raise errors.ValidationError("log powers above one are not supported")
        if not is_zero(sum(by_a.values(), Fraction(0))):
            raise errors.ValidationError("unbounded log or ord term does not telescope into shells")
        running = Fraction(0)
        for i in range(min(by_a), max(by_a)):
            running = running + by_a.get(i, Fraction(0))
            if is_zero(running):
                continue
            shell = [Disc(c.p, Fraction(c.p) ** i * u, i + 1) for u in range(1, c.p)]
            piece = LogPiece(branch) if lp else indicator_piece()
            value = integrate(d, LocallyAnalyticFunction(c.p, [(b, piece) for b in shell]), depth).value
            total = total + running * Fraction(i) ** op * value
    return total


@dataclass(frozen=True)
class InductionCheck:
    value: object
    l_invariant: object
    # Digits to which the pairing vanishes, capped by the precision of L
    digits: int | float
    l_digits: int | float


def deriv_induction_check(c: HarmonicCocycle, branch: LogBranch, depth: int = 8,
                          method: str = "auto") -> InductionCheck:
    """
    Pair c_log(beta) - L c_ord(beta) with the measure of a periodic cocycle.

    beta moves x by qtilde^-1, so its logarithm is -log_u(qtilde); the
    pairing against the invariant test function 1 vanishes.
    """
    if c.qtilde is None:
        raise errors.ValidationError("the cocycle carries no period")
    N = branch.u.N
    ell = -branch_log(branch, c.qtilde.with_precision(N))
    group = DeltaGroup.make((c.qtilde.v,), [[ell]])
    result = l_invariant(c, c.gamma, branch, depth, method=method)
    L = result.value
    f = c_log_eval(group, 0, [(0, 1)]) - c_ord_eval(group, 0, [(0, 1)]).scale(L)
    value = pair_with_measure(f, c, branch, depth)
    if not isinstance(value, PadicNumber):
        value = PadicNumber.from_rational(value, c.p, N)
    digits = min(value.N if value.is_zero() else value.v, result.digits)
    logger.debug("derivative induction pairing vanishes to %s digits", digits)
    return InductionCheck(value, L, digits, result.digits)
