# src/local_factors.py
# Exact evaluators for local L-factors, newform Whittaker values, zeta integrals,
# pairing values, toric period integrals, volumes and the period-ratio identity.
# Transcendental constants stay symbolic (sympy), rational parts are exact.

import logging
from dataclasses import dataclass
from fractions import Fraction

import sympy
from sympy import Function, Rational, Symbol, gamma, pi, sqrt

import errors

logger = logging.getLogger(__name__)

# Opaque local constants
ZETA = Function("zeta_v")          # zeta_v(s) of the residue field size
L_AD = Symbol("L(1,Ad)")
L_TAU = Symbol("L(1,tau)")

LOCAL_CASES = ("unramified", "special")


def _q(x) -> sympy.Expr:
    # Exact sympy number from int / Fraction / str / sympy
    if isinstance(x, sympy.Basic):
        return x
    x = Fraction(x)
    return Rational(x.numerator, x.denominator)


def _abs_varpi(params: dict) -> sympy.Expr:
    q_inv = _q(_need(params, "abs_varpi"))
    if not 0 < q_inv < 1:
        raise errors.MissingParam("|varpi| must lie strictly between 0 and 1")
    return q_inv


def _need(params: dict, key: str):
    if params.get(key) is None:
        raise errors.MissingParam(f"parameter {key!r} is required")
    return params[key]


def _sign(params: dict, key: str) -> sympy.Expr:
    value = _q(_need(params, key))
    if value not in (1, -1):
        raise errors.MissingParam(f"{key} must be +1 or -1")
    return value


# --- L-factors and Whittaker values ---

def local_L_factor(case: str, chi, X, mu=None, mu1=None, mu2=None) -> sympy.Expr:
    """
    [(1 - chi mu1 X)(1 - chi mu2 X)]^-1 for principal series,
    (1 - chi mu X)^-1 for the special representation; X = |varpi|^s.
    """
    chi, X = _q(chi), _q(X)
    if case == "special":
        factors = [1 - chi * _q(mu) * X]
    elif case == "unramified":
        factors = [1 - chi * _q(mu1) * X, 1 - chi * _q(mu2) * X]
    else:
        raise errors.MissingParam(f"unknown case {case!r}")
    if any(f == 0 for f in factors):
        raise errors.PoleAtS("the L-factor has a pole at this s")
    value = Rational(1)
    for f in factors:
        value = value / f
    return value


def whittaker_value(case: str, n: int, params: dict) -> sympy.Expr:
    # Newform value at diag(varpi^n, 1)
    if n < 0:
        return Rational(0)
    q_inv = _abs_varpi(params)
    if case == "special":
        mu = _q(_need(params, "mu"))
        return sympy.simplify(mu ** n * q_inv ** Rational(n, 2))
    if case == "unramified":
        mu1, mu2 = _q(_need(params, "mu1")), _q(_need(params, "mu2"))
        if mu1 == mu2:
            # Excluded by irreducibility
            raise errors.InconsistentCase("degenerate principal series: mu1(varpi) = mu2(varpi)")
        return sympy.simplify((mu1 ** (n + 1) - mu2 ** (n + 1)) / (mu1 - mu2) * q_inv ** Rational(n, 2))
    raise errors.MissingParam(f"unknown case {case!r}")


@dataclass(frozen=True)
class ZetaCheck:
    partial: sympy.Expr
    closed: sympy.Expr
    tail: sympy.Expr

    @property
    def holds(self) -> bool:
        diff = self.partial + self.tail - self.closed
        return diff == 0 or sympy.simplify(diff) == 0


def zeta_integral_check(case: str, chi, X, T: int, params: dict, different_factor=1) -> ZetaCheck:
    """
    Partial sum through T of the zeta integral of the newform, the closed
    form L(s, pi x chi) times chi(D)|D|^s, and the exact tail.
    """
    chi, X = _q(chi), _q(X)
    norm = _q(different_factor)
    if T < 0:
        raise errors.MissingParam("truncation must be >= 0")
    if case == "special":
        ratio = chi * _q(_need(params, "mu")) * X
        if abs(ratio) >= 1:
            raise errors.DivergentParameters(f"|mu chi X| = {abs(ratio)} >= 1")
        partial = sum((ratio ** n for n in range(T + 1)), Rational(0))
        closed = 1 / (1 - ratio)
        tail = ratio ** (T + 1) / (1 - ratio)
    elif case == "unramified":
        mu1, mu2 = _q(_need(params, "mu1")), _q(_need(params, "mu2"))
        if mu1 == mu2:
            raise errors.InconsistentCase("degenerate principal series: mu1(varpi) = mu2(varpi)")
        y = chi * X
        r1, r2 = mu1 * y, mu2 * y
        if abs(r1) >= 1 or abs(r2) >= 1:
            raise errors.DivergentParameters("the Satake parameters make the series diverge")
        partial = sum(((mu1 ** (n + 1) - mu2 ** (n + 1)) / (mu1 - mu2) * y ** n for n in range(T + 1)), Rational(0))
        closed = 1 / ((1 - r1) * (1 - r2))
        tail = (mu1 * r1 ** (T + 1) / (1 - r1) - mu2 * r2 ** (T + 1) / (1 - r2)) / (mu1 - mu2)
    else:
        raise errors.MissingParam(f"unknown case {case!r}")
    result = ZetaCheck(partial * norm, closed * norm, tail * norm)
    logger.debug("zeta integral %s T=%d closed=%s", case, T, result.closed)
    return result


# --- pairings and toric integrals ---

def pairing_b_value(case: str, params: dict) -> sympy.Expr:
    if case == "archimedean":
        k = int(_need(params, "k"))
        return (4 * pi) ** (-k) * gamma(k)
    abs_D = _q(params.get("abs_D", 1))
    if case == "unramified":
        return ZETA(1) / ZETA(2) * L_AD * sqrt(abs_D)
    if case == "special":
        return _sign(params, "eps") * L_AD * sqrt(abs_D)
    raise errors.MissingParam(f"unknown case {case!r}")


TORIC_CASES = (
    "split-principal", "split-special", "nonsplit-principal", "inert-special", "ramified-special",
    "old-split", "old-level", "old-nonsplit", "old-definite", "new-inert",
    "nb-inert", "nb-ramified", "archimedean",
)


def toric_P_value(case: str, params: dict) -> sympy.Expr:
    """
    Local toric period of the chosen test vector.

    params keys: abs_dF, abs_dK, abs_varpi, eps, alpha, norm (the local
    norm of the newform), chi_varpi, val_beta, c (conductor exponent),
    ramified, nu_varpi, k, m.
    """
    if case == "archimedean":
        k = int(_need(params, "k"))
        m = int(params.get("m", 0))
        return gamma(k) / (pi * gamma(Rational(k, 2) + m) * gamma(Rational(k, 2) - m))
    dF = _q(params.get("abs_dF", 1))
    if case == "split-principal":
        return dF
    if case == "split-special":
        return _sign(params, "eps") / _q(_need(params, "norm")) * _q(_need(params, "chi_varpi")) * dF
    dK = _q(params.get("abs_dK", 1))
    ratio = dK / sqrt(dF)
    if case == "nonsplit-principal":
        return ratio
    if case in ("inert-special", "new-inert"):
        w = _abs_varpi(params)
        return ratio * w * (_sign(params, "eps") + _sign(params, "alpha")) / (1 - w ** 2)
    if case == "ramified-special":
        w = _abs_varpi(params)
        return ratio * 2 * (1 + w) / _sign(params, "eps")
    if case == "old-split":
        if int(_need(params, "val_beta")) % 2 == 0:
            return dF
        return dF * _q(_need(params, "chi_varpi"))
    if case == "old-level":
        return _sign(params, "eps") / _q(_need(params, "norm")) * _q(_need(params, "chi_varpi")) * dF
    if case == "old-nonsplit":
        c = int(params.get("c", 0))
        if c == 0:
            return ratio
        return ratio * L_TAU ** 2 * _abs_varpi(params) ** c
    if case == "old-definite":
        c = int(params.get("c", 0))
        w = _abs_varpi(params)
        front = (1 + w) / _sign(params, "eps") * ratio
        if c == 0:
            if not params.get("ramified"):
                raise errors.MissingParam("c = 0 needs a prime ramified in K")
            return front * 2
        return front * L_TAU ** 2 * w ** c
    if case == "nb-inert":
        return ratio / ZETA(1)
    if case == "nb-ramified":
        alpha = _sign(params, "alpha")
        nu = _sign(params, "nu_varpi")
        if nu == alpha:
            return 2 * ratio / ZETA(1)
        return Rational(0)
    raise errors.MissingParam(f"unknown toric case {case!r}")


def volume_formula(params: dict) -> sympy.Expr:
    """
    Volume of the order's unit group modulo K^x and the units of F.

    params: unit_index, norm_DF, norm_DK, norm_c and places, a list of
    {"kind": "split" | "inert", "abs_varpi": ..., "n": ...}.
    """
    value = 1 / _q(params.get("unit_index", 1))
    value = value * sqrt(_q(params.get("norm_DF", 1))) / sqrt(_q(params.get("norm_DK", 1)))
    value = value / _q(params.get("norm_c", 1))
    for place in params.get("places", []):
        w = _abs_varpi(place)
        n = int(place.get("n", 0))
        value = value * w ** n
        kind = _need(place, "kind")
        if kind == "split":
            value = value * ZETA(1)
        elif kind == "inert":
            value = value * L_TAU
        else:
            raise errors.MissingParam(f"place kind must be split or inert, got {kind!r}")
    return value


@dataclass(frozen=True)
class PeriodRatio:
    value: sympy.Expr
    holds: bool


def period_ratio_check(primes: list[dict]) -> PeriodRatio:
    """
    Product of the root numbers of the split exceptional primes.

    An entry {"factorized": true} uses eps(1/2, mu) eps(1/2, mu|.|^-1) = 1;
    otherwise the supplied "eps" enters the product as it is.
    """
    value = Rational(1)
    for entry in primes:
        if entry.get("factorized"):
            pair = entry.get("pair")
            if pair is not None and _q(pair[0]) * _q(pair[1]) != 1:
                raise errors.InconsistentCase("root numbers of mu and mu|.|^-1 must multiply to 1")
            continue
        value = value * _sign(entry, "eps")
    return PeriodRatio(value, value == 1)


def resolve_zeta(expr: sympy.Expr, abs_varpi) -> sympy.Expr:
    # Replace zeta_v(s) by (1 - |varpi|^s)^-1
    w = _q(abs_varpi)
    return sympy.simplify(expr.replace(ZETA, lambda s: 1 / (1 - w ** s)))
