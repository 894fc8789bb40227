# src/padic_core.py
# Capped-precision arithmetic in Q_p and in its unramified quadratic extension.
# Also Teichmüller lifts, the exponential and the family of logarithm branches log_u.

import logging
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from sympy import isprime
from sympy.ntheory import is_quad_residue

import errors

logger = logging.getLogger(__name__)

INF = float("inf")
DEFAULT_PRECISION = 20

_PADIC_RE = re.compile(r"^\s*(\d+)\^(-?\d+)\s*\*\s*(\d+)\s*\+\s*O\(\s*(\d+)\^(-?\d+)\s*\)\s*$")
_ZERO_RE = re.compile(r"^\s*0\s*\+\s*O\(\s*(\d+)\^(-?\d+)\s*\)\s*$")


@lru_cache(maxsize=None)
def check_prime(p: int) -> int:
    if p == 2 or not isprime(p):
        raise errors.ValidationError(f"p = {p} is not an odd prime")
    return p


def split_int(n: int, p: int) -> tuple[int, int]:
    # n = p^v * unit with unit prime to p (n != 0)
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v, n


def ilog(k: int, p: int) -> int:
    # floor(log_p k), an upper bound for v_p(k)
    e = 0
    while k >= p:
        k //= p
        e += 1
    return e


@dataclass(frozen=True)
class PadicNumber:
    """
    Element p^v * u + O(p^N) of Q_p.

    The exact zero sentinel has v = INF, u = 0 and keeps its absolute
    precision N (it stands for O(p^N)). Nonzero values satisfy
    1 <= u < p^(N - v) and u prime to p, so (p, N, v, u) is canonical.
    """
    p: int
    N: int
    v: int | float
    u: int

    # --- constructors ---

    @classmethod
    def zero(cls, p: int, N: int) -> "PadicNumber":
        return cls(p, N, INF, 0)

    @classmethod
    def make(cls, p: int, N: int, v: int, unit: int) -> "PadicNumber":
        # Canonical form of p^v * unit + O(p^N) for an arbitrary integer unit
        if unit == 0:
            return cls.zero(p, N)
        e, unit = split_int(unit, p)
        v += e
        if v >= N:
            return cls.zero(p, N)
        return cls(p, N, v, unit % p ** (N - v))

    @classmethod
    def from_rational(cls, value, p: int, N: int = DEFAULT_PRECISION) -> "PadicNumber":
        value = Fraction(value)
        if value == 0:
            return cls.zero(p, N)
        a, num = split_int(value.numerator, p)
        b, den = split_int(value.denominator, p)
        v = a - b
        if v >= N:
            return cls.zero(p, N)
        mod = p ** (N - v)
        return cls(p, N, v, num * pow(den, -1, mod) % mod)

    @classmethod
    def one(cls, p: int, N: int = DEFAULT_PRECISION) -> "PadicNumber":
        return cls(p, N, 0, 1 % p ** N) if N > 0 else cls.zero(p, N)

    # --- basic queries ---

    def is_zero(self) -> bool:
        return self.v == INF

    def valuation(self):
        return self.v

    @property
    def relative_precision(self) -> int:
        return 0 if self.is_zero() else self.N - self.v

    def rational(self) -> Fraction:
        # Canonical rational representative p^v * u
        if self.is_zero():
            return Fraction(0)
        return Fraction(self.u) * Fraction(self.p) ** self.v

    def residue(self) -> int:
        # Residue of the unit part mod p
        return self.u % self.p

    def unit_part(self) -> "PadicNumber":
        if self.is_zero():
            raise errors.ZeroInput("zero has no unit part")
        return PadicNumber(self.p, self.N - self.v, 0, self.u)

    def abs_value(self) -> Fraction:
        return Fraction(0) if self.is_zero() else Fraction(self.p) ** (-self.v)

    def with_precision(self, N: int) -> "PadicNumber":
        # Lower the absolute precision to N (never raises it)
        if N >= self.N:
            return self
        if self.is_zero():
            return PadicNumber.zero(self.p, N)
        return PadicNumber.make(self.p, N, self.v, self.u)

    def is_close(self, other, digits: int) -> bool:
        diff = self - other
        if diff.is_zero():
            return diff.N >= digits
        return diff.v >= digits

    def agreement(self, other) -> int | float:
        # Number of p-adic digits on which self and other provably agree
        diff = self - other
        return diff.N if diff.is_zero() else diff.v

    # --- arithmetic ---

    def _coerce(self, other):
        if isinstance(other, PadicNumber):
            if other.p != self.p:
                raise errors.PrimeMismatch(f"primes {self.p} and {other.p} differ")
            return other
        if isinstance(other, (int, Fraction)):
            value = Fraction(other)
            vc = 0 if value == 0 else split_int(value.numerator, self.p)[0] - split_int(value.denominator, self.p)[0]
            # Exact constants are coerced at a precision that never limits the result
            N = max(self.N, vc + self.relative_precision, vc + 1) + 1
            return PadicNumber.from_rational(value, self.p, N)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        N = min(self.N, other.N)
        if self.is_zero():
            return other.with_precision(N) if not other.is_zero() else PadicNumber.zero(self.p, N)
        if other.is_zero():
            return self.with_precision(N)
        m = min(self.v, other.v)
        total = self.u * self.p ** (self.v - m) + other.u * self.p ** (other.v - m)
        return PadicNumber.make(self.p, N, m, total)

    __radd__ = __add__

    def __neg__(self):
        if self.is_zero():
            return self
        return PadicNumber.make(self.p, self.N, self.v, -self.u)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        p = self.p
        if self.is_zero() or other.is_zero():
            if self.is_zero() and other.is_zero():
                return PadicNumber.zero(p, self.N + other.N)
            if self.is_zero():
                return PadicNumber.zero(p, self.N + other.v)
            return PadicNumber.zero(p, other.N + self.v)
        v = self.v + other.v
        r = min(self.relative_precision, other.relative_precision)
        return PadicNumber.make(p, v + r, v, self.u * other.u)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise errors.DivisionByZero("division by a p-adic zero")
        if self.is_zero():
            return PadicNumber.zero(self.p, self.N - other.v)
        v = self.v - other.v
        r = min(self.relative_precision, other.relative_precision)
        mod = self.p ** r
        return PadicNumber.make(self.p, v + r, v, self.u * pow(other.u, -1, mod))

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other / self

    def __pow__(self, n: int):
        if n < 0:
            return PadicNumber.one(self.p, self.relative_precision or self.N) / self ** (-n)
        if n == 0:
            return PadicNumber.one(self.p, self.relative_precision or self.N)
        if self.is_zero():
            return PadicNumber.zero(self.p, self.N * n)
        r = self.relative_precision
        return PadicNumber.make(self.p, n * self.v + r, n * self.v, pow(self.u, n, self.p ** r))

    # --- text form ---

    def __str__(self):
        if self.is_zero():
            return f"0 + O({self.p}^{self.N})"
        return f"{self.p}^{self.v} * {self.u} + O({self.p}^{self.N})"

    @classmethod
    def parse(cls, text: str, p: int | None = None, N: int | None = None) -> "PadicNumber":
        # Accepts "p^v * u + O(p^N)", "0 + O(p^N)", or a rational when p and N are given
        text = text.strip()
        m = _PADIC_RE.match(text)
        if m:
            base, v, unit, base2, prec = (int(g) for g in m.groups())
            if base != base2 or (p is not None and base != p):
                raise errors.PrimeMismatch(f"inconsistent prime in {text!r}")
            return cls.make(check_prime(base), prec, v, unit)
        m = _ZERO_RE.match(text)
        if m:
            base, prec = int(m.group(1)), int(m.group(2))
            if p is not None and base != p:
                raise errors.PrimeMismatch(f"inconsistent prime in {text!r}")
            return cls.zero(check_prime(base), prec)
        if p is None:
            raise errors.InvalidFile(f"cannot read p-adic number {text!r} without a prime")
        try:
            value = Fraction(text)
        except ValueError as e:
            raise errors.InvalidFile(f"cannot read p-adic number {text!r}") from e
        return cls.from_rational(value, check_prime(p), N if N is not None else DEFAULT_PRECISION)


def as_padic(value, p: int, N: int) -> PadicNumber:
    if isinstance(value, PadicNumber):
        return value
    if isinstance(value, str):
        return PadicNumber.parse(value, p, N)
    return PadicNumber.from_rational(value, p, N)


# --- the unramified quadratic extension Q_p(w), w^2 = d ---

@lru_cache(maxsize=None)
def qp2_nonresidue(p: int) -> int:
    # d = -1 when p = 3 mod 4, otherwise the least quadratic non-residue
    if p % 4 == 3:
        return -1
    for d in range(2, p):
        if not is_quad_residue(d, p):
            return d
    raise errors.ValidationError(f"no quadratic non-residue mod {p}")


@dataclass(frozen=True)
class Qp2Number:
    # a + b*w with w^2 = qp2_nonresidue(p)
    a: PadicNumber
    b: PadicNumber

    def __post_init__(self):
        if self.a.p != self.b.p:
            raise errors.PrimeMismatch("coordinates over different primes")

    @classmethod
    def from_parts(cls, a, b, p: int, N: int = DEFAULT_PRECISION) -> "Qp2Number":
        return cls(as_padic(a, p, N), as_padic(b, p, N))

    @classmethod
    def omega(cls, p: int, N: int = DEFAULT_PRECISION) -> "Qp2Number":
        return cls(PadicNumber.zero(p, N), PadicNumber.one(p, N))

    @property
    def p(self) -> int:
        return self.a.p

    @property
    def N(self) -> int:
        return min(self.a.N, self.b.N)

    @property
    def d(self) -> int:
        return qp2_nonresidue(self.p)

    def is_zero(self) -> bool:
        return self.a.is_zero() and self.b.is_zero()

    def valuation(self):
        return min(self.a.v, self.b.v)

    def conj(self) -> "Qp2Number":
        return Qp2Number(self.a, -self.b)

    def norm(self) -> PadicNumber:
        return self.a * self.a - self.b * self.b * self.d

    def trace(self) -> PadicNumber:
        return self.a * 2

    def is_close(self, other, digits: int) -> bool:
        other = self._coerce(other)
        return self.a.is_close(other.a, digits) and self.b.is_close(other.b, digits)

    def _coerce(self, other):
        if isinstance(other, Qp2Number):
            if other.p != self.p:
                raise errors.PrimeMismatch(f"primes {self.p} and {other.p} differ")
            return other
        if isinstance(other, (PadicNumber, int, Fraction)):
            a = self.a._coerce(other)
            return Qp2Number(a, PadicNumber.zero(self.p, max(a.N, self.N) + 1))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Qp2Number(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __neg__(self):
        return Qp2Number(-self.a, -self.b)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Qp2Number(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (PadicNumber, int, Fraction)):
            return Qp2Number(self.a * other, self.b * other)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a = self.a * other.a + self.b * other.b * self.d
        b = self.a * other.b + self.b * other.a
        return Qp2Number(a, b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (PadicNumber, int, Fraction)):
            return Qp2Number(self.a / other, self.b / other)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if other.is_zero():
            raise errors.DivisionByZero("division by a p-adic zero")
        n = other.norm()
        num = self * other.conj()
        return Qp2Number(num.a / n, num.b / n)

    def __rtruediv__(self, other):
        return Qp2Number(self.a._coerce(other), PadicNumber.zero(self.p, self.N + 1)) / self

    def __str__(self):
        return f"({self.a}) + ({self.b})*w"


# --- Teichmüller lifts ---

def teichmuller(a: int, p: int, N: int = DEFAULT_PRECISION) -> PadicNumber:
    check_prime(p)
    if a % p == 0:
        raise errors.ZeroResidue(f"{a} is divisible by {p}")
    mod = p ** N
    return PadicNumber.make(p, N, 0, pow(a, p ** (N - 1), mod))


# --- logarithm and exponential ---

def _pair_mul(x, y, d, mod):
    return ((x[0] * y[0] + d * x[1] * y[1]) % mod, (x[0] * y[1] + x[1] * y[0]) % mod)


def _pair_pow(x, n, d, mod):
    result = (1 % mod, 0)
    while n:
        if n & 1:
            result = _pair_mul(result, x, d, mod)
        x = _pair_mul(x, x, d, mod)
        n >>= 1
    return result


def _log_unit(y, p: int, r: int, q: int, d: int):
    # log of the unit y (pair of integers, known mod p^r) via log(y^(q-1))/(q-1)
    if r <= 0:
        return (0, 0)
    t_val = 1
    # first pass: number of series terms and the extra digits lost to divisions by k
    k = 1
    while k * t_val - ilog(k, p) < r:
        k += 1
    K = k - 1
    E = ilog(max(K, 1), p)
    mod = p ** (r + E)
    w = _pair_pow((y[0] % mod, y[1] % mod), q - 1, d, mod)
    t = ((w[0] - 1) % mod, w[1] % mod)
    if t == (0, 0):
        return (0, 0)
    vt = min(split_int(c, p)[0] if c else r + E for c in t)
    if vt >= r:
        return (0, 0)
    out_mod = p ** r
    total = [0, 0]
    power = (1, 0)
    k = 1
    while k * vt - ilog(k, p) < r:
        power = _pair_mul(power, t, d, mod)
        e, m = split_int(k, p)
        inv = pow(m, -1, out_mod)
        sign = 1 if k % 2 else -1
        for i in range(2):
            total[i] = (total[i] + sign * (power[i] // p ** e) * inv) % out_mod
        k += 1
    logger.debug("log series for p=%d stopped after %d terms (r=%d)", p, k - 1, r)
    inv_q = pow(q - 1, -1, out_mod)
    return (total[0] * inv_q % out_mod, total[1] * inv_q % out_mod)


def iwasawa_log(x):
    """
    Iwasawa logarithm: the branch with log(p) = 0 and log(roots of unity) = 0.

    The result is known to as many absolute digits as x has relative digits.
    Accepts PadicNumber and Qp2Number.
    """
    if isinstance(x, Qp2Number):
        if x.is_zero():
            raise errors.ZeroInput("log of zero")
        p = x.p
        v = x.valuation()
        r = x.N - v
        y = tuple(0 if c.is_zero() else c.u * p ** (c.v - v) for c in (x.a, x.b))
        la, lb = _log_unit(y, p, r, p * p, x.d)
        return Qp2Number(PadicNumber.make(p, r, 0, la), PadicNumber.make(p, r, 0, lb))
    if x.is_zero():
        raise errors.ZeroInput("log of zero")
    r = x.relative_precision
    la, _ = _log_unit((x.u, 0), x.p, r, x.p, qp2_nonresidue(x.p))
    return PadicNumber.make(x.p, r, 0, la)


def exp_p(x: PadicNumber) -> PadicNumber:
    # Sum of x^k/k!; the tail bound k*v - (k-1)/(p-1) >= N decides the stop
    p = x.p
    if x.is_zero():
        return PadicNumber.one(p, x.N)
    if x.v < 1:
        raise errors.ConvergenceDomain(f"exp_p needs valuation >= 1, got {x.v}")
    N = x.N
    if N <= 0:
        return PadicNumber.zero(p, N)
    K = 0
    while not (K + 1) * x.v - Fraction(K, p - 1) >= N:
        K += 1
    E = sum(split_int(k, p)[0] for k in range(1, K + 1))
    mod = p ** (N + E)
    out_mod = p ** N
    X = x.u * p ** x.v % mod
    total = 1
    power = 1
    fact_e = 0
    fact_unit = 1
    for k in range(1, K + 1):
        power = power * X % mod
        e, m = split_int(k, p)
        fact_e += e
        fact_unit = fact_unit * m % out_mod
        total = (total + (power // p ** fact_e) * pow(fact_unit, -1, out_mod)) % out_mod
    logger.debug("exp series for p=%d used %d terms (N=%d)", p, K, N)
    return PadicNumber.make(p, N, 0, total)


@dataclass(frozen=True)
class LogBranch:
    # The homomorphism log_u on Q_p^x with log_u(u) = 0, v(u) = h >= 1
    p: int
    u: PadicNumber

    def __post_init__(self):
        if self.u.p != self.p:
            raise errors.PrimeMismatch("branch point over another prime")
        if self.u.is_zero() or self.u.v < 1:
            raise errors.ValidationError("branch point needs positive valuation")

    @property
    def h(self) -> int:
        return self.u.v

    @classmethod
    def iwasawa(cls, p: int, N: int = DEFAULT_PRECISION) -> "LogBranch":
        return cls(p, PadicNumber.from_rational(p, p, N))

    @classmethod
    def parse(cls, spec: str, p: int, N: int = DEFAULT_PRECISION) -> "LogBranch":
        # Grammar: "iwasawa" or "u:<padic-string>"
        spec = spec.strip()
        if spec == "iwasawa":
            return cls.iwasawa(p, N)
        if spec.startswith("u:"):
            try:
                return cls(p, PadicNumber.parse(spec[2:], p, N))
            except errors.ValidationError as e:
                raise errors.UsageError(f"bad branch {spec!r}: {e.message}") from e
        raise errors.UsageError(f"bad branch {spec!r}, expected 'iwasawa' or 'u:<padic>'")

    def __str__(self):
        return f"u:{self.u}"


def branch_log(branch: LogBranch, x):
    # log_u(x) = log_Iw(x) - (v(x)/h) * log_Iw(u)
    if x.is_zero():
        raise errors.ZeroInput("log of zero")
    lx = iwasawa_log(x)
    vx = x.valuation()
    if vx == 0:
        return lx
    return lx - iwasawa_log(branch.u) * Fraction(vx, branch.h)
