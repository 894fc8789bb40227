# src/bt_tree.py
# The Bruhat-Tits tree of GL2(Q_p): vertices as balls B(c, n), oriented edges,
# the edge <-> disc dictionary, Möbius and lattice actions, geodesics.

import re
from dataclasses import dataclass
from fractions import Fraction

import errors
from padic_core import INF, PadicNumber, check_prime, split_int

# The point at infinity of P^1(Q_p)
INFINITY = INF

_VERTEX_RE = re.compile(r"^V\((-?\d+);([-\d/]+)\)$")
_EDGE_RE = re.compile(r"^E\((-?\d+);([-\d/]+)\)>\((-?\d+);([-\d/]+)\)$")


def vp(x, p: int):
    # p-adic valuation of a rational (INF for 0)
    x = Fraction(x)
    if x == 0:
        return INF
    return split_int(x.numerator, p)[0] - split_int(x.denominator, p)[0]


def reduce_mod(c, p: int, n: int) -> Fraction:
    # Canonical representative of the class c + p^n Z_p: T/p^j with 0 <= T < p^(n+j)
    c = Fraction(c)
    if c == 0:
        return Fraction(0)
    j = max(0, -vp(c, p))
    e, s = split_int(c.denominator, p)
    span = n + j
    if span <= 0:
        return Fraction(0)
    mod = p ** span
    T = c.numerator * p ** (j - e) * pow(s, -1, mod) % mod
    return Fraction(T, p ** j)


def _fmt(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


@dataclass(frozen=True, order=True)
class TreeVertex:
    # Homothety class of the lattice <(p^n, 0), (c, 1)>, i.e. the ball B(c, n)
    p: int
    n: int
    c: Fraction

    @classmethod
    def make(cls, p: int, n: int, c) -> "TreeVertex":
        return cls(p, n, reduce_mod(c, p, n))

    def label(self) -> str:
        return f"V({self.n};{_fmt(self.c)})"

    @classmethod
    def parse(cls, text: str, p: int) -> "TreeVertex":
        m = _VERTEX_RE.match(text.strip())
        if not m:
            raise errors.InvalidFile(f"bad vertex label {text!r}")
        return cls.make(p, int(m.group(1)), Fraction(m.group(2)))

    def parent(self) -> "TreeVertex":
        return TreeVertex.make(self.p, self.n - 1, self.c)

    def children(self) -> list["TreeVertex"]:
        step = Fraction(self.p) ** self.n
        return [TreeVertex.make(self.p, self.n + 1, self.c + i * step) for i in range(self.p)]

    def ball(self) -> "Disc":
        return Disc(self.p, self.c, self.n, False)

    def __str__(self):
        return self.label()


@dataclass(frozen=True, order=True)
class TreeEdge:
    source: TreeVertex
    target: TreeVertex

    def reverse(self) -> "TreeEdge":
        return TreeEdge(self.target, self.source)

    def points_down(self) -> bool:
        # True when the target is a child of the source (smaller ball)
        return self.target.n == self.source.n + 1

    def label(self) -> str:
        s, t = self.source, self.target
        return f"E({s.n};{_fmt(s.c)})>({t.n};{_fmt(t.c)})"

    @classmethod
    def parse(cls, text: str, p: int) -> "TreeEdge":
        m = _EDGE_RE.match(text.strip())
        if not m:
            raise errors.InvalidFile(f"bad edge label {text!r}")
        s = TreeVertex.make(p, int(m.group(1)), Fraction(m.group(2)))
        t = TreeVertex.make(p, int(m.group(3)), Fraction(m.group(4)))
        if t not in neighbors(s):
            raise errors.InvalidFile(f"edge {text!r} joins non-adjacent vertices")
        return cls(s, t)

    def __str__(self):
        return self.label()


@dataclass(frozen=True, order=True)
class Disc:
    """
    Compact open disc of P^1(Q_p).

    outer = False: the ball a + p^m Z_p.
    outer = True: its complement, which contains infinity. The complement of
    B(0, -m) is written Dinf(m), other complements Dc(a;m).
    """
    p: int
    a: Fraction
    m: int
    outer: bool = False

    def __post_init__(self):
        object.__setattr__(self, "a", reduce_mod(self.a, self.p, self.m))

    def contains(self, x) -> bool:
        if x == INFINITY:
            return self.outer
        inside = vp(Fraction(x) - self.a, self.p) >= self.m
        return inside != self.outer

    def complement(self) -> "Disc":
        return Disc(self.p, self.a, self.m, not self.outer)

    def children(self) -> list["Disc"]:
        # Partition into the discs of the edges leaving the target of disc_to_edge(self)
        p, a, m = self.p, self.a, self.m
        if not self.outer:
            step = Fraction(p) ** m
            return [Disc(p, a + i * step, m + 1) for i in range(p)]
        up = Disc(p, a, m - 1, True)
        step = Fraction(p) ** (m - 1)
        base = reduce_mod(a, p, m - 1)
        siblings = [Disc(p, base + i * step, m) for i in range(p)]
        return [up] + [d for d in siblings if d.a != a]

    def center(self):
        # Sample point used by Riemann sums
        return INFINITY if self.outer else self.a

    def label(self) -> str:
        if not self.outer:
            return f"D({_fmt(self.a)};{self.m})"
        if self.a == 0:
            return f"Dinf({-self.m})"
        return f"Dc({_fmt(self.a)};{self.m})"

    def __str__(self):
        return self.label()


@dataclass(frozen=True)
class TwistedMatrix:
    """
    Invertible 2x2 matrix over Q acting on the tree and on P^1(Q_p).

    With twisted = True the effective matrix is hbar * g * hbar^-1, the
    convention used for the twisted action of the torus.
    """
    entries: tuple
    twisted: bool = False
    hbar: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_matrix(self.entries))
        if self.hbar is not None:
            object.__setattr__(self, "hbar", _as_matrix(self.hbar))
        if _det(self.entries) == 0:
            raise errors.SingularMatrix("matrix has zero determinant")
        if self.hbar is not None and _det(self.hbar) == 0:
            raise errors.SingularMatrix("twist conjugator has zero determinant")

    @classmethod
    def identity(cls) -> "TwistedMatrix":
        return cls(((1, 0), (0, 1)))

    def effective(self) -> tuple:
        if not self.twisted or self.hbar is None:
            return self.entries
        return _mat_mul(_mat_mul(self.hbar, self.entries), _mat_inv(self.hbar))

    def det(self) -> Fraction:
        return _det(self.entries)

    def __matmul__(self, other: "TwistedMatrix") -> "TwistedMatrix":
        return TwistedMatrix(_mat_mul(self.effective(), other.effective()))

    def inverse(self) -> "TwistedMatrix":
        return TwistedMatrix(_mat_inv(self.effective()))

    def __pow__(self, k: int) -> "TwistedMatrix":
        base = self if k >= 0 else self.inverse()
        result = TwistedMatrix.identity()
        for _ in range(abs(k)):
            result = result @ base
        return result


def _as_matrix(m) -> tuple:
    return tuple(tuple(Fraction(x) for x in row) for row in m)


def _det(m) -> Fraction:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def _mat_mul(x, y) -> tuple:
    return tuple(tuple(sum(x[i][k] * y[k][j] for k in range(2)) for j in range(2)) for i in range(2))


def _mat_inv(m) -> tuple:
    d = _det(m)
    if d == 0:
        raise errors.SingularMatrix("matrix has zero determinant")
    return ((m[1][1] / d, -m[0][1] / d), (-m[1][0] / d, m[0][0] / d))


def torus_element(t1, t2, hbar=None) -> TwistedMatrix:
    # i_p(t) acting through the twisted dictionary; with hbar = 1 it scales points by t1/t2
    return TwistedMatrix(((t1, 0), (0, t2)), twisted=True, hbar=hbar)


def as_matrix(g) -> TwistedMatrix:
    return g if isinstance(g, TwistedMatrix) else TwistedMatrix(g)


# --- tree structure ---

def base_vertex(p: int) -> TreeVertex:
    return TreeVertex.make(check_prime(p), 0, 0)


def standard_edge(p: int) -> TreeEdge:
    # e0 = V(-1;0) > V(0;0); its disc is Z_p
    return TreeEdge(TreeVertex.make(p, -1, 0), TreeVertex.make(p, 0, 0))


def neighbors(v: TreeVertex) -> list[TreeVertex]:
    return [v.parent()] + v.children()


def edges_from(v: TreeVertex) -> list[TreeEdge]:
    return [TreeEdge(v, w) for w in neighbors(v)]


def edge_to_disc(e: TreeEdge) -> Disc:
    s, t = e.source, e.target
    if e.points_down():
        return Disc(t.p, t.c, t.n, False)
    return Disc(s.p, s.c, s.n, True)


def disc_to_edge(d: Disc) -> TreeEdge:
    ball = TreeVertex.make(d.p, d.m, d.a)
    if not d.outer:
        return TreeEdge(ball.parent(), ball)
    return TreeEdge(ball, ball.parent())


def vertex_to_lattice(v: TreeVertex) -> tuple:
    # Basis columns of a representative lattice
    return ((Fraction(v.p) ** v.n, Fraction(0)), (v.c, Fraction(1)))


def lattice_to_vertex(p: int, cols) -> TreeVertex:
    # Hermite-style reduction: pivot on the column whose y-entry has minimal valuation
    (x1, y1), (x2, y2) = cols
    if vp(y1, p) <= vp(y2, p):
        (xp, yp), (xo, yo) = (x1, y1), (x2, y2)
    else:
        (xp, yp), (xo, yo) = (x2, y2), (x1, y1)
    if yp == 0:
        raise errors.SingularMatrix("degenerate lattice")
    x_rest = xo - (yo / yp) * xp
    n = vp(x_rest, p) - vp(yp, p)
    return TreeVertex.make(p, n, xp / yp)


def moebius(g, x):
    a, b, c, d = (e for row in as_matrix(g).effective() for e in row)
    if x == INFINITY:
        return INFINITY if c == 0 else a / c
    x = Fraction(x)
    den = c * x + d
    if den == 0:
        return INFINITY
    return (a * x + b) / den


def disc_image(g, d: Disc) -> Disc:
    """
    Möbius image g(U) of a disc, computed from its points.

    Off the pole of g the map is a similarity with ratio |det| / |c x + d|^2,
    so a ball missing the pole goes to a ball. A ball around the pole goes
    to the complement of the ball that its complement (infinity included)
    is mapped onto, centred at g(infinity) = a/c.
    """
    (a, b), (c, dd) = as_matrix(g).effective()
    p = d.p
    v_det = vp(a * dd - b * c, p)
    ball = Disc(p, d.a, d.m)
    if c == 0 or not ball.contains(-dd / c):
        image = Disc(p, moebius(g, ball.a), ball.m + v_det - 2 * vp(c * ball.a + dd, p))
    else:
        image = Disc(p, a / c, v_det - 2 * vp(c, p) - ball.m + 1, True)
    return image.complement() if d.outer else image


def act(g, x):
    """
    Action of a (twisted) matrix on vertices, edges, discs and points.

    Vertices move through the lattice action, edges vertexwise and discs
    pointwise; the edge dictionary is equivariant, U_ge = g U_e.
    """
    g = as_matrix(g)
    if isinstance(x, TreeVertex):
        (a, b), (c, d) = g.effective()
        (x1, y1), (x2, y2) = vertex_to_lattice(x)
        cols = ((a * x1 + b * y1, c * x1 + d * y1), (a * x2 + b * y2, c * x2 + d * y2))
        return lattice_to_vertex(x.p, cols)
    if isinstance(x, TreeEdge):
        return TreeEdge(act(g, x.source), act(g, x.target))
    if isinstance(x, Disc):
        return disc_image(g, x)
    return moebius(g, x)


def join(v1: TreeVertex, v2: TreeVertex) -> TreeVertex:
    # Smallest ball containing both balls
    level = min(v1.n, v2.n, vp(v1.c - v2.c, v1.p))
    return TreeVertex.make(v1.p, level, v1.c)


def geodesic(v1: TreeVertex, v2: TreeVertex) -> list[TreeEdge]:
    top = join(v1, v2)
    up = []
    v = v1
    while v.n > top.n:
        up.append(TreeEdge(v, v.parent()))
        v = v.parent()
    down = []
    v = v2
    while v.n > top.n:
        down.append(TreeEdge(v.parent(), v))
        v = v.parent()
    return up + down[::-1]


def distance(v1: TreeVertex, v2: TreeVertex) -> int:
    top = join(v1, v2)
    return (v1.n - top.n) + (v2.n - top.n)


def hyperbolic_axis(qtilde) -> tuple[TwistedMatrix, list[TreeEdge]]:
    # gamma = diag(qtilde, 1): x -> qtilde*x, translation length h = v(qtilde) along 0..inf
    if isinstance(qtilde, PadicNumber):
        p, h, q = qtilde.p, qtilde.v, qtilde.rational()
    else:
        raise errors.ValidationError("hyperbolic_axis expects a PadicNumber")
    if qtilde.is_zero() or h < 1:
        raise errors.NotHyperbolic(f"v(qtilde) = {h} is not positive")
    gamma = TwistedMatrix(((q, 0), (0, 1)))
    strip = [TreeEdge(TreeVertex.make(p, i - 1, 0), TreeVertex.make(p, i, 0)) for i in range(h)]
    return gamma, strip
