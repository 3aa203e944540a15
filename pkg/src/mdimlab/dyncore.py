"""Shift spaces, points, metrics, dynamical balls and cylinder potentials.

Two metrics are supported on one-sided shifts over ``{0, ..., k-1}``:

* ``ultrametric_2adic``: ``d(x, y) = 2**-j`` where ``j`` is the first index at
  which ``x`` and ``y`` differ.
* ``sup_weighted_grid``: ``d(x, y) = sup_i 2**-i |v(x_i) - v(y_i)|`` where ``v``
  embeds the alphabet into ``[0, 1]``.

All distances are computed in exact rational arithmetic, so strict
inequalities such as ``d_n(x, y) < eps`` are decided without rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product
from typing import Sequence

import numpy as np

ULTRAMETRIC = "ultrametric_2adic"
GRID = "sup_weighted_grid"
METRIC_KINDS = (ULTRAMETRIC, GRID)


class InvalidPointError(ValueError):
    """A point or word contains a forbidden word."""

    def __init__(self, word):
        self.word = tuple(word)
        super().__init__(f"forbidden word {''.join(map(str, self.word)) or '()'} occurs")


class ModeError(ValueError):
    """The requested exact computation is not available for this input."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    # shortest decimal representation, so 0.3 means 3/10
    return Fraction(repr(float(x)))


def ball_depth(epsilon) -> int:
    """Smallest ``j >= 0`` with ``2**-j < eps``.

    Two points are ``eps``-close in the ultrametric iff they agree on their
    first ``ball_depth(eps)`` coordinates.
    """
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    j = 0
    while Fraction(1, 2 ** j) >= eps:
        j += 1
    return j


def separation_depth(epsilon) -> int:
    """Smallest ``j >= 0`` with ``2**-j <= eps``.

    Two points are more than ``eps`` apart iff they differ somewhere in their
    first ``separation_depth(eps)`` coordinates.
    """
    eps = as_fraction(epsilon)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    j = 0
    while Fraction(1, 2 ** j) > eps:
        j += 1
    return j


def resolution_depth(epsilon) -> int:
    """Number of coordinates beyond ``n`` fixed by an ``(n, eps)``-ball.

    ``B_n(x, eps)`` is the cylinder of length ``n + resolution_depth(eps)``
    on the ultrametric (for ``eps <= 1``). It equals ``m`` at ``eps = 2**-m``.
    """
    return ball_depth(epsilon) - 1


def ball_length(n: int, epsilon) -> int:
    """Length of the cylinder equal to ``B_n(x, eps)``; 0 means the whole space."""
    j = ball_depth(epsilon)
    return 0 if j == 0 else n - 1 + j


def separation_length(n: int, epsilon) -> int:
    """Points are ``(n, eps)``-separated iff their first ``L`` symbols differ; 0 means never."""
    j = separation_depth(epsilon)
    return 0 if j == 0 else n - 1 + j


def word_index(word: Sequence[int], k: int) -> int:
    idx = 0
    for a in word:
        idx = idx * k + int(a)
    return idx


def all_words(k: int, length: int):
    return product(range(k), repeat=length)


@dataclass(frozen=True)
class SymbolicSystem:
    """One-sided shift space with forbidden words and one of two metrics.

    ``spec_gap`` is the declared specification gap (number of filler symbols
    needed between glued segments); ``None`` means the system does not
    declare the specification property.
    """

    alphabet_size: int
    metric_kind: str = ULTRAMETRIC
    forbidden_words: tuple = ()
    embedding: tuple | None = None
    one_sided: bool = True
    spec_gap: int | None = 0

    def __post_init__(self):
        k = int(self.alphabet_size)
        if k < 1:
            raise ValueError("alphabet_size must be >= 1")
        if self.metric_kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric_kind {self.metric_kind!r}")
        if self.embedding is None:
            emb = (Fraction(0),) if k == 1 else tuple(Fraction(i, k - 1) for i in range(k))
        else:
            emb = tuple(as_fraction(v) for v in self.embedding)
            if len(emb) != k:
                raise ValueError("embedding must have one value per symbol")
            if any(v < 0 or v > 1 for v in emb):
                raise ValueError("embedding values must lie in [0, 1]")
            if any(b <= a for a, b in zip(emb, emb[1:])):
                raise ValueError("embedding must be strictly increasing")
        fw = tuple(tuple(int(a) for a in w) for w in self.forbidden_words)
        for w in fw:
            if not w or any(a < 0 or a >= k for a in w):
                raise ValueError(f"bad forbidden word {w}")
        object.__setattr__(self, "alphabet_size", k)
        object.__setattr__(self, "embedding", emb)
        object.__setattr__(self, "forbidden_words", fw)

    # -- structure ---------------------------------------------------------
    def system_at(self, epsilon):
        """A fixed system is its own member at every scale."""
        return self

    @property
    def k(self) -> int:
        return self.alphabet_size

    @property
    def is_full_shift(self) -> bool:
        return not self.forbidden_words

    @property
    def forbidden_length(self) -> int:
        return max((len(w) for w in self.forbidden_words), default=0)

    @property
    def spacing(self) -> Fraction:
        """Smallest gap between embedded symbol values (1 for a single symbol)."""
        emb = self.embedding
        if len(emb) == 1:
            return Fraction(1)
        return min(b - a for a, b in zip(emb, emb[1:]))

    @property
    def diameter(self) -> Fraction:
        if self.alphabet_size == 1:
            return Fraction(0)
        if self.metric_kind == ULTRAMETRIC:
            return Fraction(1)
        return self.embedding[-1] - self.embedding[0]

    @cached_property
    def _forbidden_set(self):
        return frozenset(self.forbidden_words)

    def first_forbidden(self, word: Sequence[int]):
        """Return the first forbidden subword of ``word`` (by end position) or None."""
        fs = self._forbidden_set
        if not fs:
            return None
        word = tuple(word)
        lengths = sorted({len(w) for w in fs})
        for end in range(1, len(word) + 1):
            for ln in lengths:
                if ln <= end and word[end - ln:end] in fs:
                    return word[end - ln:end]
        return None

    def admissible(self, word: Sequence[int]) -> bool:
        return self.first_forbidden(word) is None

    def check_point(self, x: "Point"):
        _check_point(self, x)

    def _check_point_uncached(self, x: "Point"):
        w = x.word(0, len(x.prefix) + len(x.tail) + max(self.forbidden_length, 1) + len(x.tail))
        bad = self.first_forbidden(w)
        if bad is not None:
            raise InvalidPointError(bad)
        if any(a < 0 or a >= self.alphabet_size for a in w):
            raise ValueError(f"symbol outside alphabet in {w}")

    @cached_property
    def _live_contexts(self):
        """Words of length F-1 that admit an infinite admissible continuation."""
        F = self.forbidden_length
        k = self.alphabet_size
        r = max(F - 1, 0)
        ctx = [w for w in all_words(k, r) if self.admissible(w)]
        live = set(ctx)
        changed = True
        while changed:
            changed = False
            for w in list(live):
                ok = False
                for a in range(k):
                    ext = w + (a,)
                    if (not self.first_forbidden(ext[-F:]) if F else True) and ext[len(ext) - r:] in live:
                        ok = True
                        break
                if not ok:
                    live.discard(w)
                    changed = True
        return frozenset(live)

    def extends_forever(self, word: Sequence[int]) -> bool:
        """True iff ``word`` is admissible and has an infinite admissible continuation."""
        word = tuple(word)
        if not self.admissible(word):
            return False
        F = self.forbidden_length
        if F <= 1:
            return bool(self._live_contexts) or F == 0
        r = F - 1
        if len(word) >= r:
            return word[len(word) - r:] in self._live_contexts
        # short word: try all padded contexts
        for pad in all_words(self.alphabet_size, r - len(word)):
            if word + pad in self._live_contexts and self.admissible(word + pad):
                return True
        return False

    def complete(self, word: Sequence[int]) -> "Point":
        """A point of the shift beginning with ``word`` (deterministic choice)."""
        word = tuple(int(a) for a in word)
        if not self.extends_forever(word):
            raise InvalidPointError(self.first_forbidden(word) or word)
        k = self.alphabet_size
        if self.is_full_shift:
            return Point(word, (0,))
        F = self.forbidden_length
        r = F - 1
        # walk greedily (smallest live symbol) until a context repeats
        cur = list(word)
        seen = {}
        while True:
            if len(cur) >= r:
                ctx = tuple(cur[len(cur) - r:])
                if ctx in seen:
                    start = seen[ctx]
                    return Point(tuple(cur[:start]), tuple(cur[start:]))
                seen[ctx] = len(cur)
            for a in range(k):
                if self.extends_forever((cur + [a])[-F:]):
                    cur.append(a)
                    break


@lru_cache(maxsize=4096)
def _check_point(sys: SymbolicSystem, x: "Point"):
    sys._check_point_uncached(x)


@dataclass(frozen=True)
class Point:
    """Eventually periodic sequence: ``prefix`` followed by ``tail`` repeated forever."""

    prefix: tuple = ()
    tail: tuple = (0,)

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(int(a) for a in self.prefix))
        object.__setattr__(self, "tail", tuple(int(a) for a in self.tail))
        if not self.tail:
            raise ValueError("tail word must be nonempty")

    @classmethod
    def periodic(cls, word) -> "Point":
        return cls((), tuple(word))

    @classmethod
    def constant(cls, symbol: int) -> "Point":
        return cls((), (int(symbol),))

    def symbol(self, i: int) -> int:
        p = len(self.prefix)
        if i < p:
            return self.prefix[i]
        return self.tail[(i - p) % len(self.tail)]

    def word(self, start: int, length: int) -> tuple:
        return tuple(self.symbol(i) for i in range(start, start + length))

    def shift(self, m: int = 1) -> "Point":
        p = len(self.prefix)
        if m <= p:
            return Point(self.prefix[m:], self.tail)
        r = (m - p) % len(self.tail)
        return Point((), self.tail[r:] + self.tail[:r])

    def horizon(self, other: "Point") -> int:
        """Index beyond which both points are jointly periodic."""
        return max(len(self.prefix), len(other.prefix)) + math.lcm(len(self.tail), len(other.tail))


def first_difference(x: Point, y: Point):
    """First index where ``x`` and ``y`` differ, or None if they are equal."""
    for i in range(x.horizon(y)):
        if x.symbol(i) != y.symbol(i):
            return i
    return None


def distance(sys: SymbolicSystem, x: Point, y: Point) -> Fraction:
    return bowen_distance(sys, x, y, 1)


def bowen_distance(sys: SymbolicSystem, x: Point, y: Point, n: int) -> Fraction:
    """``d_n(x, y) = max_{0 <= i < n} d(sigma^i x, sigma^i y)``, exactly.

    Reads at most ``n + horizon`` coordinates of each point.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    sys.check_point(x)
    sys.check_point(y)
    if sys.metric_kind == ULTRAMETRIC:
        j = first_difference(x, y)
        if j is None:
            return Fraction(0)
        return Fraction(1, 2 ** max(j - n + 1, 0))
    emb = sys.embedding
    best = Fraction(0)
    for l in range(n + x.horizon(y)):
        a, b = x.symbol(l), y.symbol(l)
        if a != b:
            w = Fraction(1) if l < n else Fraction(1, 2 ** (l - n + 1))
            best = max(best, w * abs(emb[a] - emb[b]))
    return best


# -- potentials --------------------------------------------------------------

@dataclass(frozen=True)
class Potential:
    """Observable depending on the first ``depth`` coordinates.

    ``kind='cylinder'``: ``values`` is a table of length ``k**depth`` indexed
    by words in lexicographic order. ``kind='coordinate_affine'``:
    ``values = (a, b)`` and ``phi(x) = a * embed(x_0) + b``.
    """

    kind: str
    values: tuple
    depth: int = 1

    def __post_init__(self):
        if self.kind not in ("cylinder", "coordinate_affine"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        vals = tuple(as_fraction(v) for v in self.values)
        if self.kind == "coordinate_affine":
            if len(vals) != 2:
                raise ValueError("coordinate_affine needs values (a, b)")
            object.__setattr__(self, "depth", 1)
        elif self.depth < 1:
            raise ValueError("cylinder depth must be >= 1")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, c=0) -> "Potential":
        return cls("coordinate_affine", (0, c))

    @classmethod
    def coordinate_affine(cls, a=1, b=0) -> "Potential":
        return cls("coordinate_affine", (a, b))

    @classmethod
    def embed(cls) -> "Potential":
        return cls("coordinate_affine", (1, 0))

    @classmethod
    def cylinder(cls, values, depth: int = 1) -> "Potential":
        return cls("cylinder", tuple(values), depth)

    @property
    def is_constant(self) -> bool:
        if self.kind == "coordinate_affine":
            return self.values[0] == 0
        return len(set(self.values)) == 1

    def plus(self, c) -> "Potential":
        c = as_fraction(c)
        if self.kind == "coordinate_affine":
            return Potential("coordinate_affine", (self.values[0], self.values[1] + c))
        return Potential("cylinder", tuple(v + c for v in self.values), self.depth)

    def scaled(self, t) -> "Potential":
        t = as_fraction(t)
        return Potential(self.kind, tuple(v * t for v in self.values), self.depth)

    def exact_table(self, sys: SymbolicSystem) -> list:
        k = sys.alphabet_size
        if self.kind == "coordinate_affine":
            a, b = self.values
            return [a * v + b for v in sys.embedding]
        if len(self.values) != k ** self.depth:
            raise ValueError(f"cylinder table needs {k ** self.depth} values, got {len(self.values)}")
        return list(self.values)

    def table(self, sys: SymbolicSystem) -> np.ndarray:
        return np.array([float(v) for v in self.exact_table(sys)], dtype=float)

    def evaluate(self, sys: SymbolicSystem, x: Point, exact: bool = False):
        t = self.exact_table(sys)
        v = t[word_index(x.word(0, self.depth), sys.alphabet_size)]
        return v if exact else float(v)

    def sup_norm(self, sys: SymbolicSystem) -> float:
        return float(max(abs(v) for v in self.exact_table(sys)))

    @property
    def ident(self) -> str:
        vals = ",".join(str(v) for v in self.values)
        return f"{self.kind}[{self.depth}]({vals})"


def birkhoff_sum(sys: SymbolicSystem, phi: Potential, x: Point, n: int, exact: bool = False):
    """``S_n phi(x)``; reads the first ``n + depth - 1`` coordinates of ``x``.

    With ``exact=True`` the sum is a ``Fraction`` (additivity then holds
    exactly); otherwise it is the float of the exact sum.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    sys.check_point(x)
    t = phi.exact_table(sys)
    k, r = sys.alphabet_size, phi.depth
    w = x.word(0, n + r - 1)
    s = sum((t[word_index(w[j:j + r], k)] for j in range(n)), Fraction(0))
    return s if exact else float(s)


def word_birkhoff_sum(sys: SymbolicSystem, phi: Potential, word: Sequence[int], terms: int | None = None):
    """Exact Birkhoff sum of the complete terms of a finite word."""
    t = phi.exact_table(sys)
    k, r = sys.alphabet_size, phi.depth
    m = len(word) - r + 1 if terms is None else terms
    return sum((t[word_index(word[j:j + r], k)] for j in range(max(m, 0))), Fraction(0))


def _close_symbols(sys: SymbolicSystem, weight: Fraction, eps: Fraction):
    """Pairs of symbols (a, b) with ``weight * |v_a - v_b| < eps``."""
    emb = sys.embedding
    k = sys.alphabet_size
    return [[weight * abs(emb[a] - emb[b]) < eps for b in range(k)] for a in range(k)]


def variation_bound(sys: SymbolicSystem, phi: Potential, epsilon) -> float:
    """``Var(phi, eps) = sup{|phi(x) - phi(y)| : d(x, y) < eps}``.

    Exact on full shifts; for subshifts this is the (upper) bound obtained by
    ignoring admissibility.
    """
    eps = as_fraction(epsilon)
    t = phi.exact_table(sys)
    if phi.is_constant:
        return 0.0
    k, r = sys.alphabet_size, phi.depth
    if sys.metric_kind == ULTRAMETRIC:
        j = ball_depth(eps)
        if j >= r:
            return 0.0
        best = Fraction(0)
        for head in all_words(k, j):
            vals = [t[word_index(head + rest, k)] for rest in all_words(k, r - j)]
            best = max(best, max(vals) - min(vals))
        return float(best)
    close = [_close_symbols(sys, Fraction(1, 2 ** i), eps) for i in range(r)]
    if r == 1:
        return float(max(abs(t[a] - t[b]) for a in range(k) for b in range(k) if close[0][a][b]))
    words = list(all_words(k, r))
    best = Fraction(0)
    for w in words:
        for u in words:
            if all(close[i][w[i]][u[i]] for i in range(r)):
                best = max(best, abs(t[word_index(w, k)] - t[word_index(u, k)]))
    return float(best)


# -- dynamical balls -----------------------------------------------------------

@dataclass(frozen=True)
class BowenBallSpec:
    center: Point
    n: int
    epsilon: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if as_fraction(self.epsilon) <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class BallCylinder:
    """Cylinder bracket for a dynamical ball.

    ``[center[:inner_depth]]`` is contained in the ball, which is contained
    in ``[word]``. On the ultrametric both agree (``exact`` is True).
    ``whole_space`` marks a ball equal to the whole space.
    """

    word: tuple
    inner_depth: int
    whole_space: bool = False

    @property
    def exact(self) -> bool:
        return self.whole_space or len(self.word) == self.inner_depth

    @property
    def depth_bracket(self) -> tuple:
        return (len(self.word), self.inner_depth)


def grid_weight(l: int, n: int) -> Fraction:
    """Weight of coordinate ``l`` in the Bowen grid metric ``d_n``."""
    return Fraction(1) if l < n else Fraction(1, 2 ** (l - n + 1))


def dynamical_ball_cylinder(sys: SymbolicSystem, spec: BowenBallSpec) -> BallCylinder:
    """Cylinder description of ``B_n(x, eps) = {y : d_n(x, y) < eps}``."""
    x, n, eps = spec.center, spec.n, as_fraction(spec.epsilon)
    sys.check_point(x)
    if eps > sys.diameter:
        return BallCylinder((), 0, whole_space=True)
    if sys.metric_kind == ULTRAMETRIC:
        L = ball_length(n, eps)
        return BallCylinder(x.word(0, L), L)
    # grid: coordinate l is forced iff no other symbol is eps-close at weight
    # w_l; the enclosing cylinder is the initial run of forced coordinates
    emb = sys.embedding
    k = sys.alphabet_size
    outer = 0
    while True:
        w = grid_weight(outer, n)
        a = x.symbol(outer)
        if all(w * abs(emb[a] - emb[b]) >= eps for b in range(k) if b != a):
            outer += 1
        else:
            break
    # every coordinate from `inner` on is unconstrained
    inner = n
    while grid_weight(inner, n) * sys.diameter >= eps:
        inner += 1
    return BallCylinder(x.word(0, outer), inner)


# -- refined grid ladder ------------------------------------------------------------

def refined_grid(epsilon) -> SymbolicSystem:
    """Full grid shift on ``ceil(1/eps)`` symbols with the sup-weighted metric."""
    m = math.ceil(1 / as_fraction(epsilon))
    return SymbolicSystem(max(m, 1), GRID)


@dataclass(frozen=True)
class RefinedGridLadder:
    """Family of grid shifts whose alphabet is refined with the scale.

    ``system_at(eps)`` is the full shift on ``ceil(1/eps)`` equally spaced
    points of ``[0, 1]``; its grid spacing always exceeds ``eps``.
    """

    metric_kind: str = GRID

    def system_at(self, epsilon) -> SymbolicSystem:
        return refined_grid(epsilon)

    @property
    def spec_gap(self):
        return 0

    @property
    def ident(self) -> str:
        return "refined_grid"


def system_ident(sys) -> str:
    if isinstance(sys, RefinedGridLadder):
        return sys.ident
    fw = ";".join("".join(map(str, w)) for w in sys.forbidden_words)
    return f"{sys.metric_kind}:k={sys.alphabet_size}:forbidden={fw}"


# -- restrictions -------------------------------------------------------------------

@dataclass(frozen=True)
class WholeSpace:
    ident: str = "whole"


@dataclass(frozen=True)
class CylinderSet:
    """The points of the shift beginning with ``word``."""

    word: tuple

    def __post_init__(self):
        object.__setattr__(self, "word", tuple(int(a) for a in self.word))

    @property
    def ident(self) -> str:
        return "cylinder:" + "".join(map(str, self.word))


@dataclass(frozen=True)
class FiniteSet:
    """A finite collection of explicit points (e.g. a single orbit point)."""

    points: tuple = field(default_factory=tuple)

    @property
    def ident(self) -> str:
        return f"finite:{len(self.points)}"
