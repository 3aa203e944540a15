"""Gluing orbit segments, and a point factory for Birkhoff level sets.

``glue`` copies each segment for as many symbols as an ``(length, eps)``-ball
fixes and joins the copies with connector words of the declared gap length.
On full shifts the connectors are seeded filler; on shifts of finite type
they come from a search over words of the gap length.

``build_K_alpha_point`` lays out, level by level, blocks whose Birkhoff mean
is within ``delta_k`` of ``alpha``. The certificate stores the layout, so the
envelope on ``|S_m phi/m - alpha|`` can be recomputed at any checkpoint.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np

from .dyncore import (GRID, ModeError, Point, Potential, ball_length, separation_length,
                      variation_bound)
from .levelsets import SpecificationRequired, gibbs_tilt

MAX_TRIES = 4000


class GapTooSmall(ValueError):
    """No connector of the declared gap length joins two pieces."""


class ScheduleInfeasible(ValueError):
    def __init__(self, level, msg):
        super().__init__(f"level {level}: {msg}")
        self.level = level


def _rng(seed, *key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, key)])))


def _require_spec(sys):
    gap = getattr(sys, "spec_gap", None)
    if gap is None:
        raise SpecificationRequired("the system does not declare the specification property")
    return int(gap)


def _connector(sys, left, right, gap, rng):
    """A word ``c`` of length ``gap`` such that ``left + c + right`` is admissible."""
    k = sys.alphabet_size
    if sys.is_full_shift:
        return tuple(int(a) for a in rng.integers(0, k, size=gap))
    F = sys.forbidden_length
    ctx_l = tuple(left[-(F - 1):]) if F > 1 else ()
    ctx_r = tuple(right[:F - 1]) if F > 1 else ()
    order = [int(a) for a in rng.permutation(k)]
    # depth-first over connectors, seeded symbol order, prefix-pruned
    stack = [()]
    while stack:
        c = stack.pop()
        if not sys.admissible(ctx_l + c):
            continue
        if len(c) == gap:
            if sys.admissible(ctx_l + c + ctx_r) and (right or sys.extends_forever(ctx_l + c)):
                return c
            continue
        for a in reversed(order):
            stack.append(c + (a,))
    raise GapTooSmall(f"no connector of length {gap} joins ...{ctx_l} and {ctx_r}...; "
                      "the declared gap is too small")


def _assemble(sys, pieces, gap, seed):
    """Concatenate ``pieces`` with connectors; return the word and piece start times."""
    out: list[int] = []
    starts = []
    for j, w in enumerate(pieces):
        w = tuple(int(a) for a in w)
        if j > 0:
            out.extend(_connector(sys, tuple(out), w, gap, _rng(seed, 1, j)))
        elif not sys.admissible(w):
            raise GapTooSmall(f"piece {w} is not admissible")
        starts.append(len(out))
        out.extend(w)
    return tuple(out), starts


def _complete(sys, word):
    if word:
        tail = (word[-1],)
        x = Point(word, tail)
        try:
            sys.check_point(x)
            return x
        except ValueError:
            pass
    return sys.complete(word)


# -- gluing ------------------------------------------------------------------------------------

@dataclass(frozen=True)
class GluingRequest:
    segments: tuple  # of (Point, length)
    gap: int
    epsilon: float

    def copy_length(self, length):
        return ball_length(length, self.epsilon)


def segment_starts(sys, req: GluingRequest, seed: int = 0) -> list:
    return _glue(sys, req, seed)[1]


def _glue(sys, req, seed):
    m = _require_spec(sys)
    if req.gap < m:
        raise ValueError(f"gap {req.gap} is below the declared gap {m}")
    pieces = [x.word(0, req.copy_length(L)) for x, L in req.segments]
    word, starts = _assemble(sys, pieces, req.gap, seed)
    return _complete(sys, word), starts


def glue(sys, req: GluingRequest, seed: int = 0) -> Point:
    """A point whose orbit shadows every segment within ``eps`` for its length."""
    return _glue(sys, req, seed)[0]


# -- level-set point factory -------------------------------------------------------------------

@dataclass(frozen=True)
class GluingSchedule:
    epsilons: tuple
    deltas: tuple
    block_lengths: tuple
    block_counts: tuple

    def __post_init__(self):
        K = len(self.epsilons)
        if not (len(self.deltas) == len(self.block_lengths) == len(self.block_counts) == K) or K == 0:
            raise ValueError("schedule fields must have equal nonzero length")
        if any(b >= a for a, b in zip(self.epsilons, self.epsilons[1:])):
            raise ValueError("epsilons must decrease strictly")
        if any(b > a for a, b in zip(self.deltas, self.deltas[1:])) or min(self.deltas) < 0:
            raise ValueError("deltas must be nonnegative and nonincreasing")
        if min(self.block_lengths) < 1 or min(self.block_counts) < 1:
            raise ValueError("block lengths and counts must be positive")

    @property
    def depth(self) -> int:
        return len(self.epsilons)

    @classmethod
    def geometric(cls, levels=3, epsilon=0.5, delta=0.1, block_length=16, block_count=4, growth=2):
        return cls(tuple(epsilon / 2 ** k for k in range(levels)), tuple(delta / 2 ** k for k in range(levels)),
                   tuple(block_length * growth ** k for k in range(levels)),
                   tuple(block_count * growth ** k for k in range(levels)))


@dataclass
class LevelRecord:
    level: int
    t: int
    epsilon: float
    delta: float
    block_length: int
    block_count: int
    gap: int
    deviation: float
    bound: float
    variation: float


@dataclass
class Certificate:
    alpha: float
    seed: int
    levels: list
    layout: list  # (start, length, delta) with delta None for unconstrained pieces
    per_symbol: float  # max |phi(a) - alpha|
    length: int = 0
    cylinders: list = field(default_factory=list)

    def envelope(self, m: int) -> float:
        """Upper bound on ``|S_m phi/m - alpha|`` implied by the layout."""
        if m < 1:
            raise ValueError("m must be >= 1")
        total = 0.0
        covered = 0
        for s, L, d in self.layout:
            if s >= m:
                break
            used = min(L, m - s)
            covered += used
            total += used * d if (d is not None and used == L) else used * self.per_symbol
        total += (m - covered) * self.per_symbol  # connectors
        return total / m + 1e-9

    @property
    def times(self):
        return [r.t for r in self.levels]

    def checkpoints(self):
        return sorted({s + L for s, L, _ in self.layout})

    def as_dict(self):
        return {"alpha": self.alpha, "seed": self.seed, "length": self.length,
                "levels": [asdict(r) for r in self.levels],
                "layout": [list(x) for x in self.layout], "per_symbol": self.per_symbol}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=1)


def _blocks(sys, phi, alpha, n, count, delta, rng, level):
    tab = phi.table(sys)
    sol = gibbs_tilt(tab, np.zeros_like(tab), alpha)
    if not sol.feasible:
        raise ScheduleInfeasible(level, f"alpha={alpha} outside [{tab.min()}, {tab.max()}]")
    p = np.asarray(sol.p)
    cum = np.cumsum(p)
    k = sys.alphabet_size
    found = []
    tries = 0
    while len(found) < count:
        if tries >= MAX_TRIES * count:
            raise ScheduleInfeasible(level, f"no words of length {n} with mean within {delta} of {alpha}")
        batch = 256
        tries += batch
        if sys.is_full_shift:
            W = np.minimum(np.searchsorted(cum, rng.random((batch, n)), side="right"), k - 1)
        else:
            W = _walks(sys, p, n, batch, rng)
        means = tab[W].mean(axis=1)
        for row in W[np.abs(means - alpha) <= delta + 1e-12]:
            found.append(tuple(int(a) for a in row))
            if len(found) == count:
                break
    return found


def _context_automaton(sys):
    """States are the last ``min(len, F-1)`` symbols of extendable words."""
    F = sys.forbidden_length
    r = max(F - 1, 0)
    k = sys.alphabet_size
    index = {(): 0}
    states = [()]
    nxt = []
    i = 0
    while i < len(states):
        s = states[i]
        row = []
        for a in range(k):
            w = s + (a,)
            if sys.extends_forever(w):
                t = w[len(w) - r:] if r else ()
                if t not in index:
                    index[t] = len(states)
                    states.append(t)
                row.append(index[t])
            else:
                row.append(-1)
        nxt.append(row)
        i += 1
    return np.array(nxt, dtype=np.int64)


def _walks(sys, p, n, size, rng):
    """``size`` admissible words drawn symbol by symbol from ``p`` restricted to legal moves."""
    nxt = _context_automaton(sys)
    legal = nxt >= 0
    w = np.where(legal, p[None, :], 0.0)
    dead = w.sum(axis=1) == 0
    w[dead] = legal[dead]
    cum = np.cumsum(w / w.sum(axis=1, keepdims=True), axis=1)
    state = np.zeros(size, dtype=np.int64)
    out = np.empty((size, n), dtype=np.int64)
    u = rng.random((size, n))
    k = sys.alphabet_size
    for t in range(n):
        a = np.minimum((u[:, t:t + 1] >= cum[state]).sum(axis=1), k - 1)
        out[:, t] = a
        state = nxt[state, a]
    return out


def build_K_alpha_point(sys, phi: Potential, alpha, schedule: GluingSchedule, seed: int = 0, head=()):
    """A finite prefix of a point of ``K_alpha`` plus its certificate.

    ``head`` is an optional leading word, joined to the blocks like any
    other piece. Returns ``(Point, Certificate)``.
    """
    if phi.depth != 1:
        raise ModeError("the factory needs a depth-1 phi")
    gap = _require_spec(sys)
    alpha = float(alpha)
    tab = phi.table(sys)
    per_symbol = float(np.max(np.abs(tab - alpha)))
    pieces, tags = [], []
    if head:
        pieces.append(tuple(head))
        tags.append((None, -1))
    for k in range(schedule.depth):
        blocks = _blocks(sys, phi, alpha, schedule.block_lengths[k], schedule.block_counts[k],
                         schedule.deltas[k], _rng(seed, 0, k), k + 1)
        pieces.extend(blocks)
        tags.extend([(schedule.deltas[k], k)] * len(blocks))
    word, starts = _assemble(sys, pieces, gap, seed)
    layout = [(s, len(w), d) for s, w, (d, _) in zip(starts, pieces, tags)]
    cert = Certificate(alpha, int(seed), [], layout, per_symbol, len(word))
    partial = np.cumsum(tab[np.asarray(word, dtype=np.int64)]) if word else np.zeros(0)
    for k in range(schedule.depth):
        last = max(i for i, (_, lv) in enumerate(tags) if lv == k)
        t = starts[last] + len(pieces[last])
        dev = abs(float(partial[t - 1]) / t - alpha)
        cert.levels.append(LevelRecord(k + 1, t, float(schedule.epsilons[k]), float(schedule.deltas[k]),
                                       schedule.block_lengths[k], schedule.block_counts[k], gap, dev,
                                       cert.envelope(t), variation_bound(sys, phi, schedule.epsilons[k])))
        cert.cylinders.append(t)
    return _complete(sys, word), cert


@dataclass
class MembershipReport:
    passed: bool
    checkpoints: list
    deviations: list
    envelope: list
    first_failure: int | None

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def verify_membership_trend(sys, phi: Potential, alpha, point, checkpoints, certificate: Certificate | None = None):
    """Recompute ``|S_m phi/m - alpha|`` at each checkpoint and compare with the envelope.

    Without a certificate the envelope is ``osc(phi)/m``, the bound met by
    periodic orbits whose period average is ``alpha``.
    """
    from .dyncore import birkhoff_sum
    x = point if isinstance(point, Point) else Point(tuple(point), (0,))
    tab = phi.table(sys)
    osc = float(tab.max() - tab.min())
    devs, env = [], []
    first = None
    for m in checkpoints:
        d = abs(float(birkhoff_sum(sys, phi, x, m, exact=True)) / m - float(alpha))
        e = certificate.envelope(m) if certificate is not None else osc / m + 1e-12
        devs.append(d)
        env.append(e)
        if first is None and d > e:
            first = m
    return MembershipReport(first is None, list(checkpoints), devs, env, first)


# -- separated families ------------------------------------------------------------------------

def separated_heads(sys, n: int, epsilon, size: int, seed: int = 0) -> list:
    """``size`` distinct admissible words whose completions are pairwise ``(n, eps)``-separated."""
    if sys.metric_kind == GRID:
        if not sys.spacing > epsilon:
            raise ModeError("grid heads need symbol spacing above eps")
        L = n
    else:
        L = separation_length(n, epsilon)
        if L == 0:
            raise ValueError("no two points are separated at this scale")
    rng = _rng(seed, 2)
    words, seen = [], set()
    for _ in range(MAX_TRIES * size):
        w = tuple(int(a) for a in rng.integers(0, sys.alphabet_size, size=L))
        if w not in seen and sys.extends_forever(w):
            seen.add(w)
            words.append(w)
            if len(words) == size:
                return words
    total = sum(1 for w in product(range(sys.alphabet_size), repeat=L) if sys.extends_forever(w))
    raise ValueError(f"only {min(total, len(words))} separated words of length {L} exist; {size} requested")
