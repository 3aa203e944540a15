"""Cover sums by dynamical balls, the outer measure ``m(Z, psi, s, N, eps)``,
its critical exponent in ``s`` and the Bowen-type mean dimension.

The infimum over all covers is bracketed. From above by uniform-length
cylinder covers (the minimum over a window of lengths ``n >= N``), and from
below by the mass distribution principle applied to a Gibbs measure of the
scaled potential: if ``mu(B) <= C exp(-s n + sup_B S_n psi_eps)`` for every
ball with ``n >= N``, every such cover has sum at least ``mu(Z)/C``.

Whether ``m`` tends to 0 or to infinity as ``N`` grows is decided by the sign
of the slope in ``N`` of the log bracket over the second half of the
``N`` schedule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .counting import (_tail_coordinates, head_resolved, log_weight_sum, restriction_parts,
                       upper_mdim, words_meeting)
from .dyncore import (GRID, ULTRAMETRIC, BowenBallSpec, CylinderSet, FiniteSet, ModeError,
                      WholeSpace, as_fraction, ball_depth, ball_length, bowen_distance,
                      dynamical_ball_cylinder, word_index)
from .estimates import LINEAR_FIT, MdimEstimate, linear_slope, log_scale, make_estimate, ordered_map

ZERO = "zero"
INFINITE = "infinite"


class UncoveredError(ValueError):
    """A cover candidate misses part of the restriction."""

    def __init__(self, word):
        super().__init__(f"cylinder {tuple(word)} is not covered")
        self.word = tuple(word)


@dataclass(frozen=True)
class CoverCandidate:
    balls: tuple
    covered: str = "whole"

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))

    @property
    def min_length(self) -> int:
        return min(b.n for b in self.balls)


# -- explicit covers ------------------------------------------------------------------

def _meets(sys, prefix, w):
    """Does ``[w]`` meet the cylinder restriction with this prefix?"""
    m = min(len(w), len(prefix))
    if tuple(w[:m]) != tuple(prefix[:m]):
        return False
    longer = tuple(w) if len(w) >= len(prefix) else tuple(prefix)
    return sys.extends_forever(longer)


def validate_cover(sys, Z, cover: CoverCandidate, N: int | None = None):
    """Raise unless the balls of ``cover`` contain ``Z``.

    Finite sets are checked point by point with the Bowen distance. Cylinder
    restrictions are checked symbolically on sub-cylinders; on the grid the
    inner cylinder of each ball is used, which is sufficient but not always
    necessary.
    """
    if not cover.balls:
        raise UncoveredError(())
    if N is not None and cover.min_length < N:
        raise ValueError(f"cover uses a ball of length {cover.min_length} < N = {N}")
    if isinstance(Z, FiniteSet):
        for x in Z.points:
            if not any(bowen_distance(sys, x, b.center, b.n) < as_fraction(b.epsilon) for b in cover.balls):
                raise UncoveredError(x.word(0, 8))
        return
    if not (Z is None or isinstance(Z, (WholeSpace, CylinderSet))):
        raise ModeError("explicit covers are validated on cylinder restrictions only")
    prefix = Z.word if isinstance(Z, CylinderSet) else ()
    words = set()
    for b in cover.balls:
        cyl = dynamical_ball_cylinder(sys, b)
        if cyl.whole_space:
            return
        words.add(b.center.word(0, cyl.inner_depth))
    depth = max(len(w) for w in words)
    k = sys.alphabet_size

    def rec(w):
        if any(w[:i] in words for i in range(len(w) + 1)):
            return
        if len(w) >= depth:
            raise UncoveredError(w)
        for a in range(k):
            v = w + (a,)
            if _meets(sys, prefix, v):
                rec(v)

    rec(())


def _ball_sup(sys, psi, ball: BowenBallSpec) -> float:
    """``|log eps| sup_B S_n psi`` over the ball."""
    if psi is None:
        return 0.0
    eps = as_fraction(ball.epsilon)
    s = log_scale(eps)
    cyl = dynamical_ball_cylinder(sys, ball)
    if sys.metric_kind == ULTRAMETRIC:
        return log_weight_sum(sys, CylinderSet(cyl.word), psi, ball.n, eps, "cover")[0]
    if psi.depth != 1:
        raise ModeError("grid cover sums need a depth-1 potential")
    t = psi.exact_table(sys)
    emb = sys.embedding
    total = Fraction(0)
    for l in range(ball.n):
        a = ball.center.symbol(l)
        total += max(t[b] for b in range(sys.alphabet_size) if abs(emb[a] - emb[b]) < eps)
    return s * float(total)


def cover_sum(sys, Z, psi, cover: CoverCandidate, s, epsilon) -> float:
    """``log sum_i exp(-s n_i + |log eps| sup_{B_i} S_{n_i} psi)`` for a validated cover."""
    eps = as_fraction(epsilon)
    if any(as_fraction(b.epsilon) != eps for b in cover.balls):
        raise ValueError("all balls of a cover share the radius eps")
    validate_cover(sys, Z, cover)
    vals = np.array([-float(s) * b.n + _ball_sup(sys, psi, b) for b in cover.balls])
    m = vals.max()
    return float(m + np.log(np.sum(np.exp(vals - m))))


def uniform_cover(sys, Z, n: int, epsilon, max_balls: int = 100_000) -> CoverCandidate:
    """One ball of length ``n`` per cylinder of the ball length that meets ``Z``."""
    eps = as_fraction(epsilon)
    if sys.metric_kind != ULTRAMETRIC:
        raise ModeError("explicit uniform covers are built on the ultrametric")
    L = ball_length(n, eps)
    prefix, _ = restriction_parts(sys, Z)
    words = words_meeting(sys, Z, L) if L else [()]
    if len(words) > max_balls:
        raise ValueError(f"uniform cover has {len(words)} balls; raise max_balls")
    balls = [BowenBallSpec(sys.complete(w + tuple(prefix[len(w):])), n, float(epsilon)) for w in words]
    return CoverCandidate(tuple(balls), getattr(Z, "ident", "whole") if Z is not None else "whole")


# -- mass distribution lower bound -------------------------------------------------------

@dataclass(frozen=True)
class MassBound:
    """``log m(Z, psi, s, N, eps) >= N (rate - s) + offset`` for ``s < rate`` and ``N >= n_min``."""

    rate: float
    offset: float
    n_min: int
    available: bool = True

    def at(self, s, N) -> float:
        if not self.available or N < self.n_min or not s < self.rate:
            return -math.inf
        return N * (self.rate - float(s)) + self.offset


UNAVAILABLE = MassBound(-math.inf, 0.0, 0, False)


def _perron(M):
    w, V = np.linalg.eig(M)
    i = int(np.argmax(w.real))
    lam = float(w[i].real)
    r = np.abs(V[:, i].real)
    wl, U = np.linalg.eig(M.T)
    j = int(np.argmax(wl.real))
    l = np.abs(U[:, j].real)
    l = l / float(l @ r)
    return lam, l, r


def mass_distribution_bound(sys, Z, psi, epsilon) -> MassBound:
    """Lower bound for the outer measure from a Gibbs measure of ``|log eps| psi``."""
    eps = as_fraction(epsilon)
    if ball_depth(eps) == 0:
        return UNAVAILABLE
    if isinstance(Z, FiniteSet):
        t = psi.table(sys) if psi is not None else np.zeros(1)
        return MassBound(float(t.min()) * log_scale(eps), 0.0, 1)
    if not (Z is None or isinstance(Z, (WholeSpace, CylinderSet))):
        return UNAVAILABLE
    prefix = Z.word if isinstance(Z, CylinderSet) else ()
    k = sys.alphabet_size
    scale = log_scale(eps)
    if sys.metric_kind == GRID:
        return _grid_mass_bound(sys, prefix, psi, eps)
    r = psi.depth if psi is not None else 1
    tab = psi.table(sys) * scale if psi is not None else np.zeros(k)
    F = sys.forbidden_length
    R = max(r - 1, F - 1, 0)
    S = k ** R
    states = list(product(range(k), repeat=R))
    M = np.zeros((S, S))
    for si, ctx in enumerate(states):
        for a in range(k):
            full = ctx + (a,)
            if F and not sys.admissible(full[-F:]):
                continue
            ti = word_index(full[1:], k) if R else 0
            M[si, ti] += math.exp(tab[word_index(full[len(full) - r:], k)])
    lam, l, rv = _perron(M)
    if lam <= 0:
        return UNAVAILABLE
    loglam = math.log(lam)
    D = ball_length(1, eps) - 1             # ball length is n + D
    lo, hi = float(tab.min()), float(tab.max())
    gap = D - r + 1                         # complete in-word terms minus n
    E = max(gap, 0) * hi - max(-gap, 0) * lo + (R - r + 1) * (-lo)
    C = math.log(float(l.max()) * float(rv.max())) - (D - R) * loglam + E
    offset = -C
    if prefix:
        logmu = _markov_cylinder_log_mass(sys, prefix, tab, r, R, lam, l, rv)
        if not np.isfinite(logmu):
            return UNAVAILABLE
        offset += logmu
    return MassBound(loglam, offset, max(R, len(prefix) - D, 1))


def _markov_cylinder_log_mass(sys, u, tab, r, R, lam, l, rv):
    k = sys.alphabet_size
    L = max(len(u), R)
    total = 0.0
    for ext in product(range(k), repeat=L - len(u)):
        w = tuple(u) + ext
        if not sys.admissible(w):
            continue
        s0 = word_index(w[:R], k) if R else 0
        se = word_index(w[L - R:], k) if R else 0
        terms = sum(tab[word_index(w[j:j + r], k)] for j in range(R - r + 1, L - r + 1))
        total += l[s0] * rv[se] * math.exp(terms) / lam ** (L - R)
    return math.log(total) if total > 0 else -math.inf


def _grid_mass_bound(sys, prefix, psi, eps):
    if not sys.is_full_shift or not head_resolved(sys, eps):
        return UNAVAILABLE
    if psi is not None and psi.depth != 1:
        return UNAVAILABLE
    k = sys.alphabet_size
    tab = psi.table(sys) * log_scale(eps) if psi is not None else np.zeros(k)
    logZ1 = float(np.logaddexp.reduce(tab))
    p = np.exp(tab - logZ1)
    emb = sys.embedding
    tail = 0.0
    for l, w in _tail_coordinates(sys, 1, eps):
        best = max(sum(p[b] for b in range(k) if w * abs(emb[a] - emb[b]) < eps) for a in range(k))
        tail += math.log(best)
    offset = -tail + sum(float(math.log(p[a])) for a in prefix)
    return MassBound(logZ1, offset, max(len(prefix), 1))


# -- outer measure brackets -----------------------------------------------------------------

def uniform_cover_logs(sys, Z, psi, epsilon, lengths) -> dict:
    """``{n: log of the s = 0 uniform cover sum}`` for each ball length ``n``."""
    return {int(n): log_weight_sum(sys, Z, psi, int(n), epsilon, "cover")[0] for n in lengths}


@dataclass(frozen=True)
class OuterMeasureBracket:
    s: float
    N: int
    epsilon: float
    log_lower: float
    log_upper: float
    argmin_n: int
    window: int
    diagnostic: str = ""


def outer_measure_m(sys, Z, psi, s, N: int, epsilon, window: int = 8,
                    cover_logs: dict | None = None, mass: MassBound | None = None) -> OuterMeasureBracket:
    """Bracket ``[lower, upper]`` for ``log m(Z, psi, s, N, eps)``.

    The upper bound is the smallest uniform-cover sum over lengths
    ``N..N+window``; the lower bound comes from the mass distribution
    principle (``-inf`` when unavailable).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    lengths = range(N, N + window + 1)
    if cover_logs is None or any(n not in cover_logs for n in lengths):
        cover_logs = uniform_cover_logs(sys, Z, psi, epsilon, lengths)
    terms = [(cover_logs[n] - float(s) * n, n) for n in lengths]
    upper, arg = min(terms)
    if mass is None:
        mass = mass_distribution_bound(sys, Z, psi, epsilon)
    lower = min(mass.at(s, N), upper)
    diag = ""
    if arg == N + window and window > 0 and terms[-1][0] < terms[-2][0]:
        diag = "minimum at the window edge; widen the window for a tighter upper bound"
    return OuterMeasureBracket(float(s), N, float(epsilon), lower, upper, arg, window, diag)


# -- critical exponent ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalExponent:
    s_star: float
    bracket: tuple
    epsilon: float
    N_used: tuple
    certified: bool = True
    flags: tuple = ()


def classify(brackets) -> tuple:
    """``(ZERO | INFINITE, certified)`` from brackets along an increasing N schedule."""
    half = brackets[len(brackets) // 2:] if len(brackets) >= 4 else brackets
    Ns = [b.N for b in half]
    up = linear_slope(Ns, [b.log_upper for b in half])
    lows = [b.log_lower for b in half]
    low = linear_slope(Ns, lows) if all(np.isfinite(lows)) else -math.inf
    if up < 0 and not low > 0:
        return ZERO, True
    if low > 0 and not up < 0:
        return INFINITE, True
    if up < 0:
        return ZERO, False
    return INFINITE, False


def critical_exponent(sys, Z, psi, epsilon, N_schedule, tol: float | None = None,
                      window: int = 8, cover_logs: dict | None = None) -> CriticalExponent:
    """Bisection for the jump point of ``s -> m(Z, psi, s, eps)`` from infinity to 0."""
    eps = as_fraction(epsilon)
    Ns = sorted(int(n) for n in N_schedule)
    if len(Ns) < 2:
        raise ValueError("the N schedule needs at least two values")
    tol = 1e-3 * log_scale(eps) if tol is None else tol
    lengths = range(Ns[0], Ns[-1] + window + 1)
    if cover_logs is None:
        cover_logs = uniform_cover_logs(sys, Z, psi, eps, lengths)
    mass = mass_distribution_bound(sys, Z, psi, eps)
    flags = []
    certified = True

    def side(s):
        nonlocal certified
        br = [outer_measure_m(sys, Z, psi, s, N, eps, window, cover_logs, mass) for N in Ns]
        cls, cert = classify(br)
        certified = certified and cert
        return cls

    tab = psi.table(sys) * log_scale(eps) if psi is not None else np.zeros(1)
    lo = float(tab.min()) - 1.0
    hi = math.log(sys.alphabet_size) + float(tab.max()) + 1.0
    for _ in range(20):
        if side(lo) == INFINITE:
            break
        flags.append("lower end widened")
        lo -= 2 * (hi - lo)
    for _ in range(20):
        if side(hi) == ZERO:
            break
        flags.append("upper end widened")
        hi += 2 * (hi - lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if side(mid) == INFINITE:
            lo = mid
        else:
            hi = mid
    if not certified:
        flags.append("trend not certified by a rigorous bound")
    return CriticalExponent(0.5 * (lo + hi), (lo, hi), float(epsilon), tuple(Ns), certified, tuple(flags))


# -- Bowen-type mean dimension ---------------------------------------------------------------------

def bowen_mdim(sys, Z, psi, epsilon_ladder, N_schedule, n_ladder=None, extrapolation: str = LINEAR_FIT,
               tolerance: float = 0.05, window: int = 8, workers: int = 1) -> MdimEstimate:
    """Critical exponent per rung divided by ``|log eps|``, extrapolated in ``1/|log eps|``.

    With ``n_ladder`` the capacity-type value on the same ladder is computed
    too and the inequality (Bowen-type <= capacity-type) is recorded, along
    with equality when ``Z`` is the whole space.
    """
    eps = [float(e) for e in epsilon_ladder]
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon ladder must be strictly decreasing")

    def rung(e):
        return critical_exponent(sys.system_at(e), Z, psi, e, N_schedule, window=window)

    crits = ordered_map(rung, eps, workers)
    rates = [c.s_star / log_scale(e) for c, e in zip(crits, eps)]
    est = make_estimate(eps, rates, extrapolation)
    est.notes = {"brackets": [list(c.bracket) for c in crits],
                 "certified": all(c.certified for c in crits),
                 "flags": sorted({f for c in crits for f in c.flags})}
    if n_ladder is not None:
        cap = upper_mdim(sys, Z, psi, eps, n_ladder, extrapolation, workers=workers)
        est.alternate = cap.value
        est.notes["capacity"] = cap.value
        band = tolerance + est.uncertainty + cap.uncertainty
        est.notes["below_capacity"] = bool(est.value <= cap.value + band)
        if Z is None or isinstance(Z, WholeSpace):
            est.notes["equals_capacity"] = bool(abs(est.value - cap.value) <= band)
    return est
