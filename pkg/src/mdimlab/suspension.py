"""Suspension flows over symbolic bases.

Points of ``X_rho`` are pairs ``(x, s)`` with ``0 <= s < rho(x)``; the flow
raises the height at unit speed and ``(x, rho(x))`` is identified with
``(f(x), 0)``. Roofs with rational values keep every height an exact
``Fraction``, so return times and flow-ball membership are exact.

Flow potentials are polynomials in the height with cylinder coefficients,
``Phi(x, t) = sum_j c_j(x) t**j``; their fiber integrals are again cylinder
potentials on the base.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from itertools import product

import numpy as np

from .counting import upper_mdim
from .dyncore import (ULTRAMETRIC, ModeError, Point, Potential, SymbolicSystem, as_fraction,
                      bowen_distance, distance, word_index)
from .estimates import LINEAR_FIT, MdimEstimate, log_scale, make_estimate
from .levelsets import gibbs_tilt, level_mdim
from .measures import MeasureModel, SequenceFamily, H_of_mu


# -- roofs and points ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RoofFunction:
    """A strictly positive cylinder (or coordinate-affine) roof."""

    rho: Potential
    K1: float | None = None

    def values(self, sys) -> list:
        vals = self.rho.exact_table(sys)
        if min(vals) <= 0:
            raise ValueError("the roof must be strictly positive")
        return vals

    def inf(self, sys) -> Fraction:
        return min(self.values(sys))

    def sup(self, sys) -> Fraction:
        return max(self.values(sys))

    def at(self, sys, x: Point) -> Fraction:
        return self.values(sys)[word_index(x.word(0, self.rho.depth), sys.alphabet_size)]

    def regularity_constant(self, sys) -> float:
        """``K1`` with ``|S_n rho(x) - S_n rho(y)| <= K1 d(f^n x, f^n y)`` for ``y`` in ``B_{n+1}(x, eps)``.

        On the ultrametric ``y`` agrees with ``x`` on the first ``n+1`` symbols,
        so only the last ``r-2`` terms of depth-``r`` roofs can differ.
        """
        if self.K1 is not None:
            return float(self.K1)
        if sys.metric_kind != ULTRAMETRIC and self.rho.depth > 1:
            raise ModeError("regularity constants are computed on the ultrametric")
        vals = self.values(sys)
        osc = float(max(vals) - min(vals))
        r = self.rho.depth
        return max(((r - 2 - j) * osc * 2 ** (j + 1) for j in range(r - 2)), default=0.0)

    def is_constant(self, sys) -> bool:
        return len(set(self.values(sys))) == 1


@dataclass(frozen=True)
class SuspensionPoint:
    base: Point
    height: Fraction

    def __post_init__(self):
        object.__setattr__(self, "height", as_fraction(self.height))


@dataclass(frozen=True)
class Suspension:
    sys: SymbolicSystem
    roof: RoofFunction

    @cached_property
    def _table(self):
        return self.roof.values(self.sys)

    def rho(self, x: Point) -> Fraction:
        return self._table[word_index(x.word(0, self.roof.rho.depth), self.sys.alphabet_size)]

    def point(self, base: Point, height=0) -> SuspensionPoint:
        p = SuspensionPoint(base, height)
        if p.height < 0 or p.height >= self.rho(base):
            raise ValueError(f"height {p.height} outside [0, rho(x)) = [0, {self.rho(base)})")
        return p

    def normalize(self, x: Point, h) -> SuspensionPoint:
        h = as_fraction(h)
        if h < 0:
            raise ValueError("negative heights need a preimage; the base is one-sided")
        r = self.rho(x)
        while h >= r:
            h -= r
            x = x.shift(1)
            r = self.rho(x)
        return SuspensionPoint(x, h)


def flow_step(susp: Suspension, p: SuspensionPoint, t) -> SuspensionPoint:
    """``g_t(x, s)`` for ``t >= 0``, normalised to ``0 <= s < rho(x)``."""
    t = as_fraction(t)
    if t < 0:
        raise ValueError("the flow only runs forward over a one-sided base")
    return susp.normalize(p.base, p.height + t)


def roof_sum(susp: Suspension, x: Point, n: int) -> Fraction:
    return sum((susp.rho(x.shift(i)) for i in range(n)), Fraction(0))


def return_count(susp: Suspension, x: Point, T) -> int:
    """The ``n`` with ``S_n rho(x) <= T < S_{n+1} rho(x)``."""
    T = as_fraction(T)
    n, acc = 0, Fraction(0)
    while acc + susp.rho(x.shift(n)) <= T:
        acc += susp.rho(x.shift(n))
        n += 1
    return n


# -- flow potentials ----------------------------------------------------------------------

@dataclass(frozen=True)
class FlowPotential:
    """``Phi(x, t) = sum_j coefficients[j](x) * t**j``."""

    coefficients: tuple

    @classmethod
    def base(cls, phi: Potential) -> "FlowPotential":
        return cls((phi,))

    @classmethod
    def constant(cls, a) -> "FlowPotential":
        return cls((Potential.constant(a),))

    @classmethod
    def height(cls) -> "FlowPotential":
        return cls((Potential.constant(0), Potential.constant(1)))

    def evaluate(self, sys, p: SuspensionPoint):
        return sum((c.evaluate(sys, p.base, exact=True) * p.height ** j for j, c in enumerate(self.coefficients)),
                   Fraction(0))


def associated_potential(susp: Suspension, Phi: FlowPotential) -> Potential:
    """``phi(x) = int_0^{rho(x)} Phi(x, t) dt`` as an exact cylinder potential."""
    sys = susp.sys
    k = sys.alphabet_size
    parts = [susp.roof.rho] + list(Phi.coefficients)
    D = max(p.depth for p in parts)
    tabs = [p.exact_table(sys) for p in parts]
    vals = []
    for w in product(range(k), repeat=D):
        r = tabs[0][word_index(w[:parts[0].depth], k)]
        v = Fraction(0)
        for j, c in enumerate(Phi.coefficients):
            v += tabs[j + 1][word_index(w[:c.depth], k)] * r ** (j + 1) / (j + 1)
        vals.append(v)
    return Potential.cylinder(vals, D)


def induced_measure_integral(mu: MeasureModel, susp: Suspension, Phi: FlowPotential) -> float:
    """``int Phi d mu_rho = int phi d mu / int rho d mu``."""
    phi = associated_potential(susp, Phi)
    return mu.integral(susp.sys, phi) / mu.integral(susp.sys, susp.roof.rho)


def abramov_entropy(mu: MeasureModel, susp: Suspension) -> float:
    """``h(mu_rho) = h(mu) / int rho d mu``."""
    return mu.entropy_rate() / mu.integral(susp.sys, susp.roof.rho)


# -- flow balls -----------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowBall:
    center: SuspensionPoint
    T: Fraction
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "T", as_fraction(self.T))
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))

    def K(self, susp: Suspension) -> Fraction:
        return 4 * susp.roof.sup(susp.sys) / susp.roof.inf(susp.sys)

    def n(self, susp: Suspension) -> int:
        return return_count(susp, self.center.base, self.T)

    def scale_ok(self, susp: Suspension) -> bool:
        return self.K(susp) * self.epsilon < susp.roof.inf(susp.sys) and self.center.height < self.epsilon

    def contains(self, susp: Suspension, q: SuspensionPoint) -> bool:
        return in_flow_ball(susp, self, q)

    def product_contains(self, susp: Suspension, q: SuspensionPoint) -> bool:
        """``q`` in ``B_n(x, K eps) x (-K eps, K eps)``, with a point near the top of its
        fiber read as a negative height over the next base point."""
        x = self.center.base
        Ke = self.K(susp) * self.epsilon
        n = self.n(susp)
        reps = [(q.base, q.height), (q.base.shift(1), q.height - susp.rho(q.base))]
        return any(abs(h) < Ke and bowen_distance(susp.sys, x, y, max(n, 1)) < Ke for y, h in reps)


class _Lin:
    """``a * t + b`` with exact coefficients."""

    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = a if type(a) is Fraction else Fraction(a)
        self.b = b if type(b) is Fraction else Fraction(b)

    def __add__(self, o):
        o = o if isinstance(o, _Lin) else _Lin(0, o)
        return _Lin(self.a + o.a, self.b + o.b)

    def __sub__(self, o):
        o = o if isinstance(o, _Lin) else _Lin(0, o)
        return _Lin(self.a - o.a, self.b - o.b)

    def scale(self, c):
        return _Lin(self.a * c, self.b * c)


def _solve(constraints, lo, hi):
    """The set of ``t`` in ``[lo, hi]`` where every ``(f, strict)`` has ``f(t) < 0`` (or ``<= 0``).

    Returns ``(l, l_open, r, r_open)`` or None.
    """
    l, lo_open, r, r_open = Fraction(lo), False, Fraction(hi), False
    for f, strict in constraints:
        if f.a == 0:
            if f.b > 0 or (strict and f.b == 0):
                return None
            continue
        root = -f.b / f.a
        if f.a > 0:  # t < root
            if root < r or (root == r and strict):
                r_open = strict if root < r else (r_open or strict)
                r = root
        else:  # t > root
            if root > l or (root == l and strict):
                lo_open = strict if root > l else (lo_open or strict)
                l = root
    if l > r or (l == r and (lo_open or r_open)):
        return None
    return l, lo_open, r, r_open


def _covers(intervals, lo, hi, hi_closed):
    """Whether the union of intervals covers ``[lo, hi]`` (``[lo, hi)`` if not ``hi_closed``)."""
    cur, need_cur = Fraction(lo), True  # [lo, cur) is covered; cur itself too unless need_cur
    progress = True
    while progress:
        progress = False
        for l, l_open, r, r_open in intervals:
            reaches = l < cur or (l == cur and (not l_open or not need_cur))
            if not reaches:
                continue
            if r > cur and (need_cur is False or l < cur or not l_open):
                cur, need_cur = r, r_open
                progress = True
            elif r == cur and need_cur and not r_open and not (l == cur and l_open):
                need_cur = False
                progress = True
    if hi_closed:
        return cur > hi or (cur == hi and not need_cur)
    return cur >= hi


def in_flow_ball(susp: Suspension, ball: FlowBall, q: SuspensionPoint) -> bool:
    """Exact membership of ``q`` in ``B_T((x, s), eps)``.

    At each time ``q``'s orbit must lie in a horizontal ball centred on the
    centre orbit within flow distance ``eps``: in the current fiber, the
    next one, or (after the first return) the previous one. Between
    returns of either orbit all conditions are linear in ``t``.
    """
    sys = susp.sys
    eps, T = ball.epsilon, ball.T
    x0, s = ball.center.base, ball.center.height
    y0, u = q.base, q.height
    if not (0 <= u < susp.rho(y0)):
        raise ValueError("q must be normalised")
    # orbit points, roof values and fiber entry times up to T
    def orbit(z, h):
        pts, rs, entry = [z], [susp.rho(z)], [-h]
        while entry[-1] + rs[-1] <= T:
            entry.append(entry[-1] + rs[-1])
            pts.append(pts[-1].shift(1))
            rs.append(susp.rho(pts[-1]))
        for _ in range(2):
            pts.append(pts[-1].shift(1))
            rs.append(susp.rho(pts[-1]))
        return pts, rs, entry
    xs, rxs, ex = orbit(x0, s)
    ys, rys, ey = orbit(y0, u)
    cuts = sorted(set([Fraction(0), T] + ex[1:] + ey[1:]))
    i = j = 0
    dist = {}

    def d(a, b):
        key = (a, b)
        if key not in dist:
            dist[key] = distance(sys, xs[a], ys[b])
        return dist[key]

    for idx, a in enumerate(cuts):
        b = cuts[idx + 1] if idx + 1 < len(cuts) else T
        if b == a and a != T:
            continue
        while i + 1 < len(ex) and ex[i + 1] <= a:
            i += 1
        while j + 1 < len(ey) and ey[j + 1] <= a:
            j += 1
        rx, ry = rxs[i], rys[j]
        s_t = _Lin(1, -ex[i])  # centre height at time t
        lam = _Lin(1, -ey[j]).scale(1 / ry)
        # centre fibers: current, next, and the previous one once the centre orbit has a past
        c = lam.scale(rx)
        options = [(i, [((s_t - eps) - c, True), (c - (s_t + eps), True), (c - rx, True)])]
        cn = lam.scale(rxs[i + 1])
        options.append((i + 1, [(cn - (s_t + eps - rx), True)]))
        if i >= 1:
            rp = rxs[i - 1]
            cp = lam.scale(rp)
            options.append((i - 1, [((s_t + rp - eps) - cp, True), (cp - rp, True)]))
        good = []
        for f, cons in options:
            da, db = d(f, j), d(f + 1, j + 1)
            # (1 - lam) da + lam db < eps
            shadow = _Lin(lam.a * (db - da), da + lam.b * (db - da) - eps)
            sol = _solve(cons + [(shadow, True)], a, b)
            if sol is not None:
                good.append(sol)
        if not _covers(good, a, b, b == T):
            return False
    return True


# -- beta root -------------------------------------------------------------------------------

@dataclass
class BetaCertificate:
    beta: float
    bracket: tuple
    curve: list  # (t, mdim(-t rho))
    epsilon_ladder: list
    tolerance: float
    statement: str = "flow metric mean dimension >= beta"

    def as_dict(self):
        return {"beta": self.beta, "bracket": list(self.bracket), "curve": [list(c) for c in self.curve],
                "epsilon_ladder": self.epsilon_ladder, "tolerance": self.tolerance, "statement": self.statement}


def beta_root(sys, Z, roof: RoofFunction, epsilon_ladder, n_ladder, tol: float = 1e-3,
              extrapolation: str = LINEAR_FIT, workers: int = 1) -> BetaCertificate:
    """Root of ``t -> upper_mdim(Z, -t rho)`` by bisection on the extrapolated estimate."""
    eps = [float(e) for e in epsilon_ladder]
    curve = []

    def f(t):
        v = upper_mdim(sys, Z, roof.rho.scaled(-t), eps, n_ladder, extrapolation, workers=workers).value
        curve.append((float(t), float(v)))
        return v

    inf_rho = min(float(roof.inf(sys.system_at(e))) for e in eps)
    f0 = f(Fraction(0))
    if f0 <= 0:
        return BetaCertificate(0.0, (0.0, 0.0), curve, eps, tol)
    lo, hi = Fraction(0), Fraction(f0 / inf_rho + 0.01).limit_denominator(10 ** 6)
    while f(hi) > 0:
        lo, hi = hi, 2 * hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return BetaCertificate(float((lo + hi) / 2), (float(lo), float(hi)), sorted(curve), eps, tol)


# -- flow-time level sets ----------------------------------------------------------------------

@dataclass
class FlowLevelBound:
    value: float
    per_epsilon: list
    epsilon_ladder: list
    integral_rho: list
    base_lhs: MdimEstimate | None
    alpha: float
    feasible: bool
    notes: dict = field(default_factory=dict)


def _ratio_gibbs(chi, rho, alpha_free_bias=None, iters: int = 100):
    """Maximise ``h(p) / <p, rho>`` subject to ``<p, chi> = 0`` by Dinkelbach steps."""
    lam = 0.0
    sol = None
    for _ in range(iters):
        sol = gibbs_tilt(chi, -lam * rho, 0.0)
        if not sol.feasible:
            return sol, float("nan")
        mean_rho = float(np.dot(sol.p, rho))
        new = sol.entropy / mean_rho
        if abs(new - lam) <= 1e-13:
            lam = new
            break
        lam = new
    return sol, lam


def flow_level_mdim_lower_bound(sys, roof: RoofFunction, Phi: FlowPotential, alpha, epsilon_ladder,
                                n_ladder=None, window_deltas=(0.1, 0.05, 0.02),
                                extrapolation: str = LINEAR_FIT) -> FlowLevelBound:
    """Lower bound for the flow-time level set at ``alpha``.

    Per rung the ratio-constrained problem ``max h(mu)/int rho`` subject to
    ``int phi = alpha int rho`` is solved over Bernoulli measures; the
    per-rung values are divided by ``|log eps|`` and extrapolated. With an
    ``n_ladder`` the base ratio level set's mean dimension (through window
    sets on ``phi - alpha rho``, a subset of the ratio windows) is also
    reported in ``base_lhs``.
    """
    eps = [float(e) for e in epsilon_ladder]
    vals, ints, kept = [], [], []
    bad = []
    for e in eps:
        s = sys.system_at(e)
        susp = Suspension(s, roof)
        phi = associated_potential(susp, Phi)
        if phi.depth != 1 or roof.rho.depth != 1:
            raise ModeError("the ratio Gibbs solve needs depth-1 phi and rho")
        r = np.array([float(v) for v in roof.values(s)])
        chi = phi.table(s) - float(alpha) * r
        sol, ratio = _ratio_gibbs(chi, r)
        if not sol.feasible:
            bad.append(e)
            continue
        kept.append(e)
        vals.append(ratio / log_scale(e))
        ints.append(float(np.dot(sol.p, r)))
    notes = {"infeasible_rungs": bad}
    if not kept:
        return FlowLevelBound(float("nan"), [], eps, [], None, float(alpha), False, notes)
    est = make_estimate(kept, vals, extrapolation, lower_bound=True)
    base = None
    if n_ladder is not None:
        chi_pot = _ladder_potential(roof, Phi, alpha)
        inf_r = min(float(roof.inf(sys.system_at(e))) for e in eps)
        base = level_mdim(sys, chi_pot, None, 0.0, eps, n_ladder,
                          tuple(d * inf_r for d in window_deltas), extrapolation=extrapolation)
    return FlowLevelBound(est.value, vals, kept, ints, base, float(alpha), True, notes)


@dataclass(frozen=True)
class _LadderChi:
    """``phi - alpha rho`` built per rung system (depth 1)."""

    roof: RoofFunction
    Phi: FlowPotential
    alpha: float
    depth: int = 1

    def exact_table(self, sys):
        susp = Suspension(sys, self.roof)
        phi = associated_potential(susp, self.Phi)
        a = as_fraction(self.alpha)
        return [p - a * r for p, r in zip(phi.exact_table(sys), self.roof.values(sys))]

    def table(self, sys):
        return np.array([float(v) for v in self.exact_table(sys)])

    @property
    def ident(self):
        return f"chi({self.roof.rho.ident},{self.alpha})"


def _ladder_potential(roof, Phi, alpha):
    return _LadderChi(roof, Phi, float(alpha))


# -- suspension entropy ----------------------------------------------------------------------

def suspension_entropy(mu: MeasureModel, susp: Suspension, T: float = 200.0, samples: int = 2000,
                       seed: int = 0) -> float:
    """Monte Carlo information rate of the time-one map under ``mu_rho``.

    Start points ``(x, s)`` are drawn from ``mu_rho`` (base from ``mu``
    reweighted by ``rho``, height uniform on the fiber); the rate is the
    information ``-log mu`` of the base word traversed up to time ``T``,
    divided by ``T``.
    """
    sys = susp.sys
    r = np.array([float(v) for v in susp.roof.values(sys)])
    if susp.roof.rho.depth != 1:
        raise ModeError("suspension_entropy needs a depth-1 roof")
    L = int(math.ceil(T / r.min())) + 2
    words = mu.sample_words(L, samples, seed)
    logm = mu.word_log_masses(words)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), 77])))
    heights = rng.random(samples) * r[words[:, 0]]
    cum = np.cumsum(r[words], axis=1) - heights[:, None]
    visited = (cum <= T).sum(axis=1) + 1  # fibers touched in [0, T]
    info = -logm[np.arange(samples), visited - 1]
    w = r[words[:, 0]]
    return float(np.dot(w, info) / w.sum() / T)


def H_suspension(family: SequenceFamily, roof: RoofFunction, epsilon_ladder, T: float = 200.0,
                 samples: int = 2000, seed: int = 0, extrapolation: str = LINEAR_FIT) -> MdimEstimate:
    """Per rung: suspension entropy divided by ``|log eps|``, extrapolated."""
    eps = [float(e) for e in epsilon_ladder]
    vals = []
    for e in eps:
        s, mu = family.at(e)
        vals.append(suspension_entropy(mu, Suspension(s, roof), T, samples, seed) / log_scale(e))
    return make_estimate(eps, vals, extrapolation, lower_bound=True, notes={"family": family.name})


def abramov_check(family: SequenceFamily, roof: RoofFunction, epsilon_ladder, T: float = 200.0,
                  samples: int = 2000, seed: int = 0):
    """``(H(mu_rho) * int rho, H(mu))`` on a family with a constant roof."""
    eps = [float(e) for e in epsilon_ladder]
    hs = H_suspension(family, roof, eps, T, samples, seed)
    hm = H_of_mu(family, eps)
    ints = []
    for e in eps:
        s, mu = family.at(e)
        ints.append(mu.integral(s, roof.rho))
    if len(set(round(v, 12) for v in ints)) != 1:
        raise ValueError("the product check needs a roof with the same mean on every rung")
    return hs.value * ints[0], hm.value
