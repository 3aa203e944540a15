"""Birkhoff level sets through window sets, their partition functions and mean
dimension, the constrained variational side, and the three-way comparison.

A level set ``K_alpha = {x : S_n phi(x)/n -> alpha}`` is only reachable through
window sets: cylinders whose Birkhoff average stays within ``delta`` of
``alpha`` (at the final length, or at every length from ``n_min`` on). Every
reported number carries the window half-width it was computed with.

On the variational side the search runs over Bernoulli measures on the rung
alphabet. For depth-1 ``phi`` and ``psi`` the maximiser of
``h(p) + |log eps| sum p_i psi_i`` subject to ``sum p_i phi_i = alpha`` is the
Gibbs tilt ``p_i ~ exp(t phi_i + |log eps| psi_i)``, with ``t`` found by
monotone root finding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from . import _dp
from .counting import log_weight_sum, upper_mdim
from .dyncore import ModeError, Potential, as_fraction
from .estimates import LINEAR_FIT, MdimEstimate, log_scale, make_estimate, ordered_map
from .measures import H_delta_K, H_of_mu, MeasureModel, SequenceFamily

PARTITION = "partition"
H = "H"
HK = "Hk"
INFEASIBLE = float("nan")


@dataclass(frozen=True)
class LevelSetWindow:
    """Cylinders ``w`` with ``|S_m phi(w)/m - alpha| <= delta + slack``.

    ``n_min=None`` checks the final complete sum only; otherwise every
    ``m >= n_min`` reached inside the word is checked.
    """

    phi: Potential
    alpha: float
    delta: float
    n_min: int | None = None
    slack: float = 0.0

    def dp_window(self, sys) -> _dp.Window:
        if self.phi.depth < 1:
            raise ValueError("phi needs a positive depth")
        return _dp.Window(tuple(self.phi.exact_table(sys)), self.phi.depth, as_fraction(self.alpha),
                          as_fraction(self.delta) + as_fraction(self.slack), self.n_min)

    def qualifies(self, sys, word) -> bool:
        from .dyncore import word_birkhoff_sum
        r = self.phi.depth
        tol = as_fraction(self.delta) + as_fraction(self.slack)
        a = as_fraction(self.alpha)
        M = len(word) - r + 1
        checks = [M] if self.n_min is None else range(max(self.n_min, 1), M + 1)
        return all(abs(word_birkhoff_sum(sys, self.phi, word[:m + r - 1]) / m - a) <= tol
                   for m in checks if m >= 1)

    def with_delta(self, delta) -> "LevelSetWindow":
        return LevelSetWindow(self.phi, self.alpha, delta, self.n_min, self.slack)

    @property
    def ident(self) -> str:
        return f"window(alpha={self.alpha},delta={self.delta},n_min={self.n_min},phi={self.phi.ident})"


def level_restricted_P(sys, phi, psi, window: LevelSetWindow, n: int, epsilon) -> float:
    """``log P_n`` over the qualifying cylinders; ``-inf`` when none qualifies."""
    win = LevelSetWindow(phi, window.alpha, window.delta, window.n_min, window.slack)
    return log_weight_sum(sys, win, psi, n, epsilon, "P")[0]


def level_mdim(sys, phi, psi, alpha, epsilon_ladder, n_ladder, delta_schedule=(0.1, 0.05, 0.02),
               n_min=None, extrapolation: str = LINEAR_FIT, workers: int = 1) -> MdimEstimate:
    """Capacity-type mean dimension of the window sets as ``delta`` shrinks.

    The value is the estimate at the last (smallest) ``delta``; every
    ``(delta, value)`` pair is kept in ``notes``.
    """
    deltas = [float(d) for d in delta_schedule]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta schedule must be strictly decreasing")
    per = []
    for d in deltas:
        win = LevelSetWindow(phi, alpha, d, n_min)
        per.append(upper_mdim(sys, win, psi, epsilon_ladder, n_ladder, extrapolation, workers=workers))
    last = per[-1]
    last.notes = dict(last.notes, delta_schedule=deltas, values=[e.value for e in per],
                      alternates=[e.alternate for e in per], alpha=float(alpha))
    return last


# -- constrained variational side ----------------------------------------------------------

@dataclass(frozen=True)
class GibbsSolution:
    p: tuple
    t: float
    entropy: float
    integral_psi: float
    feasible: bool = True


def gibbs_tilt(values, bias, alpha, tol: float = 1e-10) -> GibbsSolution:
    """Maximise ``h(p) + sum p_i bias_i`` subject to ``sum p_i values_i = alpha``.

    ``integral_psi`` in the result is ``sum p_i bias_i``.
    """
    v = np.asarray(values, dtype=float)
    b = np.asarray(bias, dtype=float)
    a = float(alpha)
    lo, hi = float(v.min()), float(v.max())
    span = max(hi - lo, 1e-300)
    if a < lo - 1e-12 or a > hi + 1e-12:
        return GibbsSolution((), float("nan"), float("nan"), float("nan"), False)
    if hi - lo < 1e-15 or abs(a - lo) <= 1e-12 * span or abs(a - hi) <= 1e-12 * span:
        on = np.isclose(v, lo if abs(a - lo) <= abs(a - hi) else hi, rtol=0, atol=1e-12 * span)
        w = np.where(on, b, -np.inf)
        p = np.exp(w - logsumexp(w))
        return _solution(p, float("inf") if a >= hi and hi > lo else 0.0, b)

    def mean(t):
        w = t * v + b
        return float(np.exp(w - logsumexp(w)) @ v) - a

    t_lo, t_hi = -1.0, 1.0
    while mean(t_lo) > 0:
        t_lo *= 2
    while mean(t_hi) < 0:
        t_hi *= 2
    t = brentq(mean, t_lo, t_hi, xtol=1e-15, rtol=8.9e-16, maxiter=500)
    w = t * v + b
    p = np.exp(w - logsumexp(w))
    if abs(float(p @ v) - a) > tol:
        raise RuntimeError(f"Gibbs solve missed the constraint by {abs(float(p @ v) - a):.3g}")
    return _solution(p, t, b)


def _solution(p, t, b):
    pos = p > 0
    h = float(-(p[pos] * np.log(p[pos])).sum())
    return GibbsSolution(tuple(p.tolist()), float(t), h, float(p @ np.where(np.isfinite(b), b, 0.0)))


def _depth1_tables(sys, phi, psi):
    if phi.depth != 1 or (psi is not None and psi.depth != 1):
        raise ModeError("the Gibbs solve needs depth-1 phi and psi")
    v = phi.table(sys)
    w = psi.table(sys) if psi is not None else np.zeros(sys.alphabet_size)
    return v, w


def optimizer_family(sys, phi, psi, alpha) -> SequenceFamily:
    """The rung-wise Gibbs optimisers as a family of measures."""
    def build(e):
        s = sys.system_at(e)
        v, w = _depth1_tables(s, phi, psi)
        sol = gibbs_tilt(v, log_scale(e) * w, alpha)
        if not sol.feasible:
            raise ValueError(f"alpha={alpha} is infeasible at eps={e}")
        return s, MeasureModel.bernoulli(sol.p)
    return SequenceFamily(f"gibbs(alpha={alpha})", build)


def _feasible_rungs(sys, phi, alpha, eps):
    out = []
    for e in eps:
        v = phi.table(sys.system_at(e))
        out.append(bool(v.min() < float(alpha) < v.max()) or bool(np.isclose(v.min(), v.max())
                                                                   and np.isclose(v.min(), float(alpha))))
    return out


def constrained_variational_rhs(sys, phi, psi, alpha, epsilon_ladder, which: str = PARTITION,
                                delta: float = 0.1, n_ladder=range(10, 31), sample_size: int = 10_000,
                                seed: int = 0, extrapolation: str = LINEAR_FIT,
                                workers: int = 1) -> MdimEstimate:
    """Per rung: the best ``entropy / |log eps| + int psi`` over Bernoulli measures with
    ``int phi = alpha``, extrapolated. Rungs where ``alpha`` is infeasible are dropped."""
    eps = [float(e) for e in epsilon_ladder]
    ok = _feasible_rungs(sys, phi, alpha, eps)
    kept = [e for e, f in zip(eps, ok) if f]
    notes = {"which": which, "alpha": float(alpha), "infeasible_rungs": [e for e, f in zip(eps, ok) if not f]}
    if not kept:
        return MdimEstimate(INFEASIBLE, eps, [INFEASIBLE] * len(eps), extrapolation, notes=notes)
    fam = optimizer_family(sys, phi, psi, alpha)
    ints = []
    for e in kept:
        s, mu = fam.at(e)
        ints.append(mu.integral(s, psi) if psi is not None else 0.0)
    if which == PARTITION:
        vals = []
        for e, ip in zip(kept, ints):
            s, mu = fam.at(e)
            vals.append(mu.entropy_rate() / log_scale(e) + ip)
    elif which == H:
        base = H_of_mu(fam, kept, extrapolation)
        vals = [r + ip for r, ip in zip(base.per_epsilon_rate, ints)]
    elif which == HK:
        base = H_delta_K(fam, delta, kept, n_ladder, sample_size, seed, "sampled", extrapolation, workers)
        vals = [r + ip for r, ip in zip(base.per_epsilon_rate, ints)]
        notes.update(delta=delta, seed=seed, sample_size=sample_size)
    else:
        raise ValueError(f"unknown variational side {which!r}")
    est = make_estimate(kept, vals, extrapolation, lower_bound=which != PARTITION, notes=notes)
    est.notes["integral_psi"] = ints
    return est


# -- three-way comparison --------------------------------------------------------------------------

@dataclass
class SpectrumCurve:
    alphas: list
    lhs: list
    rhs_partition: list
    rhs_H: list
    rhs_K: list
    tol: float
    delta: float
    window_deltas: list = field(default_factory=list)

    def columns(self, i):
        return {"lhs": self.lhs[i], "rhs_partition": self.rhs_partition[i],
                "rhs_H": self.rhs_H[i], "rhs_K": self.rhs_K[i]}

    def worst_pair(self, i):
        cols = self.columns(i)
        names = list(cols)
        best = (None, None, -1.0)
        for a in range(len(names)):
            for b in range(a + 1, len(names)):
                d = abs(cols[names[a]] - cols[names[b]])
                if not np.isfinite(d):
                    d = math.inf
                if d > best[2]:
                    best = (names[a], names[b], d)
        return best

    def passes(self) -> bool:
        return all(self.worst_pair(i)[2] <= self.tol for i in range(len(self.alphas)))

    def rows(self):
        return [(a, self.lhs[i], self.rhs_partition[i], self.rhs_H[i], self.rhs_K[i], self.tol)
                for i, a in enumerate(self.alphas)]


@dataclass
class TheoremReport:
    curves: list
    verdict: bool
    per_alpha: list

    @property
    def verdict_text(self) -> str:
        return "PASS" if self.verdict else "FAIL"


class SpecificationRequired(ValueError):
    """The system does not declare the specification property."""


def interior_alphas(sys, phi, alphas, eps):
    ok = []
    for a in alphas:
        if all(phi.table(sys.system_at(e)).min() < a < phi.table(sys.system_at(e)).max() for e in eps):
            ok.append(a)
    return ok


def verify_theorem1(sys, phi, psi, alpha_grid, epsilon_ladder, n_ladder, deltas=(0.1, 0.3),
                    window_deltas=(0.1, 0.05, 0.02), tol: float = 0.1, katok_n=range(10, 31),
                    sample_size: int = 10_000, seed: int = 0, workers: int = 1) -> TheoremReport:
    """Compute the four columns on ``alpha_grid`` and compare them pairwise.

    The verdict is PASS iff every interior ``alpha`` has all pairwise gaps
    within ``tol`` for every Katok ``delta``.
    """
    if getattr(sys, "spec_gap", None) is None:
        raise SpecificationRequired("the system does not declare the specification property; "
                                    "the comparison's hypotheses are not met")
    alphas = [float(a) for a in alpha_grid]
    eps = [float(e) for e in epsilon_ladder]

    def column_set(a):
        lhs = level_mdim(sys, phi, psi, a, eps, n_ladder, window_deltas, workers=1).value
        part = constrained_variational_rhs(sys, phi, psi, a, eps, PARTITION).value
        hh = constrained_variational_rhs(sys, phi, psi, a, eps, H).value
        ks = [constrained_variational_rhs(sys, phi, psi, a, eps, HK, d, katok_n, sample_size, seed).value
              for d in deltas]
        return lhs, part, hh, ks

    results = ordered_map(column_set, alphas, workers)
    curves = []
    for j, d in enumerate(deltas):
        curves.append(SpectrumCurve(alphas, [r[0] for r in results], [r[1] for r in results],
                                    [r[2] for r in results], [r[3][j] for r in results], tol, float(d),
                                    [float(w) for w in window_deltas]))
    inner = set(interior_alphas(sys, phi, alphas, eps))
    per_alpha = []
    verdict = True
    for i, a in enumerate(alphas):
        worst = max((c.worst_pair(i) for c in curves), key=lambda t: t[2])
        ok = worst[2] <= tol
        per_alpha.append({"alpha": a, "interior": a in inner, "worst_pair": worst[:2], "gap": worst[2],
                          "pass": ok})
        if a in inner and not ok:
            verdict = False
    return TheoremReport(curves, verdict, per_alpha)
