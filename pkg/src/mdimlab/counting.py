"""Separated and spanning sets, the partition functions P_n and Q_n, pressure
rates and the capacity-type mean dimension with potential.

On the ultrametric, ``(n, eps)``-separation and ``(n, eps)``-balls are both
cylinder relations (``separation_length`` / ``ball_length`` symbols), so the
sup over separated sets and the inf over spanning sets are attained by one
point per cylinder and both partition functions are exact.

On the sup-weighted grid metric the closeness relation is a strong product of
one-dimensional threshold graphs (one per coordinate, with weight 1 on the
first ``n`` coordinates and ``2**-(l-n+1)`` after). Their independence and
domination numbers multiply over the product, and a one-dimensional greedy
pass computes each factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import _dp
from .dyncore import (ULTRAMETRIC, CylinderSet, FiniteSet, ModeError, Point,
                      Potential, SymbolicSystem, WholeSpace, as_fraction, ball_length,
                      birkhoff_sum, bowen_distance, grid_weight, separation_length)
from .estimates import (LINEAR_FIT, MdimEstimate, log_scale, make_estimate, ordered_map,
                        tail_window)

EXACT = "exact"
GREEDY = "greedy_lower_bound"
SAMPLED = "sampled"
BUCKETED = "bucketed"


class MdimDisagreement(RuntimeError):
    """P-based and Q-based estimates differ beyond tolerance."""


@dataclass
class SeparatedSet:
    n: int
    epsilon: float
    points: list
    witness_mode: str
    cardinality: int = 0

    def __post_init__(self):
        if not self.cardinality:
            self.cardinality = len(self.points)


@dataclass(frozen=True)
class TableRow:
    n: int
    epsilon: float
    log_Pn: float
    log_Qn: float
    provenance: str


@dataclass
class PartitionFunctionTable:
    """Append-only table of ``log P_n`` and ``log Q_n`` over an (n, eps) ladder."""

    potential_id: str = ""
    restriction_id: str = "whole"
    rows: list = field(default_factory=list)

    def add(self, row: TableRow):
        self.rows = self.rows + [row]

    def at(self, epsilon) -> list:
        e = float(epsilon)
        return sorted((r for r in self.rows if r.epsilon == e), key=lambda r: r.n)

    @property
    def epsilons(self) -> list:
        seen = []
        for r in self.rows:
            if r.epsilon not in seen:
                seen.append(r.epsilon)
        return seen


# -- restrictions -----------------------------------------------------------------

def restriction_parts(sys: SymbolicSystem, Z):
    """(prefix, dp window) describing a cylinder-definable restriction."""
    if Z is None or isinstance(Z, WholeSpace):
        return (), None
    if isinstance(Z, CylinderSet):
        if not sys.extends_forever(Z.word):
            raise ValueError(f"cylinder {Z.word} is empty in this system")
        return Z.word, None
    if hasattr(Z, "dp_window"):
        return tuple(getattr(Z, "prefix", ())), Z.dp_window(sys)
    raise ModeError(f"restriction {Z!r} is not cylinder-definable; use greedy mode")


def restriction_id(Z) -> str:
    if Z is None:
        return "whole"
    return getattr(Z, "ident", repr(Z))


# -- one-dimensional grid factors -----------------------------------------------------

def _positions(sys, weight, allowed):
    return sorted((weight * sys.embedding[a], a) for a in allowed)


def line_independence(sys, weight, eps, allowed=None, log_weights=None) -> float:
    """Log of the max (weighted) number of symbols pairwise ``> eps`` apart at ``weight``."""
    allowed = range(sys.alphabet_size) if allowed is None else allowed
    pts = _positions(sys, weight, allowed)
    if log_weights is None:
        count, last = 0, None
        for x, _ in pts:
            if last is None or x - last > eps:
                count += 1
                last = x
        return math.log(count)
    best = []
    for i, (x, a) in enumerate(pts):
        j = i - 1
        while j >= 0 and not x - pts[j][0] > eps:
            j -= 1
        take = float(np.logaddexp(log_weights[a], best[j])) if j >= 0 else float(log_weights[a])
        skip = best[i - 1] if i else -math.inf
        best.append(max(take, skip))
    return best[-1]


def line_domination(sys, weight, eps, allowed=None) -> float:
    """Log of the min number of centers (from ``allowed``) whose ``eps``-balls cover ``allowed``."""
    allowed = range(sys.alphabet_size) if allowed is None else allowed
    pts = [x for x, _ in _positions(sys, weight, allowed)]
    i, count = 0, 0
    while i < len(pts):
        p = pts[i]
        c = i
        while c + 1 < len(pts) and pts[c + 1] - p < eps:
            c += 1
        while i < len(pts) and pts[i] - pts[c] < eps:
            i += 1
        count += 1
    return math.log(count)


def _tail_coordinates(sys, n, eps):
    l = n
    while grid_weight(l, n) * sys.diameter >= eps:
        yield l, grid_weight(l, n)
        l += 1


def _grid_allowed(sys, prefix, l):
    return (prefix[l],) if l < len(prefix) else tuple(range(sys.alphabet_size))


def grid_tail_log_factor(sys, n, eps, kind: str, prefix=()) -> float:
    eps = as_fraction(eps)
    f = line_independence if kind == "P" else line_domination
    return sum(f(sys, w, eps, _grid_allowed(sys, prefix, l)) for l, w in _tail_coordinates(sys, n, eps))


def head_resolved(sys, eps) -> bool:
    return sys.alphabet_size == 1 or sys.spacing > as_fraction(eps)


# -- partition functions ----------------------------------------------------------------

def _scaled_table(sys, psi: Potential | None, eps):
    if psi is None:
        return None, 1
    return psi.table(sys) * log_scale(eps), psi.depth


def _finite_sum(sys, Z: FiniteSet, psi, n, eps, kind):
    s = log_scale(eps)
    if sys.metric_kind != ULTRAMETRIC:
        if len(Z.points) != 1:
            raise ModeError("finite restrictions on the grid metric need greedy mode")
    groups = {}
    L = separation_length(n, eps) if kind == "P" else ball_length(n, eps)
    for x in Z.points:
        sys.check_point(x)
        v = 0.0 if psi is None else s * birkhoff_sum(sys, psi, x, n)
        key = x.word(0, L) if sys.metric_kind == ULTRAMETRIC else ()
        if key not in groups:
            groups[key] = v
        else:
            groups[key] = max(groups[key], v) if kind == "P" else min(groups[key], v)
    vals = [groups[k] for k in sorted(groups)]
    if not vals:
        return -math.inf, EXACT
    m = max(vals)
    return m + math.log(sum(math.exp(v - m) for v in vals)), EXACT


def log_weight_sum(sys: SymbolicSystem, Z, psi, n: int, epsilon, kind: str):
    """Shared engine for P_n (``kind='P'``), Q_n (``'Q'``) and uniform cover sums (``'cover'``).

    Returns ``(log value, provenance)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    eps = as_fraction(epsilon)
    if isinstance(Z, FiniteSet):
        if kind != "cover":
            return _finite_sum(sys, Z, psi, n, eps, kind)
        if sys.metric_kind != ULTRAMETRIC:
            raise ModeError("cover sums of finite sets need the ultrametric")
        # one ball per distinct ball cylinder, weighted by its sup over X
        L = ball_length(n, eps)
        words = sorted({x.word(0, L) for x in Z.points})
        vals = [log_weight_sum(sys, CylinderSet(w), psi, n, eps, "cover")[0] for w in words]
        m = max(vals)
        return m + math.log(sum(math.exp(v - m) for v in vals)), EXACT
    prefix, window = restriction_parts(sys, Z)
    table, depth = _scaled_table(sys, psi, eps)
    if sys.metric_kind == ULTRAMETRIC:
        dp = _dp.WordDP(sys, table, depth, prefix, window)
        if kind == "P":
            res = dp.log_sum(separation_length(n, eps), n, "sup", "Z")
        elif kind == "Q":
            res = dp.log_sum(ball_length(n, eps), n, "inf", "Z")
        else:
            res = dp.log_sum(ball_length(n, eps), n, "sup", "X")
        return res.log_value, EXACT if res.exact else BUCKETED
    return _grid_weight_sum(sys, prefix, window, psi, table, n, eps, kind)


def _grid_weight_sum(sys, prefix, window, psi, table, n, eps, kind):
    if not sys.is_full_shift:
        raise ModeError("the grid metric is supported on full shifts only")
    if psi is not None and psi.depth > 1:
        raise ModeError("grid exact mode needs a depth-1 potential")
    tail_kind = "P" if kind == "P" else "Q"
    tail = grid_tail_log_factor(sys, n, eps, tail_kind, prefix)
    if head_resolved(sys, eps):
        dp = _dp.WordDP(sys, table, 1, prefix[:n], window)
        res = dp.log_sum(n, n, "sup" if kind != "Q" else "inf", "Z")
        return res.log_value + tail, EXACT if res.exact else BUCKETED
    if window is not None or prefix:
        raise ModeError("the grid head is unresolved at this scale; restrictions unsupported")
    logw = table if table is not None else np.zeros(sys.alphabet_size)
    if kind == "P":
        head = line_independence(sys, Fraction(1), eps, None, list(logw))
        return n * head + tail, EXACT
    if psi is not None and not psi.is_constant:
        raise ModeError("minimal spanning sums on an unresolved grid need a constant potential")
    c = float(logw[0])
    return n * (line_domination(sys, Fraction(1), eps) + c) + tail, EXACT


def partition_function_P(sys: SymbolicSystem, Z, psi: Potential | None, n: int, epsilon) -> float:
    """``log P_n``: log of the sup over ``(n, eps)``-separated ``E`` in ``Z`` of
    ``sum_{x in E} exp(|log eps| S_n psi(x))``."""
    return log_weight_sum(sys, Z, psi, n, epsilon, "P")[0]


def minimal_spanning_Q(sys: SymbolicSystem, Z, psi: Potential | None, n: int, epsilon) -> float:
    """``log Q_n``: inf over ``(n, eps)``-spanning ``F`` in ``Z`` of the same sum."""
    return log_weight_sum(sys, Z, psi, n, epsilon, "Q")[0]


# -- explicit separated sets --------------------------------------------------------------

def words_meeting(sys: SymbolicSystem, Z, L: int):
    """All words of length ``L`` whose cylinder meets ``Z`` (depth-first order)."""
    prefix, window = restriction_parts(sys, Z)
    dp = _dp.WordDP(sys, None, 1, prefix, window)
    k = sys.alphabet_size
    F = sys.forbidden_length
    out = []

    def rec(w):
        if len(w) == L:
            full = w + tuple(prefix[L:])
            if sys.extends_forever(full) and dp._window_ok_word(w):
                out.append(w)
            return
        i = len(w)
        for a in ([prefix[i]] if i < len(prefix) else range(k)):
            cand = w + (a,)
            if F and not sys.admissible(cand[-F:]):
                continue
            rec(cand)

    rec(())
    return out


def maximal_separated(sys: SymbolicSystem, Z, n: int, epsilon, mode: str = "exact_cylinder",
                      candidates=None, max_points: int = 100_000) -> SeparatedSet:
    """A maximal ``(n, eps)``-separated subset of ``Z``.

    ``exact_cylinder`` returns a set of maximum cardinality built from the
    cylinder structure. ``greedy`` scans ``candidates`` (points of ``Z``) and
    keeps each one that is separated from all kept so far; the result is
    maximal among the candidates and only a lower bound for the maximum.
    """
    eps = as_fraction(epsilon)
    if mode == "greedy":
        if candidates is None:
            raise ValueError("greedy mode needs candidate points")
        kept = []
        for x in candidates:
            if all(bowen_distance(sys, x, y, n) > eps for y in kept):
                kept.append(x)
        return SeparatedSet(n, float(epsilon), kept, "greedy")
    if mode != "exact_cylinder":
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(Z, FiniteSet):
        raise ModeError("finite point sets are not cylinder-definable; use greedy mode")
    prefix, _ = restriction_parts(sys, Z)
    count = math.exp(partition_function_P(sys, Z, None, n, eps))
    if round(count) > max_points:
        raise ValueError(f"separated set has {round(count)} points; raise max_points")
    if sys.metric_kind == ULTRAMETRIC:
        L = separation_length(n, eps)
        pts = [sys.complete(w + tuple(prefix[L:])) for w in words_meeting(sys, Z, L)]
        return SeparatedSet(n, float(epsilon), pts, "exact_cylinder")
    if not head_resolved(sys, eps):
        raise ModeError("explicit grid sets need a resolved head")
    heads = words_meeting(sys, Z, n) if n else [()]
    columns = []
    for l, w in _tail_coordinates(sys, n, eps):
        allowed = _grid_allowed(sys, prefix, l)
        chosen, last = [], None
        for x, a in _positions(sys, w, allowed):
            if last is None or x - last > eps:
                chosen.append(a)
                last = x
        columns.append(chosen)
    pts = [Point(h + t, (0,)) for h in heads for t in product(*columns)]
    return SeparatedSet(n, float(epsilon), pts, "exact_cylinder")


# -- tables, rates, mean dimension -----------------------------------------------------------

def partition_table(sys, Z, psi, eps_ladder, n_ladder, workers: int = 1) -> PartitionFunctionTable:
    """``log P_n`` and ``log Q_n`` on every (n, eps) cell.

    ``sys`` may be a fixed system or a ladder providing ``system_at(eps)``.
    """
    cells = [(float(e), int(n)) for e in eps_ladder for n in n_ladder]

    def one(cell):
        e, n = cell
        s = sys.system_at(e)
        p, prov_p = log_weight_sum(s, Z, psi, n, e, "P")
        q, prov_q = log_weight_sum(s, Z, psi, n, e, "Q")
        return TableRow(n, e, p, q, prov_p if prov_p == prov_q else BUCKETED)

    table = PartitionFunctionTable(psi.ident if psi is not None else "zero", restriction_id(Z))
    for row in ordered_map(one, cells, workers):
        table.add(row)
    return table


def pressure_rate(table: PartitionFunctionTable, epsilon, which: str = "P") -> float:
    """Max of ``(1/n) log P_n`` over the largest third of the n ladder at ``eps``."""
    rows = table.at(epsilon)
    if len({r.n for r in rows}) < 3:
        raise ValueError(f"need at least 3 values of n at eps={epsilon}, have {len(rows)}")
    tail = set(tail_window([r.n for r in rows]))
    key = "log_Pn" if which == "P" else "log_Qn"
    return max(getattr(r, key) / r.n for r in rows if r.n in tail)


def upper_mdim(sys, Z, psi, epsilon_ladder, n_ladder, extrapolation: str = LINEAR_FIT,
               tolerance: float = 0.05, strict: bool = False, workers: int = 1,
               table: PartitionFunctionTable | None = None) -> MdimEstimate:
    """Capacity-type upper mean dimension of ``Z`` with potential ``psi``.

    Per rung: pressure rate divided by ``|log eps|``; then extrapolated in
    ``1/|log eps|``. The Q-based variant is stored in ``alternate``.
    """
    eps = [float(e) for e in epsilon_ladder]
    if not eps or not n_ladder:
        raise ValueError("ladders must be nonempty")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilon ladder must be strictly decreasing")
    if table is None:
        table = partition_table(sys, Z, psi, eps, n_ladder, workers)
    p = [pressure_rate(table, e, "P") / log_scale(e) for e in eps]
    q = [pressure_rate(table, e, "Q") / log_scale(e) for e in eps]
    est = make_estimate(eps, p, extrapolation)
    q_est = make_estimate(eps, q, extrapolation)
    est.alternate = q_est.value
    gap = abs(est.value - q_est.value)
    est.notes = {"q_per_epsilon_rate": q, "q_uncertainty": q_est.uncertainty,
                 "pq_gap": gap, "pq_agree": bool(gap <= tolerance),
                 "provenance": sorted({r.provenance for r in table.rows})}
    if strict and gap > tolerance:
        raise MdimDisagreement(f"P-based {est.value:.4f} vs Q-based {q_est.value:.4f} (tolerance {tolerance})")
    return est
