"""Finite surrogates for limits in n and in epsilon, and log-space helpers."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

LINEAR_FIT = "linear_fit_in_1_over_log"
LAST_POINT = "last_point"


def log_scale(epsilon) -> float:
    """``|log eps|``."""
    return abs(math.log(float(epsilon)))


def logsumexp_pairwise(values) -> float:
    """Log-sum-exp with a fixed pairwise reduction tree.

    The tree depends only on the number of inputs, so the result is the same
    no matter how the inputs were produced.
    """
    vals = [float(v) for v in values]
    if not vals:
        return -math.inf
    while len(vals) > 1:
        nxt = []
        for i in range(0, len(vals) - 1, 2):
            nxt.append(float(np.logaddexp(vals[i], vals[i + 1])))
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def tail_window(ns) -> list:
    """The largest third (rounded up) of a ladder of n values."""
    ns = sorted(set(int(n) for n in ns))
    size = max(1, math.ceil(len(ns) / 3))
    return ns[-size:]


@dataclass
class MdimEstimate:
    """A scale-normalised rate, extrapolated to eps -> 0.

    ``per_epsilon_rate[i]`` is the growth rate at ``epsilon_ladder[i]``
    divided by ``|log eps|``; ``value`` is obtained from it by the rule named
    in ``extrapolation``. ``lower_bound`` marks values that are certified only
    from below.
    """

    value: float
    epsilon_ladder: list
    per_epsilon_rate: list
    extrapolation: str = LINEAR_FIT
    uncertainty: float = 0.0
    last_point: float = float("nan")
    alternate: float | None = None
    lower_bound: bool = False
    notes: dict = field(default_factory=dict)

    def reproduce(self) -> float:
        return extrapolate(self.epsilon_ladder, self.per_epsilon_rate, self.extrapolation)[0]

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "epsilon_ladder": [float(e) for e in self.epsilon_ladder],
            "per_epsilon_rate": list(self.per_epsilon_rate),
            "extrapolation": self.extrapolation,
            "uncertainty": self.uncertainty,
            "last_point": self.last_point,
            "alternate": self.alternate,
            "lower_bound": self.lower_bound,
            "notes": self.notes,
        }


def extrapolate(eps_ladder, values, rule: str = LINEAR_FIT):
    """Return ``(value, uncertainty)`` for per-rung values.

    The linear rule fits ``value(eps) = c0 + c1 / |log eps|`` and reports the
    intercept ``c0``; the uncertainty is the largest absolute fit residual.
    Rungs with non-finite values are dropped.
    """
    pairs = [(float(e), float(v)) for e, v in zip(eps_ladder, values) if np.isfinite(v)]
    if not pairs:
        return float("nan"), float("nan")
    pairs.sort(key=lambda p: -p[0])
    if rule == LAST_POINT or len(pairs) == 1:
        return pairs[-1][1], 0.0
    if rule != LINEAR_FIT:
        raise ValueError(f"unknown extrapolation rule {rule!r}")
    x = np.array([1.0 / log_scale(e) for e, _ in pairs])
    y = np.array([v for _, v in pairs])
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return float(coef[0]), float(np.max(np.abs(resid)))


def make_estimate(eps_ladder, values, rule=LINEAR_FIT, **kw) -> MdimEstimate:
    value, unc = extrapolate(eps_ladder, values, rule)
    order = np.argsort([-float(e) for e in eps_ladder])
    last = float(values[order[-1]]) if len(values) else float("nan")
    return MdimEstimate(value, [float(e) for e in eps_ladder], [float(v) for v in values],
                        rule, unc, last, **kw)


def ordered_map(fn, items, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally on a thread pool (order kept)."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def linear_slope(xs, ys) -> float:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two points for a slope")
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
