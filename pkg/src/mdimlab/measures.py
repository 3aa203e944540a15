"""Invariant measures on symbolic systems: exact cylinder masses, integrals and
entropies, Katok covering numbers, and the scale-normalised measure-theoretic
mean dimensions built from declared families of measures.

Katok covering numbers ``N_mu(eps, delta, n)`` count the fewest
``(n, eps)``-balls whose union has mass ``> 1 - delta``. On the ultrametric the
balls are disjoint cylinders of length ``ball_length(n, eps)``, so the
minimum takes the heaviest cylinders first. On a grid whose head is resolved
every ball sits inside one head cylinder of length ``n``; counting head
cylinders gives the lower end of a bracket whose upper end multiplies by the
tail spanning number, and both ends have the same growth rate.

Finite-n counts carry a known second-order term: for the information
``-log mu[w]`` with asymptotic variance ``sigma**2``,
``log N = L h + z_{1-delta} sigma sqrt(L) - log(L)/2 + O(1)``. The reported
rate removes the two known terms and takes the slope in ``n`` over the upper
half of the ladder; the uncorrected tail-window rate is kept as ``raw_rate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy.special import gammaln, logsumexp
from scipy.stats import norm

from .dyncore import (ULTRAMETRIC, ModeError, Potential, SymbolicSystem, as_fraction, ball_depth,
                      ball_length, refined_grid, word_index)
from .counting import head_resolved
from .estimates import LINEAR_FIT, MdimEstimate, linear_slope, log_scale, make_estimate, ordered_map, tail_window

BERNOULLI = "bernoulli"
MARKOV = "markov"
MIXTURE = "mixture"
EMPIRICAL = "empirical"
CHUNK = 1024
ENUMERATION_LIMIT = 2 ** 20


def _xlogx(p):
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log(p[pos])
    return out


@dataclass(frozen=True)
class MeasureModel:
    """Bernoulli, Markov, finite mixture or empirical orbit measure."""

    kind: str
    p: tuple = ()
    P: tuple = ()
    pi: tuple = ()
    weights: tuple = ()
    components: tuple = ()
    sample: tuple = ()
    length: int = 0

    # -- constructors --------------------------------------------------------
    @classmethod
    def bernoulli(cls, p) -> "MeasureModel":
        p = tuple(float(v) for v in p)
        if any(v < 0 for v in p) or abs(sum(p) - 1) > 1e-12:
            raise ValueError("bernoulli probabilities must be nonnegative and sum to 1")
        return cls(BERNOULLI, p=p)

    @classmethod
    def markov(cls, P, pi=None) -> "MeasureModel":
        M = np.asarray(P, dtype=float)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or (M < 0).any():
            raise ValueError("transition matrix must be square and nonnegative")
        if np.abs(M.sum(axis=1) - 1).max() > 1e-12:
            raise ValueError("transition rows must sum to 1")
        if pi is None:
            w, V = np.linalg.eig(M.T)
            v = np.abs(V[:, int(np.argmin(np.abs(w - 1)))].real)
            pi = v / v.sum()
        pi = np.asarray(pi, dtype=float)
        if abs(pi.sum() - 1) > 1e-12 or np.abs(pi @ M - pi).max() > 1e-12:
            raise ValueError("pi must be a stationary probability vector")
        return cls(MARKOV, P=tuple(map(tuple, M.tolist())), pi=tuple(pi.tolist()))

    @classmethod
    def mixture(cls, weights, components) -> "MeasureModel":
        w = tuple(float(v) for v in weights)
        if len(w) != len(components) or any(v <= 0 for v in w) or abs(sum(w) - 1) > 1e-12:
            raise ValueError("mixture weights must be positive, one per component, summing to 1")
        ks = {c.alphabet_size for c in components}
        if len(ks) != 1:
            raise ValueError("mixture components must share an alphabet")
        return cls(MIXTURE, weights=w, components=tuple(components))

    @classmethod
    def empirical(cls, points, length: int) -> "MeasureModel":
        """Uniform measure on the orbit segments ``sigma^j x``, ``j < length``."""
        if length < 1 or not points:
            raise ValueError("empirical measures need points and a positive length")
        return cls(EMPIRICAL, sample=tuple(points), length=int(length))

    # -- structure -----------------------------------------------------------------
    @property
    def alphabet_size(self) -> int:
        if self.kind == BERNOULLI:
            return len(self.p)
        if self.kind == MARKOV:
            return len(self.pi)
        if self.kind == MIXTURE:
            return self.components[0].alphabet_size
        return 1 + max(max(x.word(0, self.length + 64)) for x in self.sample)

    @property
    def is_ergodic(self) -> bool:
        if self.kind == BERNOULLI:
            return True
        if self.kind == MARKOV:
            M = (np.asarray(self.P) > 0).astype(float)
            live = np.asarray(self.pi) > 0
            A = M[np.ix_(live, live)]
            reach = np.linalg.matrix_power(np.eye(len(A)) + A, len(A)) > 0
            return bool(reach.all())
        return False

    @property
    def ident(self) -> str:
        if self.kind == BERNOULLI:
            return "bernoulli(" + ",".join(f"{v:.12g}" for v in self.p) + ")"
        if self.kind == MARKOV:
            return "markov(" + ";".join(",".join(f"{v:.12g}" for v in r) for r in self.P) + ")"
        if self.kind == MIXTURE:
            return "mixture(" + "+".join(f"{w:.12g}*{c.ident}" for w, c in zip(self.weights, self.components)) + ")"
        return f"empirical({len(self.sample)}x{self.length})"

    def _segments(self, L):
        return [x.word(j, L) for x in self.sample for j in range(self.length)]

    # -- masses -------------------------------------------------------------------------
    def cylinder_mass(self, word) -> float:
        word = tuple(word)
        if self.kind == BERNOULLI:
            return float(np.prod([self.p[a] for a in word])) if word else 1.0
        if self.kind == MARKOV:
            if not word:
                return 1.0
            m = self.pi[word[0]]
            for a, b in zip(word, word[1:]):
                m *= self.P[a][b]
            return float(m)
        if self.kind == MIXTURE:
            return float(sum(w * c.cylinder_mass(word) for w, c in zip(self.weights, self.components)))
        segs = self._segments(len(word))
        return sum(1 for s in segs if s == word) / len(segs)

    def word_log_masses(self, words: np.ndarray) -> np.ndarray:
        """``log mu[w[:L]]`` for every row and every prefix length ``L >= 1``."""
        words = np.asarray(words, dtype=np.int64)
        if self.kind == BERNOULLI:
            with np.errstate(divide="ignore"):
                lp = np.log(np.asarray(self.p))
            return np.cumsum(lp[words], axis=1)
        if self.kind == MARKOV:
            with np.errstate(divide="ignore"):
                lpi = np.log(np.asarray(self.pi))
                lP = np.log(np.asarray(self.P))
            steps = np.concatenate([lpi[words[:, :1]], lP[words[:, :-1], words[:, 1:]]], axis=1)
            return np.cumsum(steps, axis=1)
        raise ModeError("per-word log masses need a bernoulli or markov model")

    def integral(self, sys: SymbolicSystem, phi: Potential) -> float:
        """Exact ``int phi d mu`` for a cylinder potential."""
        t = phi.table(sys)
        k, r = sys.alphabet_size, phi.depth
        if k != self.alphabet_size and self.kind != EMPIRICAL:
            raise ValueError("measure and system alphabets differ")
        if self.kind == MIXTURE:
            return float(sum(w * c.integral(sys, phi) for w, c in zip(self.weights, self.components)))
        if self.kind == EMPIRICAL:
            return float(np.mean([t[word_index(s, k)] for s in self._segments(r)]))
        if self.kind == BERNOULLI and r == 1:
            return float(np.dot(self.p, t))
        if self.kind == MARKOV and r == 1:
            return float(np.dot(self.pi, t))
        return float(sum(self.cylinder_mass(w) * t[word_index(w, k)] for w in product(range(k), repeat=r)))

    # -- sampling ---------------------------------------------------------------------------
    def sample_words(self, L: int, size: int, seed: int, workers: int = 1) -> np.ndarray:
        """``size`` words of length ``L``, drawn chunk by chunk.

        Chunk ``c`` uses a Philox stream keyed by ``(seed, c)``, so the sample
        does not depend on how chunks are scheduled.
        """
        chunks = [(c, min(CHUNK, size - c * CHUNK)) for c in range(math.ceil(size / CHUNK))]
        parts = ordered_map(lambda job: self._sample_chunk(L, job[1], seed, job[0]), chunks, workers)
        return np.concatenate(parts, axis=0) if parts else np.zeros((0, L), dtype=np.int64)

    def _sample_chunk(self, L, m, seed, c):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(c)])))
        u = rng.random((m, L))
        if self.kind == BERNOULLI:
            cum = np.cumsum(self.p)
            return np.minimum(np.searchsorted(cum, u, side="right"), len(self.p) - 1)
        if self.kind == MARKOV:
            k = len(self.pi)
            cumP = np.cumsum(np.asarray(self.P), axis=1)
            out = np.empty((m, L), dtype=np.int64)
            out[:, 0] = np.minimum(np.searchsorted(np.cumsum(self.pi), u[:, 0], side="right"), k - 1)
            for t in range(1, L):
                out[:, t] = np.minimum((u[:, t:t + 1] >= cumP[out[:, t - 1]]).sum(axis=1), k - 1)
            return out
        raise ModeError("sampling needs a bernoulli or markov model (mixtures are handled per component)")

    # -- entropy helpers -------------------------------------------------------------------
    def entropy_rate(self) -> float:
        if self.kind == BERNOULLI:
            return float(-_xlogx(self.p).sum())
        if self.kind == MARKOV:
            return float(-(np.asarray(self.pi) @ _xlogx(np.asarray(self.P)).sum(axis=1)))
        if self.kind == MIXTURE:
            return float(sum(w * c.entropy_rate() for w, c in zip(self.weights, self.components)))
        raise ModeError("closed-form entropy needs a bernoulli, markov or mixture model")

    def information_variance(self) -> float:
        """Asymptotic variance rate of ``-log mu[x_0 .. x_{L-1}]``."""
        if self.kind == BERNOULLI:
            p = np.asarray(self.p)
            pos = p > 0
            lp = np.log(p[pos])
            return float(np.dot(p[pos], lp ** 2) - np.dot(p[pos], lp) ** 2)
        raise ModeError("closed-form information variance needs a bernoulli model")


@dataclass(frozen=True)
class PartitionSpec:
    """Cylinder partition of depth ``depth``; cells have diameter ``2**-depth``."""

    depth: int
    diameter_bound: float = 0.0

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("partition depth must be >= 1")
        if not self.diameter_bound:
            object.__setattr__(self, "diameter_bound", 2.0 ** -self.depth)

    @classmethod
    def finer_than(cls, epsilon) -> "PartitionSpec":
        """The coarsest cylinder partition with diameter ``< eps``."""
        return cls(max(ball_depth(epsilon), 1))


def partition_entropy(mu: MeasureModel, xi: PartitionSpec) -> float:
    """``H_mu(xi) = -sum_C mu(C) log mu(C)`` over the cells of ``xi``."""
    r = xi.depth
    if mu.kind == BERNOULLI:
        return r * mu.entropy_rate()
    if mu.kind == MARKOV:
        return float(-_xlogx(mu.pi).sum()) + (r - 1) * mu.entropy_rate()
    k = mu.alphabet_size
    if k ** r > ENUMERATION_LIMIT:
        raise ValueError("partition too fine to enumerate for this model")
    if mu.kind == EMPIRICAL:
        segs = mu._segments(r)
        _, counts = np.unique(np.array(segs), axis=0, return_counts=True)
        q = counts / counts.sum()
        return float(-_xlogx(q).sum())
    masses = np.array([mu.cylinder_mass(w) for w in product(range(k), repeat=r)])
    return float(-_xlogx(masses).sum())


def dynamical_entropy(mu: MeasureModel, xi: PartitionSpec, n_ladder=range(1, 9)) -> float:
    """``h_mu(f, xi)``; exact for bernoulli, markov and mixtures.

    For cylinder generators the value does not depend on the depth. For an
    empirical model it is the plug-in estimate ``max H(xi^n)/n`` over the
    top third of ``n_ladder`` (cells of ``xi^n`` are cylinders of length
    ``n + depth - 1``).
    """
    if mu.kind != EMPIRICAL:
        return mu.entropy_rate()
    ns = tail_window(n_ladder)
    return max(partition_entropy(mu, PartitionSpec(n + xi.depth - 1)) / n for n in ns)


# -- Katok covering numbers -------------------------------------------------------------------

@dataclass(frozen=True)
class KatokEstimate:
    epsilon: float
    delta: float
    n_ladder: tuple
    rate: float
    sample_size: int
    seed: int
    raw_rate: float = float("nan")
    log_counts: tuple = ()
    mode: str = "sampled"
    sigma: float = 0.0
    lower_bound: bool = False

    def as_rows(self):
        return [(n, c, c / n) for n, c in zip(self.n_ladder, self.log_counts)]


def _ball_words_length(sys: SymbolicSystem | None, n: int, eps) -> tuple:
    """(word length whose cylinders the balls are, whether the count is a bracket end)."""
    if sys is None or sys.metric_kind == ULTRAMETRIC:
        L = ball_length(n, eps)
        return L, False
    if not head_resolved(sys, eps):
        raise ModeError("Katok counts on the grid need a resolved head (grid spacing > eps)")
    return n, True


def _ranked_log_count(log_masses, delta) -> float:
    """Log of the fewest cylinders with total mass ``> 1 - delta``.

    ``log_masses`` lists one entry per class as ``(log mass per word, log count)``,
    heaviest first.
    """
    need = 1.0 - delta + 1e-12   # masses at the threshold up to rounding do not exceed it
    cum = 0.0
    log_total = -math.inf
    for lm, lc in log_masses:
        mass = math.exp(lm + lc)
        if cum + mass > need:
            rem = max(need - cum, 0.0)
            if lm > -700 and rem / math.exp(lm) < 1e15:
                logc = math.log(math.floor(rem / math.exp(lm)) + 1)
            else:
                logc = math.log(rem) - lm
            return float(np.logaddexp(log_total, min(logc, lc)))
        cum += mass
        log_total = float(np.logaddexp(log_total, lc))
    return log_total


def _bernoulli_classes(p, L) -> list:
    """Classes of equal-mass words of length ``L`` as ``(log mass, log count)``, heaviest first."""
    p = np.asarray(p, dtype=float)
    pos = p > 0
    vals, sizes = np.unique(np.round(np.log(p[pos]), 14), return_counts=True)
    q = len(vals)
    out = []
    if q <= 4:
        for comp in _compositions(L, q):
            c = np.array(comp)
            lc = gammaln(L + 1) - gammaln(c + 1).sum() + float(np.dot(c, np.log(sizes)))
            out.append((float(np.dot(c, vals)), float(lc)))
    else:
        # log masses affine in the symbol index: classes by the index sum
        lp = np.log(p[pos])
        idx = np.flatnonzero(pos)
        slope = (lp[-1] - lp[0]) / (idx[-1] - idx[0])
        if np.max(np.abs(lp - (lp[0] + slope * (idx - idx[0])))) > 1e-12 or not np.all(np.diff(idx) == 1):
            raise ModeError("exact Katok counts need at most four distinct probabilities "
                            "or log-affine probabilities")
        k = len(idx)
        logc = np.zeros(1)
        for _ in range(L):
            new = np.full(len(logc) + k - 1, -np.inf)
            for a in range(k):
                new[a:a + len(logc)] = np.logaddexp(new[a:a + len(logc)], logc)
            logc = new
        for s, lc in enumerate(logc):
            out.append((float(L * lp[0] + slope * s), float(lc)))
    out.sort(key=lambda t: -t[0])
    return out


def _compositions(L, q):
    if q == 1:
        yield (L,)
        return
    for i in range(L + 1):
        for rest in _compositions(L - i, q - 1):
            yield (i,) + rest


def exact_log_covering(mu: MeasureModel, L: int, delta: float) -> float:
    """Exact ``log N`` for cylinders of length ``L`` (classes or enumeration)."""
    if mu.kind == BERNOULLI:
        try:
            return _ranked_log_count(_bernoulli_classes(mu.p, L), delta)
        except ModeError:
            pass
    k = mu.alphabet_size
    if k ** L > ENUMERATION_LIMIT:
        raise ModeError(f"{k}**{L} words are too many to enumerate")
    masses = np.array([mu.cylinder_mass(w) for w in product(range(k), repeat=L)])
    masses = np.sort(masses[masses > 0])[::-1]
    return _ranked_log_count([(math.log(m), 0.0) for m in masses], delta)


def sampled_log_covering(info: np.ndarray, delta: float) -> float:
    """Importance estimate of ``log N`` from sampled informations ``-log mu[w]``.

    The sample is ranked by mass; the heaviest ``floor((1 - delta) S) + 1``
    draws carry sample mass ``> 1 - delta``, and each stands for
    ``1 / (S mu[w])`` cylinders.
    """
    S = len(info)
    t = int(math.floor((1 - delta) * S)) + 1
    taken = np.sort(info, kind="stable")[:t]
    return float(logsumexp(taken) - math.log(S))


def _corrected_rate(ns, Ls, log_counts, sigma, delta):
    z = norm.ppf(1 - delta)
    G = [c - z * sigma * math.sqrt(L) + (0.5 * math.log(L) if sigma > 1e-12 else 0.0)
         for c, L in zip(log_counts, Ls)]
    half = sorted(ns)[len(ns) // 2:] if len(ns) >= 4 else sorted(ns)
    pick = [i for i, n in enumerate(ns) if n in set(half)]
    if len(pick) < 2:
        return G[-1] / ns[-1]
    return linear_slope([ns[i] for i in pick], [G[i] for i in pick])


def katok_entropy(mu: MeasureModel, epsilon, delta: float, n_ladder, sample_size: int = 10_000,
                  seed: int = 0, sys: SymbolicSystem | None = None, mode: str = "sampled",
                  workers: int = 1) -> KatokEstimate:
    """Katok entropy ``h^K_mu(eps, delta)`` from covering numbers along ``n_ladder``."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if mode == "sampled" and sample_size < 10 / delta:
        raise ValueError(f"sample_size {sample_size} cannot resolve delta={delta}; need >= {math.ceil(10 / delta)}")
    ns = sorted(int(n) for n in n_ladder)
    if len(ns) < 2:
        raise ValueError("n ladder needs at least two values")
    eps = as_fraction(epsilon)
    if mu.kind == MIXTURE:
        parts = [katok_entropy(c, epsilon, delta, ns, sample_size, seed + 7919 * (i + 1), sys, mode, workers)
                 for i, c in enumerate(mu.components)]
        w = mu.weights
        return KatokEstimate(float(epsilon), delta, tuple(ns), float(np.dot(w, [p.rate for p in parts])),
                             sample_size, seed, float(np.dot(w, [p.raw_rate for p in parts])),
                             tuple(np.dot(w, [p.log_counts for p in parts]).tolist()), mode,
                             float(np.dot(w, [p.sigma for p in parts])), parts[0].lower_bound)
    lengths = [_ball_words_length(sys, n, eps) for n in ns]
    Ls = [L for L, _ in lengths]
    bracket = lengths[0][1]
    if min(Ls) < 1:
        return KatokEstimate(float(epsilon), delta, tuple(ns), 0.0, sample_size, seed, 0.0,
                             tuple(0.0 for _ in ns), mode, 0.0, bracket)
    if mode == "exact":
        log_counts = [exact_log_covering(mu, L, delta) for L in Ls]
        if mu.kind == BERNOULLI:
            sigma = math.sqrt(max(mu.information_variance(), 0.0))
        else:
            sigma = _enumerated_sigma(mu, max(Ls))
    elif mode == "sampled":
        words = mu.sample_words(max(Ls), sample_size, seed, workers)
        lm = mu.word_log_masses(words)
        infos = [-lm[:, L - 1] for L in Ls]
        log_counts = [sampled_log_covering(i, delta) for i in infos]
        sigma = math.sqrt(max(float(np.var(infos[-1])) / Ls[-1], 0.0))
    else:
        raise ValueError(f"unknown Katok mode {mode!r}")
    tail = set(tail_window(ns))
    raw = max(c / n for c, n in zip(log_counts, ns) if n in tail)
    rate = _corrected_rate(ns, Ls, log_counts, sigma, delta)
    return KatokEstimate(float(epsilon), delta, tuple(ns), float(rate), sample_size, seed, float(raw),
                         tuple(float(c) for c in log_counts), mode, float(sigma), bracket)


def _enumerated_sigma(mu, L):
    k = mu.alphabet_size
    L = min(L, max(1, int(math.log(ENUMERATION_LIMIT) / math.log(max(k, 2)))))
    masses = np.array([mu.cylinder_mass(w) for w in product(range(k), repeat=L)])
    masses = masses[masses > 0]
    info = -np.log(masses)
    mean = float(np.dot(masses, info))
    return math.sqrt(max(float(np.dot(masses, (info - mean) ** 2)) / L, 0.0))


# -- families of measures and the normalised quantities --------------------------------------------------

@dataclass(frozen=True)
class SequenceFamily:
    """A declared rule ``eps -> (system, measure)`` producing a sequence of measures."""

    name: str
    builder: object = field(compare=False, default=None)

    def at(self, epsilon):
        return self.builder(epsilon)

    @classmethod
    def constant(cls, mu: MeasureModel, sys: SymbolicSystem | None = None) -> "SequenceFamily":
        s = sys if sys is not None else SymbolicSystem(mu.alphabet_size)
        return cls(f"constant:{mu.ident}", lambda e: (s, mu))

    @classmethod
    def refined_grid(cls, rule: str = "uniform") -> "SequenceFamily":
        if rule != "uniform":
            raise ValueError(f"unknown refined-grid rule {rule!r}")

        def build(e):
            s = refined_grid(e)
            k = s.alphabet_size
            return s, MeasureModel.bernoulli([1.0 / k] * k)
        return cls("refined_grid:uniform", build)


def _family_list(fam):
    return list(fam) if isinstance(fam, (list, tuple)) else [fam]


def H_delta_K(family, delta: float, epsilon_ladder, n_ladder=range(10, 31), sample_size: int = 10_000,
              seed: int = 0, mode: str = "sampled", extrapolation: str = LINEAR_FIT,
              workers: int = 1) -> MdimEstimate:
    """Katok entropy at each rung divided by ``|log eps|``, extrapolated; the max over
    the given families. Always flagged as a lower bound for the sup over all sequences."""
    eps = [float(e) for e in epsilon_ladder]
    best = None
    for fam in _family_list(family):
        def rung(e, fam=fam):
            s, mu = fam.at(e)
            k = katok_entropy(mu, e, delta, n_ladder, sample_size, seed, s, mode, workers)
            return k.rate / log_scale(e)
        vals = [rung(e) for e in eps]
        est = make_estimate(eps, vals, extrapolation, lower_bound=True,
                            notes={"family": fam.name, "delta": delta, "mode": mode, "seed": seed})
        if best is None or est.value > best.value:
            best = est
    return best


def H_of_mu(family, epsilon_ladder, extrapolation: str = LINEAR_FIT) -> MdimEstimate:
    """``inf_{|xi| < eps} h(f, xi)`` per rung divided by ``|log eps|``, extrapolated;
    the max over the given families, flagged as a lower bound."""
    eps = [float(e) for e in epsilon_ladder]
    best = None
    for fam in _family_list(family):
        vals = []
        for e in eps:
            _, mu = fam.at(e)
            vals.append(dynamical_entropy(mu, PartitionSpec.finer_than(e)) / log_scale(e))
        est = make_estimate(eps, vals, extrapolation, lower_bound=True, notes={"family": fam.name})
        if best is None or est.value > best.value:
            best = est
    return best


@dataclass(frozen=True)
class SandwichRow:
    epsilon: float
    katok: float
    partition: float
    katok_finer: float
    slack: float

    @property
    def holds(self) -> bool:
        return (self.katok <= self.partition + self.slack
                and self.partition <= self.katok_finer + self.slack)


def entropy_sandwich(mu: MeasureModel, epsilon_ladder, delta: float, n_ladder=range(10, 31),
                     sample_size: int = 10_000, seed: int = 0, mode: str = "sampled",
                     slack: float = 0.05) -> list:
    """Compare ``h^K(eps, delta)``, ``inf_{|xi|<eps} h(f, xi)`` and ``h^K(eps/4, delta)`` per rung."""
    rows = []
    for e in epsilon_ladder:
        kat = katok_entropy(mu, e, delta, n_ladder, sample_size, seed, None, mode).rate
        fine = katok_entropy(mu, float(e) / 4, delta, n_ladder, sample_size, seed, None, mode).rate
        part = dynamical_entropy(mu, PartitionSpec.finer_than(e))
        rows.append(SandwichRow(float(e), kat, part, fine, slack))
    return rows
