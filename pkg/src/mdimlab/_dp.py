"""Transfer-style dynamic programme over words of a fixed length.

Computes ``log sum_w exp(weight(w))`` over admissible words ``w`` of length
``L`` that meet a restriction, where the weight is the (scaled) Birkhoff sum
of a cylinder potential over ``n_terms`` terms. Terms reaching past the end of
the word are resolved by a sup or inf over admissible continuations.

Optionally only words whose Birkhoff averages of a second potential stay in a
window ``[alpha - delta, alpha + delta]`` are kept. Running sums of that
potential are tracked exactly on an integer lattice when its values allow it,
and otherwise in buckets (flagged in the result).

The state is the last ``R`` symbols; all reductions run in a fixed order so the
result does not depend on how callers schedule work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .dyncore import SymbolicSystem, as_fraction, word_index

NEG = -np.inf
MAX_LATTICE = 4096


@dataclass(frozen=True)
class Window:
    """Keep words with ``|S_m phi / m - alpha| <= delta`` at the checked ``m``.

    ``n_min=None`` checks only the last complete sum (``m = L - depth + 1``);
    otherwise every ``m`` in ``[n_min, L - depth + 1]`` is checked.
    """

    table: tuple
    depth: int
    alpha: Fraction
    delta: Fraction
    n_min: int | None = None


@dataclass(frozen=True)
class DPResult:
    log_value: float
    exact: bool


def _lattice(table, delta):
    """Integer coordinates for the values of ``table``.

    Returns (base, step, ints, exact).
    """
    vals = [as_fraction(v) for v in table]
    base = min(vals)
    diffs = [v - base for v in vals if v != base]
    if not diffs:
        return base, Fraction(1), [0] * len(vals), True
    num = 0
    den = 1
    for d in diffs:
        num = math.gcd(num, d.numerator)
        den = den * d.denominator // math.gcd(den, d.denominator)
    step = Fraction(num, den)
    ints = [int((v - base) / step) for v in vals]
    if max(ints) <= MAX_LATTICE:
        return base, step, ints, True
    step = as_fraction(delta) / 4 if delta > 0 else max(diffs) / MAX_LATTICE
    ints = [int(round((v - base) / step)) for v in vals]
    return base, step, ints, False


def _bounds(m, win: Window, base, step):
    lo = m * (win.alpha - win.delta - base) / step
    hi = m * (win.alpha + win.delta - base) / step
    return math.ceil(lo), math.floor(hi)


def _logaddexp_into(dst, start, src):
    seg = dst[start:start + len(src)]
    np.logaddexp(seg, src, out=seg)


class WordDP:
    """Weighted word sums for one system, potential and restriction."""

    def __init__(self, sys: SymbolicSystem, psi_table=None, psi_depth: int = 1,
                 prefix=(), window: Window | None = None):
        self.sys = sys
        self.k = sys.alphabet_size
        self.psi = None if psi_table is None else np.asarray(psi_table, dtype=float)
        self.rpsi = psi_depth if psi_table is not None else 1
        self.prefix = tuple(prefix)
        self.window = window
        rphi = window.depth if window is not None else 1
        F = sys.forbidden_length
        self.R = max(self.rpsi - 1, rphi - 1, F - 1, 0)
        if window is not None:
            self.base, self.step, self.u, self.lattice_exact = _lattice(window.table, window.delta)
        else:
            self.base, self.step, self.u, self.lattice_exact = Fraction(0), Fraction(1), [0], True
        self._tables()

    # -- precomputation ----------------------------------------------------
    def _tables(self):
        k, R = self.k, self.R
        S = k ** R
        self.S = S
        nxt = np.zeros((S, k), dtype=np.int64)
        ok = np.zeros((S, k), dtype=bool)
        pa = np.zeros((S, k))
        ua = np.zeros((S, k), dtype=np.int64)
        live = np.zeros(S, dtype=bool)
        sys = self.sys
        F = sys.forbidden_length
        for s, ctx in enumerate(product(range(k), repeat=R)):
            live[s] = sys.extends_forever(ctx)
            for a in range(k):
                full = ctx + (a,)
                nxt[s, a] = word_index(full[1:], k) if R else 0
                ok[s, a] = sys.admissible(full[-F:]) if F else True
                if self.psi is not None:
                    pa[s, a] = self.psi[word_index(full[len(full) - self.rpsi:], k)]
                if self.window is not None:
                    r = self.window.depth
                    ua[s, a] = self.u[word_index(full[len(full) - r:], k)]
        self.nxt, self.ok, self.pa, self.ua, self.live = nxt, ok, pa, ua, live

    def _word_terms(self, w, n_terms):
        """In-word psi terms, phi lattice sum list, admissibility for a short word."""
        k = self.k
        psi_sum = 0.0
        if self.psi is not None:
            r = self.rpsi
            for j in range(min(n_terms, len(w) - r + 1)):
                psi_sum += self.psi[word_index(w[j:j + r], k)]
        return psi_sum

    def _window_ok_word(self, w):
        win = self.window
        if win is None:
            return True
        r = win.depth
        M = len(w) - r + 1
        checks = [M] if win.n_min is None else range(max(win.n_min, 1), M + 1)
        total = 0
        sums = {}
        for j in range(max(M, 0)):
            total += self.u[word_index(w[j:j + r], self.k)]
            sums[j + 1] = total
        for m in checks:
            if m < 1:
                continue
            lo, hi = _bounds(m, win, self.base, self.step)
            if not lo <= sums[m] <= hi:
                return False
        return True

    # -- extension over continuations -------------------------------------------
    def _extension(self, L, n_terms, agg, domain):
        """Continuation data per end state of a length-``L`` word.

        Returns ``(feasible, value)``: ``feasible[s]`` says some continuation
        follows the restriction's prefix forever; ``value[s]`` is the sup/inf
        of the remaining psi terms over continuations in ``domain`` (NaN when
        there is none).
        """
        k, S = self.k, self.S
        r = self.rpsi
        e_val = max(0, n_terms + r - 1 - L) if self.psi is not None else 0
        e_pref = max(0, len(self.prefix) - L)
        E = max(e_val, e_pref)
        worst = NEG if agg == "sup" else np.inf
        better = np.maximum if agg == "sup" else np.minimum
        eye = np.eye(S, dtype=bool)
        feas = eye.copy()
        reach = eye.copy()
        val = np.where(eye, 0.0, worst)
        zero = np.zeros_like(self.pa)
        for step in range(E):
            i = L + step
            j = i - r + 1
            add = self.pa if (self.psi is not None and 0 <= j < n_terms) else zero
            forced = self.prefix[i] if i < len(self.prefix) else None
            nf = np.zeros((S, S), dtype=bool)
            nr = np.zeros((S, S), dtype=bool)
            nv = np.full((S, S), worst)
            for s in range(S):
                for a in range(k):
                    if not self.ok[s, a]:
                        continue
                    t = self.nxt[s, a]
                    follows = forced is None or a == forced
                    if follows:
                        nf[:, t] |= feas[:, s]
                    if domain == "X" or follows:
                        src_ok = reach[:, s] if domain == "X" else feas[:, s]
                        cand = np.where(src_ok, val[:, s] + add[s, a], worst)
                        nv[:, t] = better(nv[:, t], cand)
                        nr[:, t] |= src_ok
            feas, reach, val = nf, nr, nv
        live = self.live[None, :]
        feasible = (feas & live).any(axis=1)
        ok = (reach & live) if domain == "X" else (feas & live)
        v = np.where(ok, val, worst)
        v = v.max(axis=1) if agg == "sup" else v.min(axis=1)
        value = np.where(ok.any(axis=1), v, np.nan)
        return feasible, value

    # -- main entry ------------------------------------------------------------
    def log_sum(self, L: int, n_terms: int, agg: str = "sup", domain: str = "Z") -> DPResult:
        """``log sum_w exp(sup/inf over continuations of S_{n_terms} psi)``.

        The sum runs over words of length ``L`` meeting the restriction.
        ``domain='Z'`` takes the sup/inf over the restriction, ``'X'`` over
        the whole space (as needed for cover sums).
        """
        if L < 0 or n_terms < 0:
            raise ValueError("negative length")
        if L <= self.R:
            return DPResult(self._short(L, n_terms, agg, domain), self.lattice_exact)
        feasible, ext = self._extension(L, n_terms, agg, domain)
        k, S, R = self.k, self.S, self.R
        win = self.window
        umax = max(self.u) if win else 0
        r_phi = win.depth if win else 1
        arr = np.full((S, 1), NEG)
        for w in product(range(k), repeat=R):
            if not self._prefix_ok(w) or not self.sys.admissible(w):
                continue
            if not self._partial_window_ok(w):
                continue
            us = 0
            if win is not None:
                for j in range(R - r_phi + 1):
                    us += self.u[word_index(w[j:j + r_phi], k)]
            if us >= arr.shape[1]:
                arr = np.concatenate([arr, np.full((S, us - arr.shape[1] + 1), NEG)], axis=1)
            s = word_index(w, k)
            arr[s, us] = np.logaddexp(arr[s, us], self._word_terms(w, n_terms))
        offset = 0
        M = L - r_phi + 1
        for i in range(R, L):
            forced = self.prefix[i] if i < len(self.prefix) else None
            j = i - self.rpsi + 1
            use_psi = self.psi is not None and 0 <= j < n_terms
            jphi = i - r_phi + 1
            new = np.full((S, arr.shape[1] + umax), NEG)
            for s in range(S):
                row = arr[s]
                if not np.isfinite(row).any():
                    continue
                for a in range(k):
                    if not self.ok[s, a] or (forced is not None and a != forced):
                        continue
                    du = int(self.ua[s, a]) if (win is not None and jphi >= 0) else 0
                    src = row + self.pa[s, a] if use_psi else row
                    _logaddexp_into(new[self.nxt[s, a]], du, src)
            m = jphi + 1
            if win is not None and jphi >= 0:
                if (win.n_min is not None and m >= max(win.n_min, 1)) or (win.n_min is None and m == M):
                    lo, hi = _bounds(m, win, self.base, self.step)
                    cols = np.arange(new.shape[1]) + offset
                    new[:, (cols < lo) | (cols > hi)] = NEG
            finite_cols = np.isfinite(new).any(axis=0)
            if not finite_cols.any():
                return DPResult(float(NEG), self.lattice_exact)
            first = int(np.argmax(finite_cols))
            last = len(finite_cols) - int(np.argmax(finite_cols[::-1]))
            arr = new[:, first:last]
            offset += first
        total = NEG
        for s in range(S):
            if not feasible[s] or np.isnan(ext[s]):
                continue
            fin = arr[s][np.isfinite(arr[s])]
            if len(fin):
                total = np.logaddexp(total, _lse(fin) + ext[s])
        return DPResult(float(total), self.lattice_exact)

    def _prefix_ok(self, w):
        p = self.prefix
        return all(a == p[i] for i, a in enumerate(w[:len(p)]))

    def _partial_window_ok(self, w):
        """Window checks whose sums are complete inside the initial block."""
        win = self.window
        if win is None or win.n_min is None:
            return True
        r = win.depth
        total = 0
        for j in range(len(w) - r + 1):
            total += self.u[word_index(w[j:j + r], self.k)]
            m = j + 1
            if m >= max(win.n_min, 1):
                lo, hi = _bounds(m, win, self.base, self.step)
                if not lo <= total <= hi:
                    return False
        return True

    def _short(self, L, n_terms, agg, domain):
        """Words of length ``L <= R``: enumerate length-R extensions and group."""
        k, R = self.k, self.R
        feasible, ext = self._extension(R, n_terms, agg, domain)
        meets = set()
        best = {}
        for w in product(range(k), repeat=R):
            if not self.sys.admissible(w):
                continue
            head = w[:L]
            if not self._window_ok_word(head):
                continue
            s = word_index(w, k)
            zok = self._prefix_ok(w) and feasible[s]
            if zok:
                meets.add(head)
            if np.isnan(ext[s]) or (domain == "Z" and not zok):
                continue
            v = self._word_terms(w, n_terms) + ext[s]
            if head not in best:
                best[head] = v
            else:
                best[head] = max(best[head], v) if agg == "sup" else min(best[head], v)
        vals = [best[h] for h in sorted(meets) if h in best]
        if not vals:
            return float(NEG)
        return float(_lse(np.array(vals)))


def _lse(a: np.ndarray) -> float:
    m = np.max(a)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(a - m))))
