import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mdimlab.dyncore import (Potential, RefinedGridLadder, SymbolicSystem, separation_length,
                             word_birkhoff_sum)
from mdimlab.levelsets import (HK, H, PARTITION, LevelSetWindow, SpecificationRequired,
                               constrained_variational_rhs, gibbs_tilt, level_mdim, level_restricted_P,
                               verify_theorem1)

TWO = SymbolicSystem(2)
GOLDEN = SymbolicSystem(2, forbidden_words=[(1, 1)], spec_gap=1)
THREE = SymbolicSystem(3)
EMBED = Potential.embed()
PHI2 = Potential.cylinder([0, 1, 1, Fraction(1, 2)], depth=2)
PSI2 = Potential.cylinder([0.3, -0.2, 1.1, 0.4], depth=2)


def enumerate_level_P(sys, phi, psi, window, n, eps):
    """Sum over all admissible words of the separation length that pass the window."""
    L = separation_length(n, eps)
    scale = abs(math.log(eps))
    r = psi.depth if psi is not None else 1
    ext = max(n + r - 1 - L, 0)
    k = sys.alphabet_size
    vals = []
    for w in product(range(k), repeat=L):
        if not sys.extends_forever(w) or not window.qualifies(sys, w):
            continue
        if psi is None:
            vals.append(0.0)
            continue
        best = -math.inf
        for e in product(range(k), repeat=ext):
            if sys.extends_forever(w + e):
                best = max(best, float(word_birkhoff_sum(sys, psi, w + e, n)))
        vals.append(scale * best)
    return oracles.lse(vals)


def test_window_count_example():
    w = LevelSetWindow(EMBED, 0.5, 0.05)
    L = separation_length(12, 0.25)
    expected = math.log(sum(math.comb(L, j) for j in range(L + 1) if abs(Fraction(j, L) - Fraction(1, 2)) <= Fraction(1, 20)))
    assert level_restricted_P(TWO, EMBED, None, w, 12, 0.25) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize("sys,n,eps", [(TWO, 13, 0.25), (GOLDEN, 14, 0.24), (THREE, 8, 0.25), (TWO, 9, 0.1)],
                         ids=["full2-14", "golden-16", "full3-9", "full2-12"])
@pytest.mark.parametrize("phi,alpha,delta", [(EMBED, 0.4, 0.05), (PHI2, 0.6, 0.1)], ids=["embed", "depth2"])
@pytest.mark.parametrize("n_min", [None, 4])
@pytest.mark.parametrize("psi", [None, "psi"])
def test_level_P_matches_enumeration(sys, n, eps, phi, alpha, delta, n_min, psi):
    if sys.alphabet_size == 3:
        phi = EMBED if phi is EMBED else Potential.cylinder([0, 1, 0.5, 0.5, 1, 0, 1, 0, 0.25], depth=2)
        psi_p = Potential.cylinder([0.5, -1, 0.2]) if psi else None
    else:
        psi_p = PSI2 if psi else None
    w = LevelSetWindow(phi, alpha, delta, n_min)
    got = level_restricted_P(sys, phi, psi_p, w, n, eps)
    assert got == pytest.approx(enumerate_level_P(sys, phi, psi_p, w, n, eps), abs=1e-9)


def test_level_P_against_metric_oracle():
    w = LevelSetWindow(EMBED, 0.5, 0.2)
    n, eps = 3, 0.3
    L = separation_length(n, eps)
    keep = lambda x: w.qualifies(TWO, x.word(0, L))
    assert level_restricted_P(TWO, EMBED, PSI2, w, n, eps) == pytest.approx(
        oracles.ultra_P(TWO, PSI2, n, eps, 6, keep=keep), abs=1e-10)


def test_empty_window_is_minus_infinity():
    w = LevelSetWindow(EMBED, 2.0, 0.1)
    assert level_restricted_P(TWO, EMBED, None, w, 6, 0.25) == -math.inf


@pytest.mark.parametrize("sys", [TWO, GOLDEN])
def test_nested_in_n_min(sys):
    for n_min in range(1, 8):
        a = level_restricted_P(sys, EMBED, None, LevelSetWindow(EMBED, 0.4, 0.1, n_min), 10, 0.25)
        b = level_restricted_P(sys, EMBED, None, LevelSetWindow(EMBED, 0.4, 0.1, n_min + 1), 10, 0.25)
        assert a <= b + 1e-12


def test_shrinking_delta_shrinks_window_sums():
    vals = [level_restricted_P(THREE, EMBED, None, LevelSetWindow(EMBED, 0.5, d), 10, 0.25)
            for d in (0.3, 0.1, 0.05, 0.01)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


@given(st.lists(st.integers(0, 1), min_size=4, max_size=30), st.integers(0, 1))
@settings(max_examples=80, deadline=None)
def test_extension_moves_the_average_by_at_most_the_slack(word, a):
    # one more symbol moves the average by at most osc(phi)/(m+1)
    w = tuple(word)
    m = len(w)
    mean = word_birkhoff_sum(TWO, EMBED, w) / m
    win = LevelSetWindow(EMBED, mean, 0)
    assert win.qualifies(TWO, w)
    assert LevelSetWindow(EMBED, mean, 0, slack=Fraction(1, m + 1)).qualifies(TWO, w + (a,))


def test_level_mdim_fixed_alphabet_vanishes():
    est = level_mdim(TWO, EMBED, None, 0.3, [0.5, 0.25, 0.125], [100, 140, 180], (0.1, 0.05))
    assert abs(est.value) <= 0.03
    assert est.notes["delta_schedule"] == [0.1, 0.05]


def test_level_mdim_refined_grid_centre():
    est = level_mdim(RefinedGridLadder(), EMBED, None, 0.5, [1 / 4, 1 / 8, 1 / 16], [60, 90, 120], (0.1, 0.02))
    assert est.value == pytest.approx(1.0, abs=0.06)
    with pytest.raises(ValueError):
        level_mdim(TWO, EMBED, None, 0.5, [0.5, 0.25], [10, 20, 30], (0.05, 0.1))


# -- Gibbs solve ------------------------------------------------------------------------------

def test_gibbs_uniform_centre():
    sol = gibbs_tilt([0, 1 / 3, 2 / 3, 1], [0, 0, 0, 0], 0.5)
    assert sol.entropy == pytest.approx(math.log(4), abs=1e-9)
    assert sol.t == pytest.approx(0.0, abs=1e-8)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=8), st.floats(0.05, 0.95), st.floats(-1, 1))
@settings(max_examples=80, deadline=None)
def test_gibbs_meets_constraint(vals, frac, b):
    v = np.array(vals)
    if v.max() - v.min() < 1e-3:
        return
    alpha = v.min() + frac * (v.max() - v.min())
    sol = gibbs_tilt(v, b * v ** 2, alpha)
    assert abs(float(np.dot(sol.p, v)) - alpha) <= 1e-10


def test_gibbs_mean_increases_in_t():
    v = np.array([0.0, 0.2, 0.9, 1.0])
    b = np.array([0.3, -0.1, 0.0, 0.5])
    means = [float(np.dot(gibbs_tilt(v, b, a).p, v)) for a in np.linspace(0.05, 0.95, 12)]
    ts = [gibbs_tilt(v, b, a).t for a in np.linspace(0.05, 0.95, 12)]
    assert all(y > x for x, y in zip(ts, ts[1:]))
    assert means == pytest.approx(list(np.linspace(0.05, 0.95, 12)), abs=1e-10)


def test_gibbs_beats_random_feasible_candidates():
    rng = np.random.default_rng(3)
    v = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    b = np.array([0.4, -0.3, 0.1, 0.0, 0.2])
    alpha = 0.35
    sol = gibbs_tilt(v, b, alpha)
    best = sol.entropy + sol.integral_psi
    checked = 0
    while checked < 1000:
        q = rng.dirichlet(np.ones(5))
        # move mass between the end symbols until the constraint holds exactly
        g = np.array([0.0, 0.0, 0.0, 0.0, 1.0]) - np.array([1.0, 0.0, 0.0, 0.0, 0.0])
        lam = (alpha - q @ v) / (g @ v)
        q = q + lam * g
        if q.min() < 0:
            continue
        checked += 1
        pos = q > 0
        val = float(-(q[pos] * np.log(q[pos])).sum() + q @ b)
        assert val <= best + 1e-9


def test_gibbs_endpoints_and_infeasible():
    edge = gibbs_tilt([0, 0.5, 1], [0.0, 0.0, 0.0], 1.0)
    assert edge.p == pytest.approx((0, 0, 1)) and edge.entropy == 0.0
    assert not gibbs_tilt([0, 1], [0, 0], 1.5).feasible


# -- variational side and comparison ----------------------------------------------------------

@pytest.mark.parametrize("which", [PARTITION, H])
def test_rhs_fixed_alphabet_vanishes(which):
    est = constrained_variational_rhs(TWO, EMBED, None, 0.3, [0.5, 0.25, 0.125], which)
    assert abs(est.value) <= 1e-9


def test_rhs_refined_grid_centre_is_one():
    eps = [1 / 4, 1 / 8, 1 / 16]
    for which in (PARTITION, H):
        assert constrained_variational_rhs(RefinedGridLadder(), EMBED, None, 0.5, eps, which).value == pytest.approx(1.0, abs=1e-9)
    k = constrained_variational_rhs(RefinedGridLadder(), EMBED, None, 0.5, eps, HK, 0.1, range(10, 21), 2000)
    assert k.value == pytest.approx(1.0, abs=0.05)
    assert k.lower_bound


def test_rhs_infeasible_alpha_is_nan():
    est = constrained_variational_rhs(TWO, EMBED, None, 1.5, [0.5, 0.25], PARTITION)
    assert math.isnan(est.value) and est.notes["infeasible_rungs"] == [0.5, 0.25]


def test_verify_refuses_without_specification():
    no_spec = SymbolicSystem(2, spec_gap=None)
    with pytest.raises(SpecificationRequired):
        verify_theorem1(no_spec, EMBED, None, [0.5], [0.5, 0.25], [20, 30, 40])


def test_verify_fixed_alphabet():
    rep = verify_theorem1(TWO, EMBED, None, [0.3, 0.5], [0.5, 0.25, 0.125], [60, 80, 100],
                          deltas=(0.1,), window_deltas=(0.1, 0.05), katok_n=range(10, 19), sample_size=2000)
    assert rep.verdict and rep.verdict_text == "PASS"
    c = rep.curves[0]
    assert len(c.rows()) == 2 and c.rows()[0][0] == 0.3
    assert all(p["interior"] for p in rep.per_alpha)
