import math

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mdimlab.caratheodory import (INFINITE, ZERO, CoverCandidate, UncoveredError, bowen_mdim,
                                  classify, cover_sum, critical_exponent, mass_distribution_bound,
                                  outer_measure_m, uniform_cover, uniform_cover_logs, validate_cover)
from mdimlab.dyncore import (BowenBallSpec, CylinderSet, FiniteSet, Point, Potential,
                             RefinedGridLadder, SymbolicSystem)

LOG2 = math.log(2)
TWO = SymbolicSystem(2)
GOLDEN = SymbolicSystem(2, forbidden_words=[(1, 1)], spec_gap=1)
PSI2 = Potential.cylinder([0.3, -0.2, 1.1, 0.4], depth=2)
NS = [20, 30, 40, 50]


def test_uniform_cover_sum_closed_form():
    # at eps = 1/4 a length-n ball is a cylinder of length n + 2
    for n, s in [(3, 0.0), (4, 0.5), (5, 1.2)]:
        cover = uniform_cover(TWO, None, n, 0.25)
        assert len(cover.balls) == 2 ** (n + 2)
        assert cover_sum(TWO, None, None, cover, s, 0.25) == pytest.approx((n + 2) * LOG2 - s * n)
        assert uniform_cover_logs(TWO, None, None, 0.25, [n])[n] == pytest.approx((n + 2) * LOG2)


def test_single_ball_cover():
    Z = CylinderSet((0, 1, 1, 0, 1))
    ball = BowenBallSpec(Point((0, 1, 1, 0, 1)), 3, 0.25)
    c = 0.7
    val = cover_sum(TWO, Z, Potential.constant(c), CoverCandidate((ball,)), 0.4, 0.25)
    assert val == pytest.approx(-0.4 * 3 + math.log(4) * 3 * c)


def test_cover_sum_of_explicit_cover_matches_uniform_engine():
    for sys in (TWO, GOLDEN):
        for n in (2, 3):
            cover = uniform_cover(sys, CylinderSet((0,)), n, 0.3)
            s = 0.3
            assert cover_sum(sys, CylinderSet((0,)), PSI2, cover, s, 0.3) == pytest.approx(
                uniform_cover_logs(sys, CylinderSet((0,)), PSI2, 0.3, [n])[n] - s * n, abs=1e-10)


def test_non_covering_candidate_rejected():
    cover = uniform_cover(TWO, None, 3, 0.25)
    short = CoverCandidate(cover.balls[:-1])
    with pytest.raises(UncoveredError) as err:
        validate_cover(TWO, None, short)
    assert len(err.value.word) == 5
    with pytest.raises(UncoveredError):
        validate_cover(TWO, FiniteSet((Point.constant(1),)), CoverCandidate(cover.balls[:1]))
    with pytest.raises(ValueError):
        validate_cover(TWO, None, cover, N=4)


@pytest.mark.parametrize("sys", [TWO, GOLDEN], ids=["full2", "golden"])
@pytest.mark.parametrize("psi", [None, PSI2], ids=["zero", "psi2"])
@pytest.mark.parametrize("s", [0.0, 0.4, 0.9, 1.5])
def test_bracket_contains_exact_restricted_infimum(sys, psi, s):
    eps, N, W = 0.3, 2, 3
    Z = CylinderSet((0,))
    br = outer_measure_m(sys, Z, psi, s, N, eps, window=W)
    # the exact inf over covers with lengths in [N, N + W] sits between the
    # true inf (bounded below) and the best uniform cover
    exact = oracles.ultra_cover_inf(sys, psi, s, N, N + W, eps, Z.word)
    assert br.log_lower <= exact + 1e-10
    assert exact <= br.log_upper + 1e-10


def test_trend_examples():
    for s, want in [(LOG2 + 0.1, ZERO), (LOG2 - 0.1, INFINITE)]:
        brs = [outer_measure_m(TWO, None, None, s, N, 0.25) for N in NS]
        assert classify(brs) == (want, True)
    one = FiniteSet((Point.constant(0),))
    assert classify([outer_measure_m(TWO, one, None, 0.2, N, 0.25) for N in NS])[0] == ZERO


@pytest.mark.parametrize("k", [2, 3, 5])
def test_critical_exponent_full_shift(k):
    c = critical_exponent(SymbolicSystem(k), None, None, 0.25, NS)
    assert c.s_star == pytest.approx(math.log(k), abs=1e-3)
    assert c.certified and c.bracket[0] <= math.log(k) <= c.bracket[1]


def test_critical_exponent_golden_mean_and_constant_shift():
    c = critical_exponent(GOLDEN, None, None, 0.25, NS)
    assert c.s_star == pytest.approx(math.log((1 + 5 ** 0.5) / 2), abs=1e-3)
    base = critical_exponent(TWO, None, None, 0.25, NS).s_star
    shifted = critical_exponent(TWO, None, Potential.constant(0.3), 0.25, NS).s_star
    assert shifted == pytest.approx(base + math.log(4) * 0.3, abs=2e-3)


def test_critical_exponent_of_subset_is_smaller():
    whole = critical_exponent(GOLDEN, None, PSI2, 0.3, NS).s_star
    cyl = critical_exponent(GOLDEN, CylinderSet((1, 0)), PSI2, 0.3, NS).s_star
    point = critical_exponent(GOLDEN, FiniteSet((Point.periodic((0, 1)),)), PSI2, 0.3, NS).s_star
    tol = 2e-3
    assert cyl <= whole + tol and point <= cyl + tol
    # (01)^inf reads the pairs 01 and 10, so its average is (-0.2 + 1.1)/2
    assert point == pytest.approx(0.45 * abs(math.log(0.3)), abs=tol)


@given(st.floats(-1, 2), st.floats(0.01, 1))
@settings(max_examples=40, deadline=None)
def test_outer_measure_monotone_in_s(s, ds):
    for N in (3, 10):
        a = outer_measure_m(GOLDEN, None, PSI2, s, N, 0.3)
        b = outer_measure_m(GOLDEN, None, PSI2, s + ds, N, 0.3)
        assert b.log_upper <= a.log_upper + 1e-12
        assert b.log_lower <= a.log_lower + 1e-12
        assert a.log_lower <= a.log_upper


@given(st.floats(-1, 2), st.integers(1, 30))
@settings(max_examples=40, deadline=None)
def test_outer_measure_lower_bound_nondecreasing_in_N(s, N):
    a = outer_measure_m(TWO, None, PSI2, s, N, 0.3)
    b = outer_measure_m(TWO, None, PSI2, s, N + 1, 0.3)
    assert b.log_lower >= a.log_lower - 1e-12
    # the window-min upper bound is monotone where the uniform sums grow
    if s < critical_exponent(TWO, None, PSI2, 0.3, NS).bracket[0]:
        assert b.log_upper >= a.log_upper - 1e-12


def test_mass_bound_on_grid_uses_resolved_head():
    sys = RefinedGridLadder().system_at(0.25)
    mb = mass_distribution_bound(sys, None, None, 0.25)
    assert mb.available and mb.rate == pytest.approx(math.log(4))
    assert not mass_distribution_bound(SymbolicSystem(5, "sup_weighted_grid"), None, None, 0.3).available


def test_bowen_mdim_fixed_alphabet():
    est = bowen_mdim(TWO, None, None, [0.5, 0.25, 0.125], NS, n_ladder=range(100, 301, 20))
    assert abs(est.value) <= 0.02
    assert abs(est.value - est.notes["capacity"]) <= 0.02
    assert est.notes["equals_capacity"] and est.notes["below_capacity"]


def test_bowen_mdim_refined_grid_equals_capacity():
    eps = [1 / 4, 1 / 8, 1 / 16]
    est = bowen_mdim(RefinedGridLadder(), None, None, eps, NS, n_ladder=range(120, 241, 30))
    assert est.value == pytest.approx(1.0, abs=0.05)
    assert abs(est.value - est.notes["capacity"]) <= 0.05


def test_bowen_mdim_rejects_increasing_ladder():
    with pytest.raises(ValueError):
        bowen_mdim(TWO, None, None, [0.25, 0.5], NS)
