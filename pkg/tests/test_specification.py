from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mdimlab.dyncore import GRID, Point, Potential, SymbolicSystem, bowen_distance
from mdimlab.levelsets import SpecificationRequired
from mdimlab.specification import (GapTooSmall, GluingRequest, GluingSchedule, ScheduleInfeasible,
                                   build_K_alpha_point, glue, segment_starts, separated_heads,
                                   verify_membership_trend)

TWO = SymbolicSystem(2)
GOLDEN = SymbolicSystem(2, forbidden_words=[(1, 1)], spec_gap=1)
EMBED = Potential.embed()
SMALL = GluingSchedule.geometric(levels=3, epsilon=0.5, delta=0.1, block_length=8, block_count=2)


def test_glue_concatenates_on_full_shift():
    a, b = Point.constant(0), Point.constant(1)
    z = glue(TWO, GluingRequest(((a, 3), (b, 3)), 0, 0.75))
    assert z.word(0, 6) == (0, 0, 0, 1, 1, 1)
    # the copy agrees up to the ball length, so the shadow distance is below eps, not 0
    assert bowen_distance(TWO, z, a, 3) == Fraction(1, 2) < Fraction(3, 4)
    assert bowen_distance(TWO, z.shift(3), b, 3) < Fraction(3, 4)


def test_glue_shadows_within_eps():
    rng = np.random.default_rng(0)
    for eps in (0.75, 0.3, 0.1):
        segs = tuple((Point(tuple(rng.integers(0, 2, 9)), (1, 0)), L) for L in (4, 2, 5))
        req = GluingRequest(segs, 2, eps)
        z = glue(TWO, req, seed=4)
        for (x, L), s in zip(segs, segment_starts(TWO, req, seed=4)):
            assert bowen_distance(TWO, z.shift(s), x, L) < Fraction(eps)


def test_golden_connector():
    x = Point((0, 1), (0,))
    y = Point((1, 0), (0,))
    req = GluingRequest(((x, 2), (y, 2)), 1, 0.75)
    z = glue(GOLDEN, req)
    assert z.word(0, 5) == (0, 1, 0, 1, 0)
    assert segment_starts(GOLDEN, req) == [0, 3]
    with pytest.raises(ValueError):
        glue(GOLDEN, GluingRequest(((x, 2), (y, 2)), 0, 0.75))


def test_declared_gap_too_small():
    # after 1 only 00 may follow, so one filler symbol cannot join ...1 to 1...
    sft = SymbolicSystem(2, forbidden_words=[(1, 1), (1, 0, 1)], spec_gap=1)
    x, y = Point((0, 1), (0,)), Point((1, 0), (0,))
    with pytest.raises(GapTooSmall):
        glue(sft, GluingRequest(((x, 2), (y, 2)), 1, 0.75))
    z = glue(sft, GluingRequest(((x, 2), (y, 2)), 2, 0.75))
    assert z.word(0, 6) == (0, 1, 0, 0, 1, 0)


def test_glue_needs_specification():
    with pytest.raises(SpecificationRequired):
        glue(SymbolicSystem(2, spec_gap=None), GluingRequest(((Point.constant(0), 2),), 0, 0.5))


@given(st.lists(st.lists(st.integers(0, 1), min_size=3, max_size=3), min_size=2, max_size=4),
       st.lists(st.lists(st.integers(0, 1), min_size=3, max_size=3), min_size=2, max_size=4))
@settings(max_examples=80, deadline=None)
def test_glue_is_injective(a, b):
    if len(a) != len(b):
        return
    za = glue(TWO, GluingRequest(tuple((Point(tuple(w), (0,)), 3) for w in a), 1, 0.75), seed=9)
    zb = glue(TWO, GluingRequest(tuple((Point(tuple(w), (0,)), 3) for w in b), 1, 0.75), seed=9)
    assert (za == zb) == (a == b)


# -- level-set factory ---------------------------------------------------------------------

def test_certificate_verified_by_recomputation():
    x, cert = build_K_alpha_point(TWO, EMBED, 0.5, SMALL, seed=1)
    rep = verify_membership_trend(TWO, EMBED, 0.5, x, cert.checkpoints(), cert)
    assert rep.passed
    for r in cert.levels:
        direct = abs(sum(x.word(0, r.t)) / r.t - 0.5)
        assert r.deviation == pytest.approx(direct, abs=1e-12)
        assert r.deviation <= r.bound
    assert cert.times == sorted(cert.times) and len(set(cert.times)) == 3
    assert [r.bound for r in cert.levels] == sorted([r.bound for r in cert.levels], reverse=True)


def test_boundary_alpha_gives_all_ones():
    x, cert = build_K_alpha_point(TWO, EMBED, 1, SMALL, seed=0)
    assert set(x.word(0, cert.length + 5)) == {1}
    assert all(r.deviation == 0 for r in cert.levels)


def test_grid_factory_is_deterministic():
    g8 = SymbolicSystem(8, GRID)
    a = build_K_alpha_point(g8, EMBED, 0.3, SMALL, seed=5)
    b = build_K_alpha_point(g8, EMBED, 0.3, SMALL, seed=5)
    assert a[0] == b[0] and a[1].to_json() == b[1].to_json()
    assert build_K_alpha_point(g8, EMBED, 0.3, SMALL, seed=6)[0] != a[0]


def test_golden_factory():
    x, cert = build_K_alpha_point(GOLDEN, EMBED, 0.3, SMALL, seed=2)
    GOLDEN.check_point(x)
    assert verify_membership_trend(GOLDEN, EMBED, 0.3, x, cert.checkpoints(), cert).passed


def test_infeasible_level_is_named():
    tight = GluingSchedule((0.5, 0.25), (0.1, 0.0), (8, 7), (1, 1))
    with pytest.raises(ScheduleInfeasible) as e:
        build_K_alpha_point(TWO, EMBED, 0.5, tight, seed=0)
    assert e.value.level == 2
    with pytest.raises(ScheduleInfeasible):
        build_K_alpha_point(TWO, EMBED, 1.5, SMALL)


def test_schedule_validation():
    with pytest.raises(ValueError):
        GluingSchedule((0.5, 0.5), (0.1, 0.1), (4, 8), (1, 1))
    with pytest.raises(ValueError):
        GluingSchedule((0.5, 0.25), (0.1, 0.2), (4, 8), (1, 1))


def test_trend_examples():
    zeros = verify_membership_trend(TWO, EMBED, 0.5, Point.constant(0), [4, 8, 16])
    assert not zeros.passed and zeros.first_failure == 4 and zeros.deviations[0] == 0.5
    per = verify_membership_trend(TWO, EMBED, 0.5, Point.periodic((0, 1)), range(1, 40))
    assert per.passed
    assert all(d <= 1 / m for d, m in zip(per.deviations, range(1, 40)))


def test_nesting_of_level_cylinders():
    deeper = GluingSchedule.geometric(levels=4, epsilon=0.5, delta=0.1, block_length=8, block_count=2)
    x3, c3 = build_K_alpha_point(TWO, EMBED, 0.4, SMALL, seed=3)
    x4, c4 = build_K_alpha_point(TWO, EMBED, 0.4, deeper, seed=3)
    assert x4.word(0, c3.length) == x3.word(0, c3.length)
    assert c4.times[:3] == c3.times


@pytest.mark.parametrize("sys,n,eps", [(TWO, 6, 0.25), (GOLDEN, 8, 0.3), (SymbolicSystem(8, GRID), 4, 0.125)],
                         ids=["full2", "golden", "grid8"])
def test_separation_persists(sys, n, eps):
    size = 64 if sys.metric_kind != GRID else 32
    heads = separated_heads(sys, n, eps, size, seed=1)
    pts = [build_K_alpha_point(sys, EMBED, 0.3, SMALL, seed=7, head=h) for h in heads]
    e = Fraction(eps)
    base = [sys.complete(h) for h in heads]
    for i in range(size):
        for j in range(i + 1, size):
            assert bowen_distance(sys, base[i], base[j], n) > e
    for t in pts[0][1].times:
        for i in range(size):
            for j in range(i + 1, size):
                assert bowen_distance(sys, pts[i][0], pts[j][0], t) > 3 * e / 4
    assert len({p[0] for p in pts}) == size
