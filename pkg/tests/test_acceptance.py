"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Experiments with a shipped config in ``configs/`` are run through the CLI
runner, so the same files also feed the determinism check.
"""

import json
import math
import time
from fractions import Fraction
from itertools import product
from pathlib import Path

import numpy as np
import pytest

import oracles
from mdimlab.cli import EXIT_OK, run
from mdimlab.config import load_config
from mdimlab.counting import minimal_spanning_Q, partition_function_P
from mdimlab.dyncore import (GRID, Point, Potential, SymbolicSystem, ball_length, bowen_distance,
                             separation_length, word_birkhoff_sum)
from mdimlab.estimates import log_scale
from mdimlab.levelsets import LevelSetWindow, level_restricted_P
from mdimlab.measures import MeasureModel, SequenceFamily, entropy_sandwich, exact_log_covering, katok_entropy
from mdimlab.outputs import MANIFEST, check_manifest, read_csv, stable_manifest_text
from mdimlab.specification import (GluingRequest, GluingSchedule, build_K_alpha_point, glue,
                                   separated_heads, verify_membership_trend)
from mdimlab.suspension import (FlowBall, RoofFunction, Suspension, SuspensionPoint, abramov_check,
                                abramov_entropy)

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
EMBED = Potential.embed()
TWO = SymbolicSystem(2)
GOLDEN = SymbolicSystem(2, forbidden_words=[(1, 1)], spec_gap=1)

# config file -> command; these are the experiments behind criteria 1-7
RUNS = {
    "c1_full_shift_pressure": "pressure",
    "c1_full_shift_mdim": "mdim",
    "c2_refined_grid": "bowen-mdim",
    "A1_verify_vp_psi_zero": "verify-vp",
    "A1_verify_vp_psi_phi": "verify-vp",
    "c4_katok_p0.5": "katok",
    "c4_katok_p0.9": "katok",
    "c6_build_point_full2": "build-point",
    "c6_build_point_golden": "build-point",
    "c7_suspension_c1": "suspension",
    "c7_suspension_c2": "suspension",
    "c7_suspension_c4": "suspension",
}


@pytest.fixture(scope="session")
def runner(tmp_path_factory):
    """Memoised ``(name, workers) -> (exit status, output dir, seconds)``."""
    done = {}
    root = tmp_path_factory.mktemp("acceptance")

    def go(name, workers=1):
        if (name, workers) not in done:
            cfg = load_config(CONFIGS / f"{name}.yaml", RUNS[name])
            out = root / f"{name}-w{workers}"
            t = time.perf_counter()
            status, _, _ = run(RUNS[name], cfg, out, workers, cache=None)
            done[name, workers] = (status, out, time.perf_counter() - t)
        return done[name, workers]
    return go


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return emit


def _rows(path):
    head, *body = read_csv(path)
    return [dict(zip(head, r)) for r in body]


def _json(path):
    return json.loads(Path(path).read_text())


# -- 1. finite alphabet ----------------------------------------------------------------------------

def test_criterion_1_finite_alphabet(runner, report):
    t0 = time.perf_counter()
    checks = []
    st, out, _ = runner("c1_full_shift_pressure")
    n_min = min(load_config(CONFIGS / "c1_full_shift_pressure.yaml").ladders.n)
    k = 3
    for r in _rows(out / "rates.csv"):
        p = float(r["rate_P"])
        checks.append(math.log(k) - 1e-12 <= p <= math.log(k) * (1 + 2 / n_min))
    st2, out2, _ = runner("c1_full_shift_mdim")
    n_min2 = min(load_config(CONFIGS / "c1_full_shift_mdim.yaml").ladders.n)
    for r in _rows(out2 / "rates.csv"):
        p = float(r["rate_P"]) * log_scale(float(r["epsilon"]))
        checks.append(math.log(2) - 1e-12 <= p <= math.log(2) * (1 + 2 / n_min2))
    value = _json(out2 / "estimate.json")["value"]
    checks.append(abs(value) <= 0.02)
    dt = time.perf_counter() - t0
    ok = st == st2 == EXIT_OK and all(checks) and dt < 10
    assert report(1, ok, f"rates within [log k, log k(1+2/n_min)] on all rungs, upper_mdim={value:.4f}, {dt:.1f}s")


# -- 2. positive mean dimension -------------------------------------------------------------------

def test_criterion_2_refined_grid(runner, report):
    st, out, dt = runner("c2_refined_grid")
    est = _json(out / "estimate.json")
    cap, bowen = est["alternate"], est["value"]
    ok = st == EXIT_OK and abs(cap - 1) <= 0.05 and abs(bowen - cap) <= 0.05 and dt < 120
    assert report(2, ok, f"upper_mdim={cap:.4f} bowen_mdim={bowen:.4f}, {dt:.1f}s")


# -- 3. level-set spectrum ---------------------------------------------------------------------------

def test_criterion_3_spectrum_equality(runner, report):
    details, ok, total = [], True, 0.0
    for name in ("A1_verify_vp_psi_zero", "A1_verify_vp_psi_phi"):
        st, out, dt = runner(name)
        total += dt
        rep = _json(out / "report.json")
        worst = 0.0
        for f in sorted(out.glob("spectrum_delta_*.csv")):
            for r in _rows(f):
                vals = [float(r[c]) for c in ("lhs", "rhs_partition", "rhs_H", "rhs_K")]
                worst = max(worst, max(vals) - min(vals))
        ok = ok and st == EXIT_OK and rep["verdict"] == "PASS" and worst <= 0.1
        details.append(f"{name.rsplit('_', 1)[1]}: worst gap {worst:.4f}")
    ok = ok and total < 600
    assert report(3, ok, "; ".join(details) + f", {total:.1f}s")


# -- 4. Katok entropy -------------------------------------------------------------------------------

def test_criterion_4_katok(runner, report):
    details, ok, total = [], True, 0.0
    for name in ("c4_katok_p0.5", "c4_katok_p0.9"):
        st, out, dt = runner(name)
        total += dt
        doc = _json(out / "katok.json")
        h = doc["entropy_rate"]
        rates = [e["rate"] for e in doc["estimates"]]
        ok = ok and st == EXIT_OK and all(abs(r - h) <= 0.1 * h for r in rates)
        ok = ok and max(rates) - min(rates) <= 0.1 * h
        details.append(f"h={h:.4f} rates={[round(r, 4) for r in rates]}")
    ok = ok and total < 30
    assert report(4, ok, "; ".join(details) + f", {total:.1f}s")


# -- 5. entropy sandwich -----------------------------------------------------------------------------

def test_criterion_5_sandwich(report):
    worst_upper, worst_lower, ok = -math.inf, -math.inf, True
    for p in (0.5, 0.7, 0.9):
        mu = MeasureModel.bernoulli([p, 1 - p])
        for delta in (0.1, 0.3):
            for r in entropy_sandwich(mu, [0.5, 0.25, 0.125], delta, range(10, 31)):
                worst_upper = max(worst_upper, r.katok - r.partition)
                worst_lower = max(worst_lower, r.partition - r.katok_finer)
                ok = ok and r.katok <= r.partition and r.partition <= r.katok_finer + 0.05
    assert report(5, ok, f"max(h^K(eps) - h_part)={worst_upper:.2e} (needs <= 0), "
                         f"max(h_part - h^K(eps/4))={worst_lower:.2e} (needs <= 0.05)")


# -- 6. specification factory ----------------------------------------------------------------------

def test_criterion_6_specification(runner, report):
    t0 = time.perf_counter()
    ok = True
    for name in ("c6_build_point_full2", "c6_build_point_golden"):
        st, out, _ = runner(name)
        cfg = load_config(CONFIGS / f"{name}.yaml")
        cert = _json(out / "certificate.json")
        prefix = tuple(int(c) for c in cert["prefix"])
        x = Point(prefix, tuple(cert["tail"]))
        for r in _rows(out / "checkpoints.csv"):
            m = int(r["m"])
            dev = abs(float(word_birkhoff_sum(cfg.system, EMBED, x.word(0, m))) / m - cfg.point.alpha)
            ok = ok and abs(dev - float(r["deviation"])) <= 1e-12 and dev <= float(r["envelope"])
        ok = ok and st == EXIT_OK
    # separation persistence on 64-point families
    sched = GluingSchedule.geometric(levels=3, epsilon=0.5, delta=0.1, block_length=8, block_count=2)
    min_ratio = math.inf
    for sys, n, eps in ((TWO, 6, 0.25), (GOLDEN, 8, 0.3)):
        heads = separated_heads(sys, n, eps, 64, seed=1)
        pts = [build_K_alpha_point(sys, EMBED, 0.3, sched, seed=7, head=h) for h in heads]
        e = Fraction(eps)
        for t in pts[0][1].times:
            for i in range(64):
                for j in range(i + 1, 64):
                    d = bowen_distance(sys, pts[i][0], pts[j][0], t)
                    min_ratio = min(min_ratio, float(d / e))
        for (x, cert), h in zip(pts, heads):
            ok = ok and verify_membership_trend(sys, EMBED, 0.3, x, cert.checkpoints(), cert).passed
    ok = ok and min_ratio > 0.75
    # injectivity of gluing on random segment families
    rng = np.random.default_rng(5)
    seen = {}
    for _ in range(400):
        segs = tuple(tuple(int(a) for a in rng.integers(0, 2, 3)) for _ in range(3))
        z = glue(TWO, GluingRequest(tuple((Point(w, (0,)), 3) for w in segs), 1, 0.75), seed=9)
        if z in seen:
            ok = ok and seen[z] == segs
        seen[z] = segs
    dt = time.perf_counter() - t0
    ok = ok and dt < 30
    assert report(6, ok, f"certificates recomputed, min separation {min_ratio:.3f} eps (> 0.75), "
                         f"{len(seen)} distinct glued points, {dt:.1f}s")


# -- 7. suspension ------------------------------------------------------------------------------------

def test_criterion_7_suspension(runner, report):
    t0 = time.perf_counter()
    ok = True
    betas = []
    for c in (1, 2, 4):
        st, out, _ = runner(f"c7_suspension_c{c}")
        cert = _json(out / "beta.json")
        mdim = dict((t, v) for t, v in cert["curve"])[0.0]
        betas.append(cert["beta"])
        ok = ok and st == EXIT_OK and abs(cert["beta"] - mdim / c) <= 0.01
    # Abramov's formula for constant roofs, exactly
    for p in (0.5, 0.7, 0.9):
        mu = MeasureModel.bernoulli([p, 1 - p])
        for c in (1, 2, 4):
            ok = ok and abramov_entropy(mu, Suspension(TWO, RoofFunction(Potential.constant(c)))) == mu.entropy_rate() / c
    # flow-ball membership: sampled members satisfy the product inclusion, no violations
    violations = 0
    x = Point((0, 1, 1, 0, 1, 0, 0, 1, 1, 1, 0), (0, 1))
    for c, eps in ((1, Fraction(1, 10)), (2, Fraction(1, 5))):
        s = Suspension(TWO, RoofFunction(Potential.constant(c)))
        ball = FlowBall(SuspensionPoint(x, eps / 2), 6, eps)
        members, _ = oracles.flow_ball_members(s, ball, 1000, 11)
        ok = ok and len(members) == 1000
        violations += sum(not ball.product_contains(s, q) for q in members)
    # H(mu_rho) * int rho = H(mu) on constant-roof uniform Bernoulli families
    gaps = []
    for c in (1, 2, 4):
        lhs, rhs = abramov_check(SequenceFamily.refined_grid(), RoofFunction(Potential.constant(c)),
                                 [1 / 4, 1 / 8, 1 / 16, 1 / 32], T=120, samples=500)
        gaps.append(abs(lhs - rhs))
    dt = time.perf_counter() - t0
    ok = ok and violations == 0 and max(gaps) <= 0.05 and dt < 120
    assert report(7, ok, f"betas={[round(b, 4) for b in betas]}, violations={violations}, "
                         f"max Abramov gap={max(gaps):.4f}, {dt:.1f}s")


# -- 8. brute-force equivalence -------------------------------------------------------------------------

PSI2 = Potential.cylinder([0.3, -0.2, 1.1, 0.4], depth=2)


def _enum_sum(sys, psi, n, eps, L, pick, keep=None):
    """Log-sum over admissible words of length ``L`` of the best (or worst) weight over extensions."""
    k = sys.alphabet_size
    r = psi.depth if psi is not None else 1
    ext = max(n + r - 1 - L, 0)
    scale = abs(math.log(eps))
    vals = []
    for w in product(range(k), repeat=L):
        if not sys.extends_forever(w) or (keep is not None and not keep(w)):
            continue
        if psi is None:
            vals.append(0.0)
            continue
        cands = [float(word_birkhoff_sum(sys, psi, w + e, n)) for e in product(range(k), repeat=ext)
                 if sys.extends_forever(w + e)]
        vals.append(scale * pick(cands))
    return oracles.lse(vals)


def test_criterion_8_brute_force(report):
    worst, count = 0.0, 0

    def cmp(a, b):
        nonlocal worst, count
        count += 1
        worst = max(worst, abs(a - b) if math.isfinite(a) or math.isfinite(b) else 0.0)

    # partition functions, depth up to 12, by word enumeration
    for sys, psi, n, eps in ((TWO, PSI2, 10, 0.2), (GOLDEN, PSI2, 11, 0.3), (SymbolicSystem(3), None, 7, 0.3),
                             (SymbolicSystem(3), Potential.cylinder([0.5, -1, 0.2]), 8, 0.3), (TWO, None, 9, 0.1)):
        Ls, Lb = separation_length(n, eps), ball_length(n, eps)
        assert max(Ls, Lb) <= 12
        cmp(partition_function_P(sys, None, psi, n, eps), _enum_sum(sys, psi, n, eps, Ls, max))
        cmp(minimal_spanning_Q(sys, None, psi, n, eps), _enum_sum(sys, psi, n, eps, Lb, min))
    # the same from pairwise Bowen distances between explicit points
    for sys, n, eps, T in ((TWO, 6, 0.3, 8), (GOLDEN, 5, 0.2, 8), (SymbolicSystem(3), 3, 0.3, 5)):
        psi = PSI2 if sys.alphabet_size == 2 else Potential.cylinder([0.5, -1, 0.2])
        cmp(partition_function_P(sys, None, psi, n, eps), oracles.ultra_P(sys, psi, n, eps, T))
        cmp(minimal_spanning_Q(sys, None, psi, n, eps), oracles.ultra_Q(sys, psi, n, eps, T))
    for k, n, eps, T in ((3, 2, 0.3, 4), (4, 1, 0.2, 4), (2, 3, 0.3, 5)):
        sys = SymbolicSystem(k, GRID)
        cmp(partition_function_P(sys, None, EMBED, n, eps), oracles.grid_P(sys, EMBED, n, eps, T))
        cmp(minimal_spanning_Q(sys, None, None, n, eps), oracles.grid_Q(sys, n, eps, T))
    # level-set counts, depth up to 16
    phi2 = Potential.cylinder([0, 1, 1, Fraction(1, 2)], depth=2)
    for sys, n, eps in ((TWO, 15, 0.25), (GOLDEN, 15, 0.25), (SymbolicSystem(3), 9, 0.25)):
        for phi, alpha, delta in ((EMBED, 0.4, 0.05), (phi2 if sys.alphabet_size == 2 else EMBED, 0.6, 0.1)):
            for n_min in (None, 4):
                for psi in (None, PSI2 if sys.alphabet_size == 2 else Potential.cylinder([0.5, -1, 0.2])):
                    win = LevelSetWindow(phi, alpha, delta, n_min)
                    L = separation_length(n, eps)
                    assert L <= 16
                    cmp(level_restricted_P(sys, phi, psi, win, n, eps),
                        _enum_sum(sys, psi, n, eps, L, max, lambda w: win.qualifies(sys, w)))
    # Katok covering numbers, depth up to 12
    chain = MeasureModel.markov([[0.9, 0.1], [0.4, 0.6]])
    for mu in (MeasureModel.bernoulli([0.7, 0.3]), MeasureModel.bernoulli([0.5, 0.3, 0.2]), chain):
        k = mu.alphabet_size
        for delta in (0.1, 0.3):
            for L in range(1, 13):
                if k ** L > 300_000:
                    break
                masses = [mu.cylinder_mass(w) for w in product(range(k), repeat=L)]
                cmp(exact_log_covering(mu, L, delta), math.log(oracles.katok_count(masses, delta)))
        est = katok_entropy(mu, 0.25, 0.1, range(4, 11), mode="exact")
        for n, c in zip(est.n_ladder, est.log_counts):
            masses = [mu.cylinder_mass(w) for w in product(range(k), repeat=ball_length(n, 0.25))]
            cmp(c, math.log(oracles.katok_count(masses, 0.1)))
    ok = worst <= 1e-10
    assert report(8, ok, f"{count} comparisons, max |difference| in log space {worst:.2e}")


# -- 9. determinism across workers -------------------------------------------------------------------

def test_criterion_9_determinism(runner, report):
    mismatched = []
    for name in RUNS:
        st1, base, _ = runner(name, 1)
        assert not check_manifest(base)
        ref = {p.name: p.read_bytes() for p in base.iterdir() if p.name != MANIFEST}
        for w in (4, 8):
            st, out, _ = runner(name, w)
            got = {p.name: p.read_bytes() for p in out.iterdir() if p.name != MANIFEST}
            if st != st1 or got != ref or stable_manifest_text(out) != stable_manifest_text(base):
                mismatched.append(f"{name}@{w}")
    ok = not mismatched
    assert report(9, ok, f"{len(RUNS)} configs at 1/4/8 workers"
                         + (f", mismatches: {mismatched}" if mismatched else ", all byte-identical"))
