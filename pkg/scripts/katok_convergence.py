"""Katok entropy of Bernoulli measures along growing n ladders, for several delta.

    python3 scripts/katok_convergence.py --out results/katok_convergence
"""
import argparse
from pathlib import Path

from mdimlab.measures import MeasureModel, katok_entropy
from mdimlab.outputs import ResultSet, build_manifest, write_results


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/katok_convergence", type=Path)
    ap.add_argument("--probs", default=[0.5, 0.7, 0.9], type=float, nargs="+")
    ap.add_argument("--deltas", default=[0.05, 0.1, 0.3, 0.5], type=float, nargs="+")
    ap.add_argument("--samples", default=10_000, type=int)
    ap.add_argument("--seed", default=0, type=int)
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    rows = []
    for p in args.probs:
        mu = MeasureModel.bernoulli([p, 1 - p])
        h = mu.entropy_rate()
        for d in args.deltas:
            for top in (15, 20, 30, 40):
                for mode in ("sampled", "exact"):
                    est = katok_entropy(mu, 0.25, d, range(top // 3, top + 1), args.samples, args.seed, mode=mode)
                    rows.append((p, d, top, mode, est.rate, est.raw_rate, h, (est.rate - h) / h))
            print(f"p={p} delta={d}: " + ", ".join(f"{r[3][0]}{r[2]}={r[4]:.4f}" for r in rows[-8:]) + f"  (h={h:.4f})")
    rs = ResultSet()
    rs.csv("katok.csv", ["p", "delta", "n_max", "mode", "rate", "raw_rate", "entropy", "relative_error"], rows)
    write_results(args.out, rs, build_manifest("katok_convergence", "", "", {"seed": args.seed}, rs))
