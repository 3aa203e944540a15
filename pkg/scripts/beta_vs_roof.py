"""Flow mean-dimension bound beta for roofs over the refined grid, against mdim / int rho.

    python3 scripts/beta_vs_roof.py --out results/beta_vs_roof
"""
import argparse
from pathlib import Path

from mdimlab.counting import upper_mdim
from mdimlab.dyncore import Potential, RefinedGridLadder
from mdimlab.outputs import ResultSet, build_manifest, write_results
from mdimlab.suspension import RoofFunction, beta_root


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/beta_vs_roof", type=Path)
    ap.add_argument("--threads", default=1, type=int)
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    sys = RefinedGridLadder()
    eps, ns = [1 / 4, 1 / 8, 1 / 16], [120, 150, 180, 210, 240]
    base = upper_mdim(sys, None, None, eps, ns).value
    roofs = {f"constant {c}": Potential.constant(c) for c in (0.5, 1, 2, 3, 4)}
    roofs["1 + embed"] = Potential.coordinate_affine(1, 1)
    roofs["2 - embed"] = Potential.coordinate_affine(-1, 2)
    rows = []
    for name, rho in roofs.items():
        cert = beta_root(sys, None, RoofFunction(rho), eps, ns, workers=args.threads)
        lo, hi = (min(rho.table(sys.system_at(e)).min() for e in eps), max(rho.table(sys.system_at(e)).max() for e in eps))
        rows.append((name, cert.beta, base / hi, base / lo))
        print(f"{name:12s} beta={cert.beta:.4f}  mdim/sup={base / hi:.4f}  mdim/inf={base / lo:.4f}")
    rs = ResultSet()
    rs.csv("beta.csv", ["roof", "beta", "mdim_over_sup_rho", "mdim_over_inf_rho"], rows)
    write_results(args.out, rs, build_manifest("beta_vs_roof", "", "", {"epsilon": eps, "n": ns}, rs))
