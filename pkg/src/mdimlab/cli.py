"""Command-line front end.

``mdimlab <command> --config run.yaml --out DIR`` validates the config, runs
one experiment, writes CSV/JSON/plot-data files plus ``manifest.json`` into
``DIR`` and prints a short summary. Exit codes: 0 success (or PASS), 1 FAIL,
2 invalid config, 3 refused (hypotheses not met), 4 construction infeasible.
"""

import argparse
import sys as _sys
import time

from . import __version__
from .caratheodory import bowen_mdim
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .counting import partition_table, pressure_rate, restriction_id, upper_mdim
from .dyncore import RefinedGridLadder, system_ident
from .estimates import log_scale
from .levelsets import (PARTITION, SpecificationRequired, constrained_variational_rhs, level_mdim,
                        verify_theorem1)
from .measures import katok_entropy
from .outputs import ResultSet, RunCache, build_manifest, write_results
from .specification import (GapTooSmall, GluingSchedule, ScheduleInfeasible, build_K_alpha_point,
                            verify_membership_trend)
from .suspension import RoofFunction, beta_root

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_REFUSED, EXIT_INFEASIBLE = 0, 1, 2, 3, 4


def _ident(p):
    return p.ident if p is not None else "zero"


def _require_N(cfg):
    if cfg.ladders.N is None:
        raise ConfigError("ladders.N", "required by the bowen-mdim command")
    return cfg.ladders.N


def _fixed_system(cfg, command):
    if isinstance(cfg.system, RefinedGridLadder):
        raise ConfigError("system.kind", f"the {command} command needs a single shift, not a ladder")
    return cfg.system


def _base_provenance(cfg):
    return {"system": system_ident(cfg.system), "potential": _ident(cfg.psi),
            "restriction": restriction_id(cfg.restriction), "extrapolation": cfg.extrapolation}


# -- commands: each returns (results, provenance, exit status, summary lines) -------------------

def cmd_pressure(cfg: RunConfig, workers: int):
    L = cfg.ladders
    table = partition_table(cfg.system, cfg.restriction, cfg.psi, L.epsilon, L.n, workers)
    rs = ResultSet()
    rs.csv("table.csv", ["n", "epsilon", "log_Pn", "log_Qn", "provenance"],
           [(r.n, r.epsilon, r.log_Pn, r.log_Qn, r.provenance) for r in table.rows])
    summary = []
    if len(L.n) >= 3:
        rates = [(e, pressure_rate(table, e, "P"), pressure_rate(table, e, "Q")) for e in L.epsilon]
        rs.csv("rates.csv", ["epsilon", "rate_P", "rate_Q"], rates)
        rs.plot("pressure_rate.dat", [r[0] for r in rates], [r[1] for r in rates], "epsilon", "rate_P")
        summary = [f"eps={e:g}: P={p:.6f} Q={q:.6f}" for e, p, q in rates]
    prov = _base_provenance(cfg)
    prov.update(ladders={"epsilon": L.epsilon, "n": L.n},
                mode=sorted({r.provenance for r in table.rows}))
    return rs, prov, EXIT_OK, summary


def cmd_mdim(cfg: RunConfig, workers: int):
    L = cfg.ladders
    est = upper_mdim(cfg.system, cfg.restriction, cfg.psi, L.epsilon, L.n, cfg.extrapolation, workers=workers)
    rs = ResultSet()
    rs.csv("rates.csv", ["epsilon", "rate_P", "rate_Q"],
           zip(est.epsilon_ladder, est.per_epsilon_rate, est.notes["q_per_epsilon_rate"]))
    rs.json("estimate.json", est.as_dict())
    rs.plot("mdim_rate.dat", est.epsilon_ladder, est.per_epsilon_rate, "epsilon", "rate")
    prov = _base_provenance(cfg)
    prov.update(ladders={"epsilon": L.epsilon, "n": L.n}, mode=est.notes["provenance"])
    return rs, prov, EXIT_OK, [f"upper_mdim={est.value:.6f} (Q-based {est.alternate:.6f})"]


def cmd_bowen_mdim(cfg: RunConfig, workers: int):
    L = cfg.ladders
    N = _require_N(cfg)
    est = bowen_mdim(cfg.system, cfg.restriction, cfg.psi, L.epsilon, N, L.n, cfg.extrapolation, workers=workers)
    rs = ResultSet()
    rows = [(e, b[0], b[1], r * log_scale(e))
            for e, b, r in zip(est.epsilon_ladder, est.notes["brackets"], est.per_epsilon_rate)]
    rs.csv("critical.csv", ["epsilon", "s_low", "s_high", "s_star"], rows)
    rs.json("estimate.json", est.as_dict())
    rs.plot("bowen_rate.dat", est.epsilon_ladder, est.per_epsilon_rate, "epsilon", "rate")
    prov = _base_provenance(cfg)
    prov.update(ladders={"epsilon": L.epsilon, "n": L.n, "N": N})
    return rs, prov, EXIT_OK, [f"bowen_mdim={est.value:.6f} capacity={est.alternate:.6f}"]


def cmd_katok(cfg: RunConfig, workers: int):
    k = cfg.katok
    sys = cfg.system.system_at(k.epsilon)
    rs = ResultSet()
    doc, summary = [], []
    for d in k.deltas:
        est = katok_entropy(k.measure, k.epsilon, d, k.n, k.sample_size, cfg.seed, sys, k.mode, workers)
        rs.csv(f"katok_delta_{d:g}.csv", ["n", "count", "rate"], est.as_rows())
        doc.append({"delta": d, "epsilon": k.epsilon, "seed": cfg.seed, "rate": est.rate,
                    "raw_rate": est.raw_rate, "sigma": est.sigma, "sample_size": est.sample_size,
                    "mode": est.mode, "lower_bound": est.lower_bound})
        summary.append(f"delta={d:g}: katok_entropy={est.rate:.6f}")
    ref = k.measure.entropy_rate()
    rs.json("katok.json", {"estimates": doc, "entropy_rate": ref, "measure": k.measure.ident})
    prov = {"system": system_ident(sys), "measure": k.measure.ident, "mode": k.mode, "seed": cfg.seed}
    return rs, prov, EXIT_OK, summary + [f"entropy rate {ref:.6f}"]


def _spectrum_files(rs, curves):
    cols = ("lhs", "rhs_partition", "rhs_H", "rhs_K")
    for c in curves:
        tag = f"delta_{c.delta:g}"
        rs.csv(f"spectrum_{tag}.csv", ["alpha", *cols, "tol"], c.rows())
        for j, name in enumerate(cols):
            rs.plot(f"{name}_{tag}.dat", c.alphas, [r[j + 1] for r in c.rows()], "alpha", name)


def cmd_spectrum(cfg: RunConfig, workers: int):
    """Level-set mean dimension and the exact partition-side value on the alpha grid."""
    s, L = cfg.spectrum, cfg.ladders
    rows = []
    for a in s.alphas:
        lhs = level_mdim(cfg.system, cfg.phi, cfg.psi, a, L.epsilon, L.n, s.window_deltas,
                         extrapolation=cfg.extrapolation, workers=workers)
        rhs = constrained_variational_rhs(cfg.system, cfg.phi, cfg.psi, a, L.epsilon, PARTITION,
                                          extrapolation=cfg.extrapolation)
        rows.append((a, lhs.value, rhs.value))
    rs = ResultSet()
    rs.csv("spectrum.csv", ["alpha", "lhs", "rhs_partition"], rows)
    rs.plot("lhs.dat", [r[0] for r in rows], [r[1] for r in rows], "alpha", "lhs")
    rs.plot("rhs_partition.dat", [r[0] for r in rows], [r[2] for r in rows], "alpha", "rhs_partition")
    prov = _base_provenance(cfg)
    prov.update(observable=_ident(cfg.phi), ladders={"epsilon": L.epsilon, "n": L.n},
                window_deltas=s.window_deltas)
    return rs, prov, EXIT_OK, [f"alpha={a:g}: lhs={l:.6f} rhs={r:.6f}" for a, l, r in rows]


def cmd_verify_vp(cfg: RunConfig, workers: int):
    s, L = cfg.spectrum, cfg.ladders
    rep = verify_theorem1(cfg.system, cfg.phi, cfg.psi, s.alphas, L.epsilon, L.n, s.deltas, s.window_deltas,
                          s.tolerance, s.katok_n, s.sample_size, cfg.seed, workers)
    rs = ResultSet()
    _spectrum_files(rs, rep.curves)
    rs.json("report.json", {"verdict": rep.verdict_text, "tolerance": s.tolerance, "per_alpha": rep.per_alpha})
    prov = _base_provenance(cfg)
    prov.update(observable=_ident(cfg.phi), ladders={"epsilon": L.epsilon, "n": L.n}, deltas=s.deltas,
                window_deltas=s.window_deltas, katok_n=s.katok_n, sample_size=s.sample_size, seed=cfg.seed)
    summary = [f"alpha={p['alpha']:g}: worst {p['worst_pair'][0]}/{p['worst_pair'][1]} gap={p['gap']:.4g} "
               f"{'ok' if p['pass'] else 'exceeds'} tol={s.tolerance:g}" for p in rep.per_alpha]
    summary.append(f"verdict: {rep.verdict_text}")
    return rs, prov, EXIT_OK if rep.verdict else EXIT_FAIL, summary


def cmd_build_point(cfg: RunConfig, workers: int):
    sys = _fixed_system(cfg, "build-point")
    p = cfg.point
    sched = GluingSchedule.geometric(p.levels, p.epsilon, p.delta, p.block_length, p.block_count, p.growth)
    x, cert = build_K_alpha_point(sys, cfg.phi, p.alpha, sched, cfg.seed)
    rep = verify_membership_trend(sys, cfg.phi, p.alpha, x, cert.checkpoints(), cert)
    doc = cert.as_dict()
    doc["prefix"] = "".join(map(str, x.word(0, cert.length))) if sys.alphabet_size <= 10 else list(x.word(0, cert.length))
    doc["tail"] = list(x.tail)
    rs = ResultSet()
    rs.json("certificate.json", doc)
    rs.csv("checkpoints.csv", ["m", "deviation", "envelope"], zip(rep.checkpoints, rep.deviations, rep.envelope))
    rs.plot("deviation.dat", rep.checkpoints, rep.deviations, "m", "deviation")
    prov = {"system": system_ident(sys), "observable": _ident(cfg.phi), "seed": cfg.seed,
            "schedule": {"epsilons": list(sched.epsilons), "deltas": list(sched.deltas),
                         "block_lengths": list(sched.block_lengths), "block_counts": list(sched.block_counts)}}
    return rs, prov, EXIT_OK if rep.passed else EXIT_FAIL, [f"length={cert.length} membership: {rep.verdict}"]


def cmd_suspension(cfg: RunConfig, workers: int):
    L = cfg.ladders
    roof = RoofFunction(cfg.suspension.roof)
    cert = beta_root(cfg.system, cfg.restriction, roof, L.epsilon, L.n, cfg.suspension.tolerance,
                     cfg.extrapolation, workers)
    rs = ResultSet()
    rs.json("beta.json", cert.as_dict())
    rs.csv("curve.csv", ["t", "mdim"], cert.curve)
    rs.plot("curve.dat", [c[0] for c in cert.curve], [c[1] for c in cert.curve], "t", "mdim")
    prov = _base_provenance(cfg)
    prov.update(roof=cfg.suspension.roof.ident, ladders={"epsilon": L.epsilon, "n": L.n})
    return rs, prov, EXIT_OK, [f"beta={cert.beta:.6f} bracket=[{cert.bracket[0]:.6f}, {cert.bracket[1]:.6f}]"]


HANDLERS = {
    "pressure": cmd_pressure,
    "mdim": cmd_mdim,
    "bowen-mdim": cmd_bowen_mdim,
    "katok": cmd_katok,
    "spectrum": cmd_spectrum,
    "verify-vp": cmd_verify_vp,
    "build-point": cmd_build_point,
    "suspension": cmd_suspension,
}


def run(command: str, cfg: RunConfig, out_dir, workers: int = 1, cache: RunCache | None = None):
    """Run (or fetch from cache) one command; returns ``(exit status, manifest, summary)``."""
    key = cfg.digest(command)
    start = time.perf_counter()
    hit = cache.load(key, __version__) if cache is not None else None
    if hit is not None:
        rs, stored = hit
        prov = stored["provenance"]
    else:
        rs, prov, status, summary = HANDLERS[command](cfg, workers)
        prov = dict(prov, exit_status=status, summary=summary)
    run_info = {"wall_clock_s": round(time.perf_counter() - start, 3), "threads": workers,
                "cache_hit": hit is not None}
    manifest = build_manifest(command, key, __version__, prov, rs, run_info)
    write_results(out_dir, rs, manifest)
    if hit is None and cache is not None:
        cache.store(key, __version__, rs, manifest)
    return prov["exit_status"], manifest, prov["summary"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mdimlab", description="Mean dimension experiments on symbolic systems")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="YAML run config")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
        p.add_argument("--cache", choices=("on", "off"), default="on")
        p.add_argument("--cache-dir", default=None, help="cache location (default $MDIMLAB_CACHE or ~/.cache/mdimlab)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be >= 1", file=_sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=_sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config, args.command, args.seed)
        cache = RunCache(args.cache_dir) if args.cache == "on" else None
        status, manifest, summary = run(args.command, cfg, args.out, args.threads, cache)
    except (ConfigError, FileNotFoundError) as e:
        print(f"config error: {e}", file=_sys.stderr)
        return EXIT_CONFIG
    except SpecificationRequired as e:
        print(f"refused: {e}", file=_sys.stderr)
        return EXIT_REFUSED
    except (ScheduleInfeasible, GapTooSmall) as e:
        print(f"infeasible: {e}", file=_sys.stderr)
        return EXIT_INFEASIBLE
    for line in summary:
        print(line)
    print(f"wrote {len(manifest['files'])} files to {args.out}"
          + (" (cache hit)" if manifest["run"]["cache_hit"] else ""))
    return status


if __name__ == "__main__":
    _sys.exit(main())
