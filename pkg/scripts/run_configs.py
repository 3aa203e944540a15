"""Run every shipped config through the CLI and collect the outputs under one directory.

    python3 scripts/run_configs.py --out results [--threads 4] [--only A1]
"""
import argparse
from pathlib import Path

from mdimlab.cli import main

# command for each config file prefix
COMMANDS = {"c1_full_shift_pressure": "pressure", "c1_full_shift_mdim": "mdim", "c2_": "bowen-mdim",
            "A1_": "verify-vp", "c4_": "katok", "c6_": "build-point", "c7_": "suspension"}


def command_for(name):
    for prefix, cmd in COMMANDS.items():
        if name.startswith(prefix):
            return cmd
    raise SystemExit(f"no command known for {name}")


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--configs", default=Path(__file__).resolve().parent.parent / "configs", type=Path)
    ap.add_argument("--out", default="results", type=Path)
    ap.add_argument("--threads", default=1, type=int)
    ap.add_argument("--only", default="", help="substring filter on config names")
    ap.add_argument("--cache", choices=("on", "off"), default="on")
    return ap.parse_args()


if __name__ == "__main__":
    args = parse_args()
    statuses = {}
    for cfg in sorted(args.configs.glob("*.yaml")):
        if args.only not in cfg.stem:
            continue
        cmd = command_for(cfg.stem)
        print(f"== {cfg.stem} ({cmd})")
        statuses[cfg.stem] = main([cmd, "--config", str(cfg), "--out", str(args.out / cfg.stem),
                                   "--threads", str(args.threads), "--cache", args.cache])
    print()
    for name, st in statuses.items():
        print(f"{name:28s} exit {st}")
