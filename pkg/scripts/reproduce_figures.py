"""Run every preset through the command-line driver and collect the outputs.

    python scripts/reproduce_figures.py [--out results] [--workers 4]

Writes ``<preset>.csv`` (plus sidecars and gnuplot scripts for scans) into the
output directory and prints the exit status of each run.
"""
import argparse
import sys
from pathlib import Path

from twophoton import cli, config

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args(argv)
    out = Path(args.out)
    worst = 0
    for path in sorted(CONFIGS.glob("*.cfg")):
        verb = config.load(path)["verb"]
        target = out / path.stem if verb == "single" else out / f"{path.stem}.csv"
        cmd = [verb, "--config", str(path), "--out", str(target), "--workers", str(args.workers)]
        if verb in ("scan", "norms"):
            cmd += ["--gnuplot", str(out / f"{path.stem}.gp")]
        code = cli.main(cmd)
        print(f"{path.stem:16s} {verb:15s} exit {code}", flush=True)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
