#!/usr/bin/env python3
"""Run the whole toolchain end to end into one output directory.

Equivalent to:
    demandscope synth -> clean -> train -> eval -> explain -> report

Usage:
    python scripts/run_full_pipeline.py --out out/run0 --seed 0 [--set K=V ...]

Any --set overrides are forwarded to every stage, so a quick smoke run is e.g.
    python scripts/run_full_pipeline.py --out /tmp/smoke --seed 0 \
        --set synth.n=200 --set train.epochs=2 --set model.d_model=8 \
        --set select.n_trees=20 --set cv.k=3
"""

import argparse
import sys
import time

from demandscope.cli import main as cli_main

STAGES = ("synth", "clean", "train", "eval", "explain", "report")


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/run0")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--config", default=None)
    parser.add_argument("--set", action="append", default=[], metavar="K=V")
    args = parser.parse_args()

    forwarded = ["--seed", str(args.seed), "--out", args.out]
    if args.config:
        forwarded += ["--config", args.config]
    for item in args.set:
        forwarded += ["--set", item]

    for stage in STAGES:
        t0 = time.time()
        code = cli_main([stage, *forwarded])
        if code != 0:
            print(f"{stage} failed with exit code {code}", file=sys.stderr)
            return code
        print(f"[{stage}] done in {time.time() - t0:.1f}s")
    print(f"all artifacts in {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
