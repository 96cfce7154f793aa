"""Command line front end.

    aoi-sched run table1 --T 1000000 --seed 7 --out results/
    aoi-sched run fig4 --N 5,10,20,40
    aoi-sched run custom --spec net.json
"""

from __future__ import annotations

import argparse
import sys

from .dual import DualParams
from .errors import AoiSchedError
from .experiments import PRESETS, RunConfig, run_experiment


def build_parser():
    ap = argparse.ArgumentParser(prog="aoi-sched",
                                 description="Age-minimizing scheduling for "
                                             "power-constrained sensors")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a preset or a custom network spec")
    run.add_argument("preset", choices=sorted(PRESETS))
    run.add_argument("--spec", help="network spec JSON (custom preset)")
    run.add_argument("--T", type=int, default=100_000, help="simulation horizon")
    run.add_argument("--seed", type=int, default=7)
    run.add_argument("--reps", type=int, default=10)
    run.add_argument("--out", default="results")
    run.add_argument("--N", help="comma-separated sweep sizes, e.g. 5,10,20,40")
    run.add_argument("--X", type=int, help="truncation age override")
    run.add_argument("--dual-step", type=float, default=1.0)
    run.add_argument("--dual-shrink", type=float, default=0.5)
    run.add_argument("--dual-eps", type=float, default=1e-4)
    run.add_argument("--trace", action="store_true",
                     help="also dump dual-search and replication traces")
    run.add_argument("--lp-backend", choices=["highs", "simplex"], default="highs")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    n_values = None
    if args.N:
        try:
            n_values = tuple(int(v) for v in args.N.split(","))
        except ValueError:
            print(f"error: --N expects comma-separated integers, got {args.N!r}",
                  file=sys.stderr)
            return 2
    cfg = RunConfig(
        preset=args.preset, T=args.T, seed=args.seed, reps=args.reps,
        out_dir=args.out, N_values=n_values, X=args.X,
        dual=DualParams(initial_step=args.dual_step, shrink=args.dual_shrink,
                        eps_step=args.dual_eps),
        spec_path=args.spec, trace=args.trace, lp_backend=args.lp_backend,
    )
    try:
        out = run_experiment(cfg)
    except (ValueError, KeyError, FileNotFoundError, AoiSchedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for k, v in out.items():
        if isinstance(v, str):
            print(f"{k}: {v}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
