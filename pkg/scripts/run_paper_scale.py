#!/usr/bin/env python3
"""Full-scale CDF experiment: M=30 (or 60), K_d=K_u=5, all schemes.

SLOW: hours per scheme on one core. The joint optimizer solves a convex
subproblem with ~M^2 K_d coupling variables per SCA iteration, so cost grows
steeply with M. Use --workers on a multi-core machine.
"""

import argparse
import json

from vfdcf.config import ExperimentConfig, SystemConfig
from vfdcf.harness import export, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/paper")
    ap.add_argument("--m", type=int, default=30, help="number of APs")
    ap.add_argument("--realizations", type=int, default=50)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--scheme", default="vfd,heu,hd")
    args = ap.parse_args()

    cfg = ExperimentConfig(
        system=SystemConfig.paper_profile(num_aps=args.m),
        schemes=[s.strip() for s in args.scheme.split(",") if s.strip()],
        realizations=args.realizations,
        base_seed=args.seed,
        parallelism=args.workers,
        output_dir=args.out,
    )
    summary, records = run_experiment(cfg)
    export(summary, records, cfg.output_dir)
    print(json.dumps(summary.to_dict(), indent=2, default=str))
    print(f"results in {cfg.output_dir}")


if __name__ == "__main__":
    main()
