#!/usr/bin/env python3
"""Desk-scale CDF experiment: M=10, K_d=K_u=2, 20 realizations, all schemes.

Writes samples.csv, cdf.csv, summary.json, traces/, and a plot script to the
output directory. Expect roughly 10-15 minutes on one core; the joint
optimizer dominates the cost.
"""

import argparse
import json

from vfdcf.config import ExperimentConfig, SystemConfig
from vfdcf.harness import export, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/desk")
    ap.add_argument("--realizations", type=int, default=20)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig(
        system=SystemConfig.desk_profile(),
        realizations=args.realizations,
        base_seed=args.seed,
        parallelism=args.workers,
        output_dir=args.out,
    )
    summary, records = run_experiment(cfg)
    export(summary, records, cfg.output_dir)
    print(json.dumps({s: {"outage_se": sm.outage_se, "median_se": sm.median_se,
                          "converged": sm.converged}
                      for s, sm in summary.schemes.items()}, indent=2))
    print(f"results in {cfg.output_dir}")


if __name__ == "__main__":
    main()
