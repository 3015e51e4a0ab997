"""Monte Carlo experiment driver: seeding, scheme dispatch, stats, export.

Determinism contract: realization r always uses seed = base_seed + r, each
consumer (network geometry, vFD initializer, HEU mode draw) derives its own
stream from that seed, and results are collected in realization order, so
the outputs are byte-identical regardless of the worker count.
"""

from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import hd_baseline, heu_vfd
from .config import ExperimentConfig
from .errors import EmptySamples
from .network import channel_stats, realize_network
from .sca import run_sca
from .state import RunResult, Status

# sub-stream indices hung off the per-realization seed
_ROLE_NETWORK = 0
_ROLE_VFD_INIT = 1
_ROLE_HEU_MODES = 2

PERCENTILE_OUTAGE = 5.0


def percentile(samples, p: float) -> float:
    """Linear-interpolation percentile (numpy default) on sorted samples.

    With n sorted samples x_0..x_{n-1}, the value at rank h = (n-1) p / 100
    is x_floor(h) + (h - floor(h)) (x_floor(h)+1 - x_floor(h)).
    """
    samples = np.asarray(list(samples), dtype=float)
    if samples.size == 0:
        raise EmptySamples("percentile of an empty sample set")
    if not 0.0 <= p <= 100.0:
        raise ValueError("p must be in [0, 100]")
    return float(np.percentile(samples, p))


@dataclass
class RealizationRecord:
    """Flattened outcome of one (scheme, realization) run."""

    scheme: str
    realization: int
    seed: int
    status: str
    sum_se: float
    se_dl: list
    se_ul: list
    iterations: int
    residuals: tuple
    wall_time: float
    trace: list = field(default_factory=list)


@dataclass
class SchemeSummary:
    samples: list          # converged sum SEs, in realization order
    outage_se: float | None  # 5th percentile ("95%-likely") of samples
    median_se: float | None
    converged: int
    infeasible: int
    failed: int
    feasibility_rate: float
    mean_wall_time: float

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "outage_se": self.outage_se,
            "median_se": self.median_se,
            "converged": self.converged,
            "infeasible": self.infeasible,
            "failed": self.failed,
            "feasibility_rate": self.feasibility_rate,
            "mean_wall_time": self.mean_wall_time,
        }


@dataclass
class ExperimentSummary:
    """Per-scheme statistics over all realizations of one experiment."""

    schemes: dict           # scheme name -> SchemeSummary
    realizations: int
    base_seed: int
    total_wall_time: float

    def to_dict(self) -> dict:
        return {
            "realizations": self.realizations,
            "base_seed": self.base_seed,
            "total_wall_time": self.total_wall_time,
            "schemes": {k: v.to_dict() for k, v in self.schemes.items()},
        }


def _record_from_result(scheme: str, r: int, seed: int, res: RunResult,
                        wall: float) -> RealizationRecord:
    return RealizationRecord(
        scheme=scheme,
        realization=r,
        seed=seed,
        status=res.status.value,
        sum_se=res.se.total,
        se_dl=[float(x) for x in res.se.dl],
        se_ul=[float(x) for x in res.se.ul],
        iterations=res.iterations,
        residuals=tuple(float(x) for x in res.residuals),
        wall_time=wall,
        trace=[(it.phase, it.iteration, it.objective, it.c1, it.c2, it.c3)
               for it in res.trace],
    )


def run_realization(cfg: ExperimentConfig, r: int) -> list[RealizationRecord]:
    """All requested schemes on realization r; failures recorded, not raised."""
    seed = cfg.base_seed + r
    sys_cfg = cfg.system
    net_rng = np.random.default_rng(np.random.SeedSequence((seed, _ROLE_NETWORK)))
    net = realize_network(sys_cfg, net_rng)
    stats = channel_stats(sys_cfg, net)

    records = []
    for scheme in cfg.schemes:
        t0 = time.perf_counter()
        try:
            if scheme == "vfd":
                res = run_sca(sys_cfg, stats, net, cfg.penalty,
                              np.random.SeedSequence((seed, _ROLE_VFD_INIT)))
            elif scheme == "heu":
                res = heu_vfd(sys_cfg, stats, net,
                              np.random.SeedSequence((seed, _ROLE_HEU_MODES)),
                              cfg.penalty)
            else:
                res = hd_baseline(sys_cfg, stats, net, cfg.penalty)
            rec = _record_from_result(scheme, r, seed, res,
                                      time.perf_counter() - t0)
        except Exception as exc:  # noqa: BLE001 - batch must survive anything
            rec = RealizationRecord(
                scheme=scheme, realization=r, seed=seed,
                status=f"failed:{type(exc).__name__}", sum_se=float("nan"),
                se_dl=[], se_ul=[], iterations=0,
                residuals=(float("nan"),) * 3,
                wall_time=time.perf_counter() - t0)
        records.append(rec)
    return records


def _summarize(cfg: ExperimentConfig, records: list[RealizationRecord],
               total_wall: float) -> ExperimentSummary:
    per_scheme = {}
    for scheme in cfg.schemes:
        rows = [rec for rec in records if rec.scheme == scheme]
        conv = [rec for rec in rows if rec.status == Status.CONVERGED.value]
        infeas = sum(rec.status == Status.INFEASIBLE.value for rec in rows)
        failed = len(rows) - len(conv) - infeas
        samples = [rec.sum_se for rec in conv]
        per_scheme[scheme] = SchemeSummary(
            samples=samples,
            outage_se=percentile(samples, PERCENTILE_OUTAGE) if samples else None,
            median_se=percentile(samples, 50.0) if samples else None,
            converged=len(conv),
            infeasible=infeas,
            failed=failed,
            feasibility_rate=len(conv) / len(rows) if rows else 0.0,
            mean_wall_time=float(np.mean([rec.wall_time for rec in rows]))
            if rows else 0.0,
        )
    return ExperimentSummary(schemes=per_scheme,
                             realizations=cfg.realizations,
                             base_seed=cfg.base_seed,
                             total_wall_time=total_wall)


def run_experiment(cfg: ExperimentConfig):
    """Run the full Monte Carlo batch; returns (summary, records).

    Records are always ordered by (realization, scheme order in cfg), so
    the aggregation is identical for any parallelism level.
    """
    t0 = time.perf_counter()
    if cfg.parallelism > 1 and cfg.realizations > 1:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            chunks = list(pool.map(run_realization,
                                   [cfg] * cfg.realizations,
                                   range(cfg.realizations)))
    else:
        chunks = [run_realization(cfg, r) for r in range(cfg.realizations)]
    records = [rec for chunk in chunks for rec in chunk]
    summary = _summarize(cfg, records, time.perf_counter() - t0)
    return summary, records


def _fmt(x) -> str:
    """Shortest round-trip decimal form; stable across runs and platforms."""
    return repr(float(x))


def export(summary: ExperimentSummary, records: list[RealizationRecord],
           out_dir: str | Path, write_plot_script: bool = True) -> list[Path]:
    """Write samples.csv, cdf.csv, summary.json, traces/, and a plot script.

    Wall-clock fields are intentionally excluded from samples.csv so that
    re-runs of the same config are byte-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    kd = max((len(rec.se_dl) for rec in records), default=0)
    ku = max((len(rec.se_ul) for rec in records), default=0)
    samples_path = out / "samples.csv"
    with open(samples_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scheme", "realization", "seed", "status", "sum_se"]
                   + [f"se_dl_{k}" for k in range(kd)]
                   + [f"se_ul_{k}" for k in range(ku)]
                   + ["iterations", "res_c1", "res_c2", "res_c3"])
        for rec in records:
            dl = rec.se_dl + [float("nan")] * (kd - len(rec.se_dl))
            ul = rec.se_ul + [float("nan")] * (ku - len(rec.se_ul))
            w.writerow([rec.scheme, rec.realization, rec.seed, rec.status,
                        _fmt(rec.sum_se)]
                       + [_fmt(x) for x in dl] + [_fmt(x) for x in ul]
                       + [rec.iterations] + [_fmt(x) for x in rec.residuals])
    written.append(samples_path)

    cdf_path = out / "cdf.csv"
    with open(cdf_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scheme", "sum_se", "cumulative_prob"])
        for scheme, sm in summary.schemes.items():
            xs = sorted(sm.samples)
            for i, x in enumerate(xs):
                w.writerow([scheme, _fmt(x), _fmt((i + 1) / len(xs))])
    written.append(cdf_path)

    summary_path = out / "summary.json"
    with open(summary_path, "w") as f:
        json.dump(summary.to_dict(), f, indent=2)
        f.write("\n")
    written.append(summary_path)

    traces_dir = out / "traces"
    traces_dir.mkdir(exist_ok=True)
    for rec in records:
        tpath = traces_dir / f"{rec.scheme}_{rec.realization}.csv"
        with open(tpath, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["phase", "iteration", "objective", "c1", "c2", "c3"])
            for phase, it, obj, c1, c2, c3 in rec.trace:
                w.writerow([phase, it, _fmt(obj), _fmt(c1), _fmt(c2), _fmt(c3)])
        written.append(tpath)

    if write_plot_script:
        plot_path = out / "plot_cdf.py"
        plot_path.write_text(_PLOT_SCRIPT)
        written.append(plot_path)
    return written


_PLOT_SCRIPT = '''\
#!/usr/bin/env python3
"""Render the sum-SE CDF from cdf.csv (requires matplotlib)."""
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).parent
curves = defaultdict(lambda: ([], []))
with open(here / "cdf.csv") as f:
    for row in csv.DictReader(f):
        xs, ys = curves[row["scheme"]]
        xs.append(float(row["sum_se"]))
        ys.append(float(row["cumulative_prob"]))

for scheme, (xs, ys) in sorted(curves.items()):
    plt.step(xs, ys, where="post", label=scheme)
plt.xlabel("sum SE (bit/s/Hz)")
plt.ylabel("CDF")
plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig(here / "cdf.png", dpi=150, bbox_inches="tight")
print(f"wrote {here / 'cdf.png'}")
'''
