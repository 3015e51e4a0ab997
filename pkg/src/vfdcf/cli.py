"""Command-line entry points: run, validate-moments, enumerate."""

from __future__ import annotations

import dataclasses
import sys

import click
import numpy as np

from .config import ExperimentConfig, VALID_SCHEMES
from .errors import VfdError
from .harness import export, run_experiment
from .network import channel_stats, realize_network
from .sca import enumerate_modes
from .se import mc_moment_oracle


def _load_config(path: str) -> ExperimentConfig:
    try:
        return ExperimentConfig.from_json(path)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        raise click.ClickException(f"bad config {path!r}: {exc}") from exc


def _instance(cfg: ExperimentConfig, realization: int = 0):
    seed = cfg.base_seed + realization
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0)))
    net = realize_network(cfg.system, rng)
    return net, channel_stats(cfg.system, net)


@click.group()
def main() -> None:
    """Mode assignment and power allocation for virtually-full-duplex
    cell-free massive MIMO networks."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Experiment config (JSON).")
@click.option("--scheme", "schemes", default=None,
              help="Comma-separated subset of vfd,heu,hd.")
@click.option("--m", "num_aps", type=int, default=None,
              help="Override the number of APs.")
@click.option("--realizations", type=int, default=None)
@click.option("--seed", type=int, default=None, help="Override base_seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
@click.option("--workers", type=int, default=None,
              help="Process count for the Monte Carlo batch.")
def run(config_path, schemes, num_aps, realizations, seed, out_dir, workers):
    """Run the Monte Carlo experiment and export CSV/JSON results."""
    cfg = _load_config(config_path)
    try:
        if schemes is not None:
            wanted = [s.strip() for s in schemes.split(",") if s.strip()]
            for s in wanted:
                if s not in VALID_SCHEMES:
                    raise click.ClickException(
                        f"unknown scheme {s!r}; valid: {','.join(VALID_SCHEMES)}")
            cfg = dataclasses.replace(cfg, schemes=wanted)
        if num_aps is not None:
            cfg = dataclasses.replace(
                cfg, system=dataclasses.replace(cfg.system, num_aps=num_aps))
        if realizations is not None:
            cfg = dataclasses.replace(cfg, realizations=realizations)
        if seed is not None:
            cfg = dataclasses.replace(cfg, base_seed=seed)
        if workers is not None:
            cfg = dataclasses.replace(cfg, parallelism=workers)
        if out_dir is not None:
            cfg = dataclasses.replace(cfg, output_dir=out_dir)
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc

    summary, records = run_experiment(cfg)
    try:
        files = export(summary, records, cfg.output_dir)
    except OSError as exc:
        raise click.ClickException(f"cannot write results: {exc}") from exc

    for scheme, sm in summary.schemes.items():
        outage = "n/a" if sm.outage_se is None else f"{sm.outage_se:.3f}"
        click.echo(f"{scheme}: converged {sm.converged}/{cfg.realizations}, "
                   f"95%-likely sum SE {outage} bit/s/Hz")
    click.echo(f"wrote {len(files)} files to {cfg.output_dir}")


@main.command("validate-moments")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--draws", type=int, default=100_000, show_default=True)
def validate_moments(config_path, draws):
    """Check the closed-form channel moments against Monte Carlo estimates."""
    cfg = _load_config(config_path)
    net, stats = _instance(cfg)
    rng = np.random.default_rng(np.random.SeedSequence((cfg.base_seed, 99)))
    checks = mc_moment_oracle(cfg.system, stats, net, draws, rng)
    worst_z = max((c.z_score for c in checks), default=0.0)
    worst_rel = max((c.rel_err for c in checks), default=0.0)
    bad = [c for c in checks if c.z_score > 3.0 and c.rel_err > 0.02]
    click.echo(f"{len(checks)} moments checked over {draws} draws: "
               f"max |z| = {worst_z:.2f}, max rel err = {worst_rel:.4f}")
    for c in bad:
        click.echo(f"  MISMATCH {c.name}{c.indices}: expected {c.expected:.4e}, "
                   f"got {c.estimate:.4e} (z={c.z_score:.1f})")
    if bad:
        sys.exit(1)
    click.echo("all moments within 3 standard errors or 2% relative")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def enumerate(config_path):
    """Brute-force all binary mode vectors (tiny instances only)."""
    cfg = _load_config(config_path)
    if cfg.system.num_aps > 12:
        raise click.ClickException(
            f"enumeration over 2^{cfg.system.num_aps} modes is not sensible; "
            "use <= 12 APs")
    net, stats = _instance(cfg)
    try:
        best_sum, best_a, results = enumerate_modes(cfg.system, stats, net,
                                                    cfg.penalty)
    except VfdError as exc:
        raise click.ClickException(str(exc)) from exc
    for key in sorted(results):
        val = results[key]
        click.echo(f"a={key}: "
                   + ("infeasible" if val is None else f"{val:.4f} bit/s/Hz"))
    if best_a is None:
        click.echo("no feasible binary mode vector")
        sys.exit(1)
    best_key = "".join(str(int(x)) for x in best_a)
    click.echo(f"best: a={best_key} with sum SE {best_sum:.4f} bit/s/Hz")


if __name__ == "__main__":
    main()
