"""Command-line scenario runner: run, validate, batch."""

from __future__ import annotations

import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from ._version import __version__
from .errors import ConfigError
from .scenario import ScenarioResult, run_scenario, validate_config


@click.group()
@click.version_option(version=__version__, prog_name="simplexflow")
def main():
    """Run and validate flow scenarios on the simplex phase space."""


def _echo_result(result: ScenarioResult) -> None:
    for row in result.report.get("checks", []):
        status = "ok " if row["ok"] else "FAIL"
        expected = "" if row["expect_pass"] else " (expected to fail)"
        click.echo(
            f"{status} {row['name']}: residual {row['residual']:.3e}"
            f" tolerance {row['tolerance']:.1e}{expected}"
        )
    error = result.report.get("error")
    if error:
        click.echo(f"error [{error['type']}]: {error['message']}", err=True)
    click.echo(f"report: {result.report_path}")
    if result.trajectory_path is not None:
        click.echo(f"trajectory: {result.trajectory_path}")


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output directory (default: current directory).")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None,
              help="Override the config seed.")
@click.option("--quiet", is_flag=True, help="Suppress per-check output.")
def run(config: Path, out: Path | None, seed: int | None, quiet: bool):
    """Execute one scenario: integrate, run its checks, write CSV and report."""
    try:
        cfg = validate_config(config)
    except ConfigError as exc:
        for message in exc.errors:
            click.echo(f"config error: {message}", err=True)
        sys.exit(2)
    result = run_scenario(cfg, out_dir=out, seed_override=seed)
    if not quiet:
        _echo_result(result)
    sys.exit(result.exit_code)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate(config: Path):
    """Validate a scenario file, reporting every problem found."""
    try:
        cfg = validate_config(config)
    except ConfigError as exc:
        for message in exc.errors:
            click.echo(f"invalid: {message}", err=True)
        sys.exit(2)
    click.echo(f"ok: {cfg.scenario_id} (n={cfg.n}, steps={cfg.steps}, checks={len(cfg.checks)})")


def _run_one(path: Path, out_root: Path, seed: int | None) -> tuple[int, str, list[str]]:
    try:
        cfg = validate_config(path)
    except ConfigError as exc:
        return 2, path.stem, [f"config error: {m}" for m in exc.errors]
    result = run_scenario(cfg, out_dir=out_root / path.stem, seed_override=seed)
    return result.exit_code, path.stem, []


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option("--out", type=click.Path(file_okay=False, path_type=Path), default=None,
              help="Output root; each scenario gets its own subdirectory.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None,
              help="Override every config seed.")
@click.option("--jobs", type=click.IntRange(1, 64), default=1,
              help="Run scenarios in parallel processes.")
@click.option("--quiet", is_flag=True, help="Only report failures.")
def batch(directory: Path, out: Path | None, seed: int | None, jobs: int, quiet: bool):
    """Run every *.json scenario in DIRECTORY with isolated outputs."""
    configs = sorted(directory.glob("*.json"))
    if not configs:
        click.echo(f"no *.json configs found in {directory}", err=True)
        sys.exit(2)
    out_root = out if out is not None else Path.cwd()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_one, configs, [out_root] * len(configs), [seed] * len(configs)))
    else:
        outcomes = [_run_one(path, out_root, seed) for path in configs]
    worst = 0
    for code, stem, messages in outcomes:
        worst = max(worst, code)
        for message in messages:
            click.echo(f"{stem}: {message}", err=True)
        if code != 0:
            click.echo(f"{stem}: exit {code}", err=True)
        elif not quiet:
            click.echo(f"{stem}: ok")
    sys.exit(worst)
