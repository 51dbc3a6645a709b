"""Command line entry points: run, sweep, serve."""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click

from .errors import HoversimError, ScenarioError
from .scenario import load_scenario
from .sweep import DEFAULT_STABILIZER_GRID, best_point, run_sweep, sweep_csv
from .telemetry import write_summary, write_telemetry
from .world import World


def _fail(reason: str, code: int = 2):
    click.echo(json.dumps({"error": reason}), err=True)
    sys.exit(code)


@click.group()
def main():
    """Desk-scale follower-drone simulation toolkit."""


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out")
def run(scenario_path, seed, out_dir):
    """Run a scenario to completion; write telemetry CSV and summary JSON."""
    try:
        scenario = load_scenario(scenario_path)
        if seed is not None:
            scenario = dataclasses.replace(scenario, seed=seed)
        world = World(scenario)
        world.run()
    except ScenarioError as exc:
        _fail(f"scenario: {exc}")
    except HoversimError as exc:
        _fail(f"simulation fault: {exc}", code=3)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_telemetry(world, out / "telemetry.csv")
    write_summary(world, out / "summary.json")
    click.echo(f"wrote {out / 'telemetry.csv'} and {out / 'summary.json'}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--grid", "grid_spec", default=DEFAULT_STABILIZER_GRID, show_default=False,
              help="Semicolon-separated path=v1,v2,... axes; defaults to the stabilizer tuning grid.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="out")
def sweep(scenario_path, grid_spec, out_dir):
    """Run a parameter grid; write the objective table and the best point."""
    try:
        scenario = load_scenario(scenario_path)
        points = run_sweep(scenario, grid_spec)
    except ScenarioError as exc:
        _fail(f"sweep: {exc}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(sweep_csv(points))
    try:
        best = best_point(points, "stabilizer_residual_ratio")
        click.echo(f"best stabilizer point: {best.params} -> {best.metrics}")
    except ScenarioError:
        pass
    click.echo(f"wrote {out / 'sweep.csv'}")


@main.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--port", type=int, default=8750)
@click.option("--record", type=click.Path(dir_okay=False), default=None,
              help="Record received commands (JSON lines: tick + message).")
@click.option("--replay", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Inject a recorded command trace while serving.")
def serve(scenario_path, port, record, replay):
    """Real-time simulation with the WebSocket control/telemetry endpoint."""
    from .server import serve as serve_impl

    try:
        scenario = load_scenario(scenario_path)
    except ScenarioError as exc:
        _fail(f"scenario: {exc}")
    serve_impl(scenario, port, record=record, replay=replay)


if __name__ == "__main__":
    main()
