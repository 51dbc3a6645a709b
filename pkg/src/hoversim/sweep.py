"""Parameter sweeps over numeric scenario paths.

A grid spec looks like "stabilizer.spring=0.02,0.1,0.5;stabilizer.friction=0.1,0.5".
Every grid point runs the same scenario and seed; the output table carries
the objective metrics so the best stabilizer and canceller settings can be
read off (and frozen as defaults).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

from .errors import ScenarioError
from .scenario import Scenario, set_by_path
from .telemetry import summarize
from .world import World

OBJECTIVES = ("stabilizer_residual_ratio", "anc_reduction_dba", "rms_distance_error_m")

# Canonical grid used to tune the shipped stabilizer defaults.
DEFAULT_STABILIZER_GRID = (
    "stabilizer.spring=0.02,0.05,0.1,0.2,0.5,1.0;stabilizer.friction=0.1,0.2,0.5,1.0,2.0"
)


@dataclass(frozen=True)
class SweepPoint:
    params: dict[str, float]
    metrics: dict[str, float]


def parse_grid(spec: str) -> list[tuple[str, list[float]]]:
    axes = []
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ScenarioError(f"bad grid axis (need path=v1,v2,...): {part!r}")
        path, values = part.split("=", 1)
        try:
            parsed = [float(v) for v in values.split(",") if v.strip() != ""]
        except ValueError as exc:
            raise ScenarioError(f"non-numeric grid value in {part!r}") from exc
        if not parsed:
            raise ScenarioError(f"empty grid axis: {part!r}")
        axes.append((path.strip(), parsed))
    if not axes:
        raise ScenarioError("empty grid spec")
    return axes


def run_sweep(scenario: Scenario, grid_spec: str) -> list[SweepPoint]:
    axes = parse_grid(grid_spec)
    names = [a[0] for a in axes]
    points = []
    for combo in itertools.product(*(a[1] for a in axes)):
        sc = scenario
        for path, value in zip(names, combo):
            sc = set_by_path(sc, path, value)
        world = World(sc)
        world.run()
        summary = summarize(world)
        points.append(
            SweepPoint(
                params=dict(zip(names, combo)),
                metrics={k: summary.get(k, math.nan) for k in OBJECTIVES},
            )
        )
    return points


def best_point(points: list[SweepPoint], objective: str, minimize: bool = True) -> SweepPoint:
    keyed = [p for p in points if not math.isnan(p.metrics.get(objective, math.nan))]
    if not keyed:
        raise ScenarioError(f"no sweep point produced objective {objective}")
    return (min if minimize else max)(keyed, key=lambda p: p.metrics[objective])


def sweep_csv(points: list[SweepPoint]) -> str:
    if not points:
        return ""
    param_names = list(points[0].params)
    header = param_names + list(OBJECTIVES) + ["best_stabilizer"]
    try:
        best = best_point(points, "stabilizer_residual_ratio")
    except ScenarioError:
        best = None
    lines = [",".join(header)]
    for p in points:
        row = [repr(p.params[n]) for n in param_names]
        row += [repr(p.metrics[o]) for o in OBJECTIVES]
        row.append("1" if best is not None and p is best else "0")
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
