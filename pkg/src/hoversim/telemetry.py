"""Telemetry persistence: one CSV row per vision frame, plus a summary.

Columns are fixed and versioned; floats are written with repr-shortest
formatting so reruns of the same scenario produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .world import TelemetryFrame, World

SCHEMA_VERSION = 1

COLUMNS = [
    "t",
    "drone_x", "drone_y", "drone_z", "drone_yaw",
    "human_x", "human_y", "human_heading",
    "tau_true", "d_true",
    "tau_est", "d_est", "confidence",
    "behavior", "event",
    "err_yaw", "err_dist", "err_lat",
    "cmd_yaw_rate", "cmd_forward", "cmd_lateral",
    "stab_offset_x", "stab_offset_y", "stab_apparent_x", "stab_apparent_y",
    "anc_dba",
    "api_status", "fault",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def frame_row(fr: TelemetryFrame) -> list:
    return [
        fr.t,
        float(fr.drone.position[0]), float(fr.drone.position[1]),
        float(fr.drone.position[2]), fr.drone.yaw,
        float(fr.human.position[0]), float(fr.human.position[1]), fr.human.heading,
        fr.tau_true, fr.d_true,
        fr.tau_est, fr.d_est, fr.confidence,
        fr.behavior, fr.event,
        fr.err_yaw, fr.err_dist, fr.err_lat,
        fr.cmd.yaw_rate, fr.cmd.forward, fr.cmd.lateral,
        float(fr.stab_offset[0]), float(fr.stab_offset[1]),
        float(fr.stab_apparent[0]), float(fr.stab_apparent[1]),
        fr.anc_dba,
        fr.api_status, fr.fault,
    ]


def telemetry_csv(world: World) -> str:
    lines = [f"# schema_version={SCHEMA_VERSION}", ",".join(COLUMNS)]
    for fr in world.frames:
        lines.append(",".join(_fmt(v) for v in frame_row(fr)))
    return "\n".join(lines) + "\n"


def write_telemetry(world: World, path: str | Path) -> None:
    Path(path).write_text(telemetry_csv(world))


def summarize(world: World, acquisition_time: float = 5.0) -> dict:
    """Run-level metrics: tracking error, state dwell, stabilizer ratio,
    noise reduction, command outcomes."""
    frames = world.frames
    post = [f for f in frames if f.t >= acquisition_time]
    dist_errors = [
        abs(f.d_true - world.controller.setpoint.distance) for f in post
    ]
    in_frame = [f for f in post if f.confidence > 0.0]

    states = [f.behavior for f in frames]
    dwell = {
        mode: states.count(mode) / len(states) if states else math.nan
        for mode in ("home", "idle", "await")
    }

    apparent = np.array([[f.stab_apparent[0], f.stab_apparent[1]] for f in frames])
    raw = apparent - np.array([[f.stab_offset[0], f.stab_offset[1]] for f in frames])

    def rms(track: np.ndarray) -> float:
        if track.size == 0:
            return math.nan
        centered = track - track.mean(axis=0)
        return float(np.sqrt(np.mean(np.sum(centered**2, axis=1))))

    raw_rms = rms(raw)
    stabilized_rms = rms(apparent)
    ratio = stabilized_rms / raw_rms if raw_rms and not math.isnan(raw_rms) else math.nan

    anc_levels = [f.anc_dba for f in frames if not math.isnan(f.anc_dba)]
    anc_raw = world.anc_loop.raw_level_dba
    anc_reduction = (
        anc_raw - anc_levels[-1] if anc_levels and not math.isnan(anc_raw) else math.nan
    )

    return {
        "schema_version": SCHEMA_VERSION,
        "seed": world.sc.seed,
        "duration": world.t,
        "frames": len(frames),
        "mean_distance_error_m": float(np.mean(dist_errors)) if dist_errors else math.nan,
        "rms_distance_error_m": (
            float(np.sqrt(np.mean(np.square(dist_errors)))) if dist_errors else math.nan
        ),
        "in_frame_fraction": len(in_frame) / len(post) if post else math.nan,
        "time_in_state": dwell,
        "stabilizer_residual_ratio": ratio,
        "stabilizer_raw_rms_px": raw_rms,
        "stabilizer_residual_rms_px": stabilized_rms,
        "anc_level_dba": anc_levels[-1] if anc_levels else math.nan,
        "anc_raw_level_dba": anc_raw,
        "anc_reduction_dba": anc_reduction,
        "command_outcomes": world.command_log,
        "faults": [f.fault for f in frames if f.fault],
    }


def write_summary(world: World, path: str | Path, acquisition_time: float = 5.0) -> None:
    Path(path).write_text(json.dumps(summarize(world, acquisition_time), indent=2) + "\n")
