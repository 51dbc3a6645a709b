"""Spring-mass display-content stabilization.

The rendered content is treated as a mass tethered to the screen center by
a spring and damper, forced opposite to the measured display acceleration.
Shifting content against the motion keeps it approximately stationary
relative to the viewer's eye. Integration is semi-implicit Euler at the
physics rate, which stays stable for stiff springs at 1 kHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, NonpositiveDt


@dataclass(frozen=True)
class StabilizerConfig:
    # spring/friction are the winners of the canonical hover-trace sweep
    # (`hoversim sweep`); re-run it after touching the disturbance model.
    spring: float = 0.02         # 1/s^2, spring factor
    friction: float = 0.1        # 1/s, dampener friction constant
    max_offset_px: float = 400.0
    px_per_m: float = 17000.0    # display pixel pitch (~430 ppi panel)
    sensing_delay: float = 0.020  # s, sensing-to-render latency

    def __post_init__(self):
        if self.spring <= 0 or self.friction < 0 or self.max_offset_px <= 0:
            raise ValueError("need spring > 0, friction >= 0, max_offset_px > 0")


@dataclass(frozen=True)
class StabilizerState:
    offset: np.ndarray = None    # px, content shift (lateral, vertical)
    velocity: np.ndarray = None  # px/s

    def __post_init__(self):
        if self.offset is None:
            object.__setattr__(self, "offset", np.zeros(2))
        if self.velocity is None:
            object.__setattr__(self, "velocity", np.zeros(2))


def stabilize_step(
    state: StabilizerState,
    accel: np.ndarray,
    dt: float,
    cfg: StabilizerConfig,
) -> StabilizerState:
    """One integration step driven by display acceleration (m/s^2, 2-axis).

    Semi-implicit Euler on
        offset'' = -spring * offset - friction * offset' - accel * px_per_m
    with the offset clamped component-wise; a clamped component's velocity
    is zeroed so the content does not stick to the rail.
    """
    if dt <= 0:
        raise NonpositiveDt(f"dt={dt}")
    accel_px = np.asarray(accel, dtype=float) * cfg.px_per_m
    vel = state.velocity + dt * (
        -cfg.spring * state.offset - cfg.friction * state.velocity - accel_px
    )
    off = state.offset + dt * vel
    lim = cfg.max_offset_px
    clamped = np.clip(off, -lim, lim)
    vel = np.where(off == clamped, vel, 0.0)
    return StabilizerState(offset=clamped, velocity=vel)


def residual_motion(
    display_trace_m: np.ndarray,
    offset_trace_px: np.ndarray,
    px_per_m: float,
) -> float:
    """RMS apparent content motion (px) for paired position/offset traces.

    Apparent position is the display position expressed in pixels plus the
    content offset; its mean is removed so only motion, not placement,
    counts.
    """
    display = np.asarray(display_trace_m, dtype=float)
    offset = np.asarray(offset_trace_px, dtype=float)
    if display.shape[0] != offset.shape[0]:
        raise LengthMismatch(f"{display.shape[0]} vs {offset.shape[0]} samples")
    apparent = display * px_per_m + offset
    apparent = apparent - apparent.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(np.atleast_2d(apparent.T).T ** 2, axis=-1))))


class DelayLine:
    """Fixed-latency FIFO used to model sensing-to-render delay."""

    def __init__(self, delay_s: float, dt: float, width: int = 2):
        steps = max(0, int(round(delay_s / dt)))
        self._buf = [np.zeros(width) for _ in range(steps)]

    def push(self, value: np.ndarray) -> np.ndarray:
        if not self._buf:
            return np.asarray(value, dtype=float)
        self._buf.append(np.asarray(value, dtype=float))
        return self._buf.pop(0)
