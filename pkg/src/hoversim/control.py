"""Discrete PID controllers for yaw, standoff distance, and lateral offset.

All three loops run at the vision rate and emit body-frame velocity
commands (yaw rate rad/s, forward m/s, lateral m/s) consumed by the
plant's inner velocity loop. Derivative acts on the measurement, not the
error, so setpoint steps cause no derivative kick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NoEstimate, NonpositiveDt
from .geometry import PoseEstimate


@dataclass(frozen=True)
class PidGains:
    kp: float = 1.0
    ki: float = 0.0
    kd: float = 0.0
    integral_clamp: float = 1.0
    output_clamp: float = 1.0

    def __post_init__(self):
        if self.integral_clamp <= 0 or self.output_clamp <= 0:
            raise ValueError("clamps must be positive")
        if min(self.kp, self.ki, self.kd) < 0:
            raise ValueError("gains must be non-negative")


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_measurement: float | None = None
    last_output: float = 0.0


def pid_step(
    gains: PidGains,
    state: PidState,
    setpoint: float,
    measurement: float,
    dt: float,
) -> tuple[float, PidState]:
    """One controller tick; returns (command, next state).

    The integral accumulator is clamped before use, the output after
    summation. On the first tick the derivative term is zero.
    """
    if dt <= 0:
        raise NonpositiveDt(f"dt={dt}")
    error = setpoint - measurement
    integral = state.integral + error * dt
    integral = max(-gains.integral_clamp, min(gains.integral_clamp, integral))
    if state.prev_measurement is None:
        derivative = 0.0
    else:
        derivative = (measurement - state.prev_measurement) / dt
    command = gains.kp * error + gains.ki * integral - gains.kd * derivative
    command = max(-gains.output_clamp, min(gains.output_clamp, command))
    return command, PidState(
        integral=integral, prev_measurement=measurement, last_output=command
    )


@dataclass(frozen=True)
class FollowSetpoint:
    """Where the drone should sit relative to the user."""

    distance: float = 0.6       # m, standoff
    orientation: float = math.pi / 2  # rad, desired user facing angle
    lateral_offset: float = 0.0  # m, user offset along camera X (0 = centered)

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("distance setpoint must be positive")


@dataclass(frozen=True)
class FollowGains:
    yaw: PidGains = PidGains(kp=2.0, ki=0.1, kd=0.05, integral_clamp=0.3, output_clamp=2.0)
    forward: PidGains = PidGains(kp=2.2, ki=0.15, kd=0.15, integral_clamp=0.15, output_clamp=1.0)
    lateral: PidGains = PidGains(kp=1.8, ki=0.1, kd=0.1, integral_clamp=0.15, output_clamp=1.0)


@dataclass(frozen=True)
class FollowCommands:
    yaw_rate: float = 0.0
    forward: float = 0.0
    lateral: float = 0.0


class FollowController:
    """Holds the three PID states and turns pose estimates into commands.

    When the estimate is lost the controller emits zero commands and
    freezes its integrators.
    """

    def __init__(self, gains: FollowGains, setpoint: FollowSetpoint):
        self.gains = gains
        self.setpoint = setpoint
        self.yaw_state = PidState()
        self.forward_state = PidState()
        self.lateral_state = PidState()
        self.last_errors = (0.0, 0.0, 0.0)

    def reset(self) -> None:
        self.yaw_state = PidState()
        self.forward_state = PidState()
        self.lateral_state = PidState()

    def step(
        self,
        estimate: PoseEstimate,
        bearing: float,
        dt: float,
        mask: tuple[bool, bool, bool] = (True, True, True),
    ) -> FollowCommands:
        """Run the enabled loops. bearing is the user's angle off the optical
        axis (rad, positive when the user sits to the image right).
        """
        if estimate is None or estimate.confidence <= 0.0:
            raise NoEstimate("follow control needs a confident estimate")
        yaw_on, dist_on, lat_on = mask
        lateral_pos = estimate.distance * math.sin(bearing)

        yaw_cmd = 0.0
        if yaw_on:
            # User right of center -> negative (clockwise) yaw rate.
            yaw_cmd, self.yaw_state = pid_step(
                self.gains.yaw, self.yaw_state, 0.0, bearing, dt
            )
        fwd_cmd = 0.0
        if dist_on:
            # Measurement negated so that "too far" drives a positive
            # (toward the user) command; derivative still acts on the
            # measured distance.
            fwd_cmd, self.forward_state = pid_step(
                self.gains.forward,
                self.forward_state,
                -self.setpoint.distance,
                -estimate.distance,
                dt,
            )
        lat_cmd = 0.0
        if lat_on:
            lat_cmd, self.lateral_state = pid_step(
                self.gains.lateral,
                self.lateral_state,
                -self.setpoint.lateral_offset,
                -lateral_pos,
                dt,
            )
        self.last_errors = (
            -bearing,
            estimate.distance - self.setpoint.distance,
            lateral_pos - self.setpoint.lateral_offset,
        )
        return FollowCommands(yaw_rate=yaw_cmd, forward=fwd_cmd, lateral=lat_cmd)
