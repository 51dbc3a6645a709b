"""Synchronous movement commands: absolute/relative height, relative x-y.

A caller submits one command at a time; while it is in flight any further
submission is rejected immediately rather than queued, so callers always
know whose command is moving the drone. Completion is judged by a 100 Hz
firmware task: the position error must stay inside the tolerance for the
whole hold time, and an unreachable target times out. While a command is
in flight the follow controllers are suspended; the command owns the
setpoints.
"""

from __future__ import annotations

import enum
import math
import queue
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import SimulationStopped


class MoveKind(enum.Enum):
    Z_ABSOLUTE = "z_absolute"
    Z_RELATIVE = "z_relative"
    XY_RELATIVE = "xy_relative"


@dataclass(frozen=True)
class MoveCommand:
    kind: MoveKind
    z: float = 0.0      # target height (absolute) or height change (relative)
    dx: float = 0.0     # body-frame forward displacement, m
    dy: float = 0.0     # body-frame left displacement, m
    tolerance: float = 0.03
    hold_time: float = 0.3
    timeout: float = 10.0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not (self.timeout > self.hold_time > 0):
            raise ValueError("need timeout > hold_time > 0")


class OutcomeKind(enum.Enum):
    COMPLETED = "completed"
    TIMED_OUT = "timed_out"
    PREEMPTED = "preempted"
    REJECTED_BUSY = "rejected_busy"


@dataclass(frozen=True)
class CommandOutcome:
    kind: OutcomeKind
    elapsed: float = 0.0         # s, for COMPLETED
    residual_error: float = 0.0  # m, for TIMED_OUT


@dataclass
class _PendingSubmit:
    command: MoveCommand
    done: threading.Event = field(default_factory=threading.Event)
    outcome: CommandOutcome | None = None


@dataclass
class ActiveCommand:
    command: MoveCommand
    target: np.ndarray          # world position the firmware drives toward
    accepted_at: float          # sim time, s
    pending: _PendingSubmit | None
    hold_ticks_needed: int
    consecutive_in_tolerance: int = 0

    def progress(self, position: np.ndarray, now: float) -> CommandOutcome | None:
        """Firmware-rate completion check. Returns an outcome when finished."""
        error = float(np.linalg.norm(self.target - position))
        if error < self.command.tolerance:
            self.consecutive_in_tolerance += 1
        else:
            self.consecutive_in_tolerance = 0
        if self.consecutive_in_tolerance >= self.hold_ticks_needed:
            return CommandOutcome(OutcomeKind.COMPLETED, elapsed=now - self.accepted_at)
        if now - self.accepted_at >= self.command.timeout:
            return CommandOutcome(OutcomeKind.TIMED_OUT, residual_error=error)
        return None


class MotionApi:
    """Thread-safe front door for movement commands.

    submit_blocking may be called from any number of threads; submissions
    serialize through the simulation's message queue and exactly one can be
    in flight. The caller blocks until the simulation resolves the command.
    """

    def __init__(self):
        self._inbox: queue.Queue[_PendingSubmit] = queue.Queue()
        self._stopped = threading.Event()

    def submit_blocking(self, command: MoveCommand) -> CommandOutcome:
        if self._stopped.is_set():
            raise SimulationStopped("simulation is not running")
        pending = _PendingSubmit(command)
        self._inbox.put(pending)
        pending.done.wait()
        if pending.outcome is None:
            raise SimulationStopped("simulation stopped before resolving command")
        return pending.outcome

    # --- simulation-side interface -------------------------------------

    def drain(self) -> list[_PendingSubmit]:
        items = []
        while True:
            try:
                items.append(self._inbox.get_nowait())
            except queue.Empty:
                return items

    def mark_stopped(self) -> None:
        self._stopped.set()
        for pending in self.drain():
            pending.outcome = CommandOutcome(OutcomeKind.PREEMPTED)
            pending.done.set()


def resolve_target(
    command: MoveCommand, position: np.ndarray, yaw: float
) -> np.ndarray:
    """World-frame target at acceptance time. Relative x-y moves are taken
    in the body frame (x forward, y left)."""
    target = np.array(position, dtype=float)
    if command.kind is MoveKind.Z_ABSOLUTE:
        target[2] = command.z
    elif command.kind is MoveKind.Z_RELATIVE:
        target[2] = position[2] + command.z
    else:
        fwd = np.array([math.cos(yaw), math.sin(yaw)])
        left = np.array([-math.sin(yaw), math.cos(yaw)])
        target[:2] = position[:2] + command.dx * fwd + command.dy * left
    return target
