"""Follower behavior: Home / Idle / Await with a patience timer.

Home actively follows. Idle holds still after the user turns away past the
facing threshold and returns to Home once the patience time T elapses; a
larger T gives a lazier follower. Await keeps only the yaw loop running so
the user stays in frame. The relieving gesture requests Await, the
summoning gesture requests Home.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import TimeRegression
from .vision import UserEvent


class BehaviorMode(enum.Enum):
    HOME = "home"
    IDLE = "idle"
    AWAIT = "await"


@dataclass(frozen=True)
class BehaviorConfig:
    patience: float = 5.0          # s, dwell in Idle before returning Home
    tau_threshold: float = math.radians(30.0)  # rad off square-facing that triggers Idle

    def __post_init__(self):
        if self.patience <= 0:
            raise ValueError("patience must be positive")
        if not (0.0 < self.tau_threshold < math.pi / 2):
            raise ValueError("tau_threshold must lie in (0, pi/2)")


@dataclass(frozen=True)
class BehaviorState:
    mode: BehaviorMode = BehaviorMode.HOME
    idle_entered_at: float | None = None  # set iff mode is IDLE

    def __post_init__(self):
        if (self.mode is BehaviorMode.IDLE) != (self.idle_entered_at is not None):
            raise ValueError("idle_entered_at is set exactly in Idle")


@dataclass(frozen=True)
class ActuationMask:
    yaw: bool
    distance: bool
    lateral: bool

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (self.yaw, self.distance, self.lateral)


MASK_ALL_OFF = ActuationMask(False, False, False)


def mask_of(mode: BehaviorMode) -> ActuationMask:
    """Controller enablement implied by each mode."""
    if mode is BehaviorMode.HOME:
        return ActuationMask(True, True, True)
    if mode is BehaviorMode.IDLE:
        return ActuationMask(False, False, False)
    return ActuationMask(True, False, False)  # AWAIT: yaw only


def step_behavior(
    state: BehaviorState,
    event: UserEvent,
    user_tau: float,
    now: float,
    cfg: BehaviorConfig,
    last_now: float | None = None,
) -> tuple[BehaviorState, ActuationMask]:
    """Advance one tick. Returns the new state and the actuation mask.

    Lost keeps the current mode but degrades the mask to all-off: the
    follower never moves blind at arm's length. While in Idle, turning away
    past the threshold again restarts the patience timer.
    """
    if last_now is not None and now < last_now:
        raise TimeRegression(f"now={now} < last={last_now}")

    if event is UserEvent.LOST:
        return state, MASK_ALL_OFF

    turned_away = abs(user_tau - math.pi / 2) > cfg.tau_threshold
    mode = state.mode

    if mode is BehaviorMode.HOME:
        if event is UserEvent.RELIEVING:
            new = BehaviorState(BehaviorMode.AWAIT)
        elif turned_away:
            new = BehaviorState(BehaviorMode.IDLE, idle_entered_at=now)
        else:
            new = state  # summoning is a no-op in Home; motions keep following
    elif mode is BehaviorMode.IDLE:
        if event is UserEvent.SUMMONING:
            new = BehaviorState(BehaviorMode.HOME)
        elif event is UserEvent.RELIEVING:
            new = BehaviorState(BehaviorMode.AWAIT)
        elif now - state.idle_entered_at >= cfg.patience:
            new = BehaviorState(BehaviorMode.HOME)
        elif turned_away:
            new = BehaviorState(BehaviorMode.IDLE, idle_entered_at=now)  # restart timer
        else:
            new = state
    else:  # AWAIT
        if event is UserEvent.SUMMONING:
            new = BehaviorState(BehaviorMode.HOME)
        else:
            new = state

    return new, mask_of(new.mode)


class BehaviorMachine:
    """Stateful wrapper enforcing monotone timestamps."""

    def __init__(self, cfg: BehaviorConfig):
        self.cfg = cfg
        self.state = BehaviorState()
        self.mask = mask_of(self.state.mode)
        self._last_now: float | None = None

    def step(self, event: UserEvent, user_tau: float, now: float) -> ActuationMask:
        self.state, self.mask = step_behavior(
            self.state, event, user_tau, now, self.cfg, self._last_now
        )
        self._last_now = now
        return self.mask
