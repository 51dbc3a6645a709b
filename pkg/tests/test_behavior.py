import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hoversim.behavior import (
    ActuationMask,
    BehaviorConfig,
    BehaviorMachine,
    BehaviorMode,
    BehaviorState,
    mask_of,
    step_behavior,
)
from hoversim.errors import TimeRegression
from hoversim.vision import UserEvent

CFG = BehaviorConfig(patience=5.0, tau_threshold=math.radians(30.0))
FACING = math.pi / 2
TURNED = math.pi / 2 + math.radians(45.0)  # beyond the 30 deg threshold

HOME = BehaviorState(BehaviorMode.HOME)
AWAIT = BehaviorState(BehaviorMode.AWAIT)


def idle(entered):
    return BehaviorState(BehaviorMode.IDLE, idle_entered_at=entered)


class TestMaskOf:
    def test_home_all_on(self):
        assert mask_of(BehaviorMode.HOME) == ActuationMask(True, True, True)

    def test_idle_all_off(self):
        assert mask_of(BehaviorMode.IDLE) == ActuationMask(False, False, False)

    def test_await_yaw_only(self):
        assert mask_of(BehaviorMode.AWAIT) == ActuationMask(True, False, False)


# The full transition table: (state, event, tau, now) -> expected mode.
# Timer variants cover both sides of the patience edge; Lost rows keep the
# state and force the all-off mask.
TABLE = [
    # Home
    (HOME, UserEvent.SUMMONING, FACING, 10.0, BehaviorMode.HOME),
    (HOME, UserEvent.RELIEVING, FACING, 10.0, BehaviorMode.AWAIT),
    (HOME, UserEvent.MAJOR_MOTION, FACING, 10.0, BehaviorMode.HOME),
    (HOME, UserEvent.MINOR_MOTION, FACING, 10.0, BehaviorMode.HOME),
    (HOME, UserEvent.LOST, FACING, 10.0, BehaviorMode.HOME),
    # Home + user turned away
    (HOME, UserEvent.MINOR_MOTION, TURNED, 10.0, BehaviorMode.IDLE),
    (HOME, UserEvent.MAJOR_MOTION, TURNED, 10.0, BehaviorMode.IDLE),
    (HOME, UserEvent.SUMMONING, TURNED, 10.0, BehaviorMode.IDLE),
    (HOME, UserEvent.RELIEVING, TURNED, 10.0, BehaviorMode.AWAIT),  # gesture wins
    # Idle, timer not yet elapsed (entered at 8, patience 5)
    (idle(8.0), UserEvent.SUMMONING, FACING, 10.0, BehaviorMode.HOME),
    (idle(8.0), UserEvent.RELIEVING, FACING, 10.0, BehaviorMode.AWAIT),
    (idle(8.0), UserEvent.MAJOR_MOTION, FACING, 10.0, BehaviorMode.IDLE),
    (idle(8.0), UserEvent.MINOR_MOTION, FACING, 10.0, BehaviorMode.IDLE),
    (idle(8.0), UserEvent.LOST, FACING, 10.0, BehaviorMode.IDLE),
    # Idle, timer elapsed
    (idle(8.0), UserEvent.MINOR_MOTION, FACING, 13.0, BehaviorMode.HOME),
    (idle(8.0), UserEvent.MAJOR_MOTION, FACING, 13.5, BehaviorMode.HOME),
    (idle(8.0), UserEvent.LOST, FACING, 13.5, BehaviorMode.IDLE),  # lost freezes
    # Await
    (AWAIT, UserEvent.SUMMONING, FACING, 10.0, BehaviorMode.HOME),
    (AWAIT, UserEvent.RELIEVING, FACING, 10.0, BehaviorMode.AWAIT),
    (AWAIT, UserEvent.MAJOR_MOTION, FACING, 10.0, BehaviorMode.AWAIT),
    (AWAIT, UserEvent.MINOR_MOTION, TURNED, 10.0, BehaviorMode.AWAIT),
    (AWAIT, UserEvent.LOST, FACING, 10.0, BehaviorMode.AWAIT),
]


@pytest.mark.parametrize("state,event,tau,now,expected", TABLE)
def test_transition_table(state, event, tau, now, expected):
    new, mask = step_behavior(state, event, tau, now, CFG)
    assert new.mode is expected
    if event is UserEvent.LOST:
        assert mask == ActuationMask(False, False, False)
    else:
        assert mask == mask_of(new.mode)


def test_exhaustive_totality():
    states = [HOME, idle(0.0), AWAIT]
    for state in states:
        for event in UserEvent:
            for tau in (FACING, TURNED):
                new, mask = step_behavior(state, event, tau, 1.0, CFG)
                assert isinstance(new, BehaviorState)
                assert isinstance(mask, ActuationMask)


def test_idle_entry_records_now_and_timer_restart():
    new, _ = step_behavior(HOME, UserEvent.MINOR_MOTION, TURNED, 3.25, CFG)
    assert new.mode is BehaviorMode.IDLE and new.idle_entered_at == 3.25
    # still turned away: patience clock restarts
    again, _ = step_behavior(new, UserEvent.MINOR_MOTION, TURNED, 6.0, CFG)
    assert again.idle_entered_at == 6.0
    # facing again: timer runs from the last restart
    done, _ = step_behavior(again, UserEvent.MINOR_MOTION, FACING, 11.0, CFG)
    assert done.mode is BehaviorMode.HOME


def test_time_regression_rejected():
    machine = BehaviorMachine(CFG)
    machine.step(UserEvent.MINOR_MOTION, FACING, 2.0)
    with pytest.raises(TimeRegression):
        machine.step(UserEvent.MINOR_MOTION, FACING, 1.0)


def simulate_home_time(patience: float) -> float:
    """Scripted trace: the user turns away for 8 s, faces again, turns away
    for 3 s, faces again; 30 s at 10 Hz."""
    cfg = BehaviorConfig(patience=patience, tau_threshold=math.radians(30.0))
    machine = BehaviorMachine(cfg)
    dt = 0.1
    home_time = 0.0
    for i in range(300):
        t = i * dt
        turned = (5.0 <= t < 13.0) or (20.0 <= t < 23.0)
        tau = TURNED if turned else FACING
        machine.step(UserEvent.MINOR_MOTION, tau, t)
        if machine.state.mode is BehaviorMode.HOME:
            home_time += dt
    return home_time


def test_laziness_monotonicity():
    times = [simulate_home_time(p) for p in (0.5, 5.0, 20.0)]
    assert times[0] >= times[1] >= times[2]
    assert times[0] > times[2]  # the sweep is not degenerate


@given(
    steps=st.lists(
        st.tuples(
            st.sampled_from(list(UserEvent)),
            st.floats(0.04, math.pi - 0.04),
            st.floats(0.0, 0.5),
        ),
        min_size=1,
        max_size=60,
    )
)
@settings(max_examples=80, deadline=None)
def test_arbitrary_traces_never_break_invariants(steps):
    machine = BehaviorMachine(BehaviorConfig(patience=1.0))
    now = 0.0
    for event, tau, dt in steps:
        now += dt
        mask = machine.step(event, tau, now)
        state = machine.state
        if state.mode is BehaviorMode.IDLE:
            assert state.idle_entered_at is not None and state.idle_entered_at <= now
        else:
            assert state.idle_entered_at is None
        if event is UserEvent.LOST:
            assert mask == ActuationMask(False, False, False)
        else:
            assert mask == mask_of(state.mode)


def test_mask_consistency_invariant():
    # mask always equals mask_of(resulting state) except under Lost
    states = [HOME, idle(0.0), AWAIT]
    for state in states:
        for event in UserEvent:
            if event is UserEvent.LOST:
                continue
            for tau in (FACING, TURNED):
                for now in (0.1, 7.0):
                    new, mask = step_behavior(state, event, tau, now, CFG)
                    assert mask == mask_of(new.mode)
