"""Deterministic fixed-step world: drone plant, virtual human, master loop.

World frame is ENU-style: X east, Y north, Z up, ground at z = 0. The
camera rides the drone at its position, optical axis along the heading,
image X toward body-right, image Y up. Drone yaw is the heading angle from
+X, counter-clockwise positive.

Everything random draws from named per-stream generators spawned from the
scenario seed, so a world is a pure function of (scenario, seed, command
trace).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import anc as anc_mod
from .api import ActiveCommand, CommandOutcome, MotionApi, OutcomeKind, resolve_target
from .behavior import BehaviorMachine
from .control import FollowCommands, FollowController
from .errors import ScenarioError
from .geometry import BodyLandmarks3D, body_landmarks
from .scenario import Scenario, ScriptEvent
from .stabilizer import DelayLine, StabilizerState, stabilize_step
from .vision import Tracker, UserEvent

TAU_CLIP = math.radians(2.0)  # construction limit for extreme profiles


@dataclass
class DroneState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0
    yaw_rate: float = 0.0

    def heading(self) -> np.ndarray:
        return np.array([math.cos(self.yaw), math.sin(self.yaw), 0.0])

    def right(self) -> np.ndarray:
        return np.array([math.sin(self.yaw), -math.cos(self.yaw), 0.0])


@dataclass
class HumanState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(2))
    heading: float = 0.0
    left_wrist_raised: bool = False
    right_wrist_raised: bool = False
    waypoint: np.ndarray | None = None
    speed: float = 0.5
    live_velocity: np.ndarray | None = None   # (vx, vy), m/s
    live_heading_rate: float = 0.0
    # Mannequin-operator mode: slew the bust toward the drone, like the
    # remote operator keeping the torso pointed at the follower.
    face_drone: bool = False
    face_turn_rate: float = 2.0   # rad/s


class OuProcess:
    """Exponentially correlated (band-limited) noise, exact discretization."""

    def __init__(self, sigma: float, correlation_time: float, rng: np.random.Generator):
        self.sigma = sigma
        self.tau = correlation_time
        self.rng = rng
        self.value = 0.0

    def step(self, dt: float) -> float:
        decay = math.exp(-dt / self.tau)
        scatter = self.sigma * math.sqrt(max(0.0, 1.0 - decay * decay))
        self.value = self.value * decay + scatter * self.rng.standard_normal()
        return self.value


def plant_step(
    state: DroneState,
    velocity_cmd: np.ndarray,
    yaw_rate_cmd: float,
    disturbance: np.ndarray,
    dt: float,
    velocity_tc: float = 0.15,
    yaw_tc: float = 0.10,
) -> tuple[DroneState, np.ndarray]:
    """First-order velocity tracking plus disturbance acceleration.

    Returns (new state, realized acceleration) so the display stabilizer can
    be fed the same acceleration the plant produced. Altitude is clamped at
    the ground.
    """
    accel = (velocity_cmd - state.velocity) / velocity_tc + disturbance
    velocity = state.velocity + dt * accel
    position = state.position + dt * velocity
    yaw_rate = state.yaw_rate + dt * (yaw_rate_cmd - state.yaw_rate) / yaw_tc
    yaw = (state.yaw + dt * yaw_rate + math.pi) % (2 * math.pi) - math.pi
    if position[2] < 0.0:
        position = position.copy()
        position[2] = 0.0
        velocity = velocity.copy()
        velocity[2] = max(0.0, velocity[2])
    return (
        DroneState(position=position, velocity=velocity, yaw=yaw, yaw_rate=yaw_rate),
        accel,
    )


def human_step(state: HumanState, dt: float) -> HumanState:
    """Waypoint pursuit or live velocity; stationary otherwise."""
    pos = state.position
    heading = state.heading
    waypoint = state.waypoint
    if state.live_velocity is not None:
        pos = pos + dt * state.live_velocity
        heading = (heading + dt * state.live_heading_rate + math.pi) % (2 * math.pi) - math.pi
    elif waypoint is not None:
        delta = waypoint - pos
        dist = float(np.linalg.norm(delta))
        step = state.speed * dt
        if dist <= step:
            pos = waypoint.copy()
            waypoint = None
        else:
            pos = pos + delta * (step / dist)
    return replace(state, position=pos, heading=heading, waypoint=waypoint)


def true_user_geometry(
    drone: DroneState, human: HumanState, shoulder_height: float
) -> tuple[float, float, float, float]:
    """(tau, distance, bearing, height_offset) of the human as the camera
    sees them. tau is clipped into the representable (2 deg, 178 deg) band;
    back-facing poses saturate at the profile limits."""
    rel = human.position - drone.position[:2]
    distance = float(np.linalg.norm(rel))
    fwd = drone.heading()[:2]
    right = drone.right()[:2]
    bearing = math.atan2(float(np.dot(rel, right)), float(np.dot(rel, fwd)))
    facing = np.array([math.cos(human.heading), math.sin(human.heading)])
    phi = math.atan2(float(np.dot(facing, right)), -float(np.dot(facing, fwd)))
    tau = math.pi / 2 - phi
    tau = min(max(tau, TAU_CLIP), math.pi - TAU_CLIP)
    height_offset = shoulder_height - float(drone.position[2])
    return tau, distance, bearing, height_offset


class AncLoop:
    """Windowed noise synthesis and cancellation, on its own sample clock."""

    def __init__(self, cfg, rng: np.random.Generator, enabled: bool = True):
        self.cfg = cfg
        self.rng = rng
        self.enabled = enabled
        path = anc_mod.AcousticPath(distance=cfg.receiver_distance)
        self.spectrum = anc_mod.receiver_spectrum(cfg.enabled_spectrum, path)
        self.state: anc_mod.AncState | None = None
        self.sample_index = 0
        self.level_dba = math.nan
        self.raw_level_dba = math.nan

    def _noise_window(self) -> np.ndarray:
        n = self.cfg.window
        sr = self.cfg.sample_rate
        t = (self.sample_index + np.arange(n)) / sr
        out = np.zeros(n)
        for tone in self.spectrum.tones:
            out += tone.amplitude * np.sin(2 * math.pi * tone.frequency * t + tone.phase)
        if self.spectrum.wideband_rms > 0.0:
            white = self.rng.standard_normal(n)
            spec = np.fft.rfft(white)
            freqs = np.fft.rfftfreq(n, 1.0 / sr)
            spec[freqs < self.spectrum.wideband_cutoff] = 0.0
            shaped = np.fft.irfft(spec, n)
            rms = math.sqrt(float(np.mean(shaped**2)))
            if rms > 0:
                out += shaped * (self.spectrum.wideband_rms / rms)
        return out

    def advance_to(self, t: float) -> None:
        sr = self.cfg.sample_rate
        n = self.cfg.window
        while self.sample_index + n <= int(t * sr):
            noise = self._noise_window()
            self.raw_level_dba = anc_mod.a_weighted_level(noise, sr)
            if not self.enabled:
                self.level_dba = self.raw_level_dba
                self.sample_index += n
                continue
            freq, amp = anc_mod.strongest_tone(noise, sr, window=n)
            t0 = self.sample_index / sr
            if self.state is None:
                self.state = anc_mod.AncState(
                    target_frequency=freq, amplitude_step=0.25 * amp
                )
            elif abs(freq - self.state.target_frequency) > 0.5:
                # Keep the wave's instantaneous phase continuous across the
                # frequency re-lock so adaptation only has to trim, not
                # re-acquire.
                old = self.state.target_frequency
                carried = (
                    self.state.anti_phase + 2 * math.pi * (old - freq) * t0
                ) % (2 * math.pi)
                self.state = replace(
                    self.state, target_frequency=freq, anti_phase=carried, converged=False
                )
            for _ in range(self.cfg.adapt_iterations_per_window):
                self.state = anc_mod.adapt_step(
                    self.state, noise, sr, start_index=self.sample_index
                )
            anti = anc_mod.anti_wave(self.state, n, sr, start_index=self.sample_index)
            residual = noise + anti
            if float(np.mean(residual**2)) > float(np.mean(noise**2)):
                # Never emit an anti-wave that makes this window worse than
                # silence; drop it and force a cold restart.
                residual = noise
                self.state = replace(self.state, anti_amplitude=0.0)
            self.level_dba = anc_mod.a_weighted_level(residual, sr)
            self.sample_index += n


@dataclass
class TelemetryFrame:
    t: float
    drone: DroneState
    human: HumanState
    tau_true: float
    d_true: float
    tau_est: float
    d_est: float
    confidence: float
    behavior: str
    event: str
    err_yaw: float
    err_dist: float
    err_lat: float
    cmd: FollowCommands
    stab_offset: np.ndarray
    stab_apparent: np.ndarray
    anc_dba: float
    api_status: str
    fault: str = ""


class World:
    """Owns all module state and advances it at the physics rate."""

    def __init__(self, scenario: Scenario, api: MotionApi | None = None):
        self.sc = scenario
        self.timing = scenario.timing
        self.dt = self.timing.physics_dt
        self.div_vision = int(round(self.timing.physics_rate / self.timing.vision_rate))
        self.div_firmware = int(round(self.timing.physics_rate / self.timing.firmware_task_rate))

        seq = np.random.SeedSequence(scenario.seed)
        kids = seq.spawn(6)
        self.rng_detect = np.random.default_rng(kids[0])
        self.rng_drift = np.random.default_rng(kids[1])
        dist_rngs = [np.random.default_rng(k) for k in kids[2:5]]
        self.rng_anc = np.random.default_rng(kids[5])

        start = scenario.script.start
        self.drone = DroneState(
            position=np.array([start.drone_x, start.drone_y, start.drone_z]),
            yaw=start.drone_yaw,
        )
        self.human = HumanState(
            position=np.array([start.human_x, start.human_y]),
            heading=start.human_heading,
            speed=scenario.world.human_speed,
        )
        self.disturbance = [
            OuProcess(scenario.disturbance.sigma, scenario.disturbance.correlation_time, r)
            for r in dist_rngs
        ]

        self.tracker = Tracker(
            cam=scenario.camera,
            user=scenario.user_model,
            timing=self.timing,
            thresholds=scenario.vision.thresholds,
            setpoint=scenario.gains.setpoint,
            rng=self.rng_detect,
            sigma_px=scenario.vision.detector_sigma_px,
            sigma_drift_px=scenario.vision.drift_sigma_px,
            rng_drift=self.rng_drift,
        )
        self.controller = FollowController(scenario.gains.gains, scenario.gains.setpoint)
        self.behavior = BehaviorMachine(scenario.behavior)
        self.stab_state = StabilizerState()
        self.stab_delay = DelayLine(scenario.stabilizer.sensing_delay, self.dt)
        self.stab_ref_right = self.drone.right()[:2].copy()
        self.stab_ref_pos = self.drone.position.copy()
        self.anc_loop = AncLoop(scenario.anc, self.rng_anc, enabled=scenario.features.anc)
        self.features = {
            "following": scenario.features.following,
            "stabilizer": scenario.features.stabilizer,
            "anc": scenario.features.anc,
        }

        self.api = api or MotionApi()
        self.active_command: ActiveCommand | None = None
        self.last_outcome: CommandOutcome | None = None
        self.z_setpoint = scenario.world.hover_height
        # Optical-flow style horizontal hold, engaged whenever neither the
        # follow controllers nor a movement command own the x-y axes.
        self.xy_hold: np.ndarray | None = self.drone.position[:2].copy()

        self.tick_index = 0
        self.counters = {"physics": 0, "vision": 0, "detector": 0, "firmware": 0}
        self.frames: list[TelemetryFrame] = []
        self.command_log: list[dict] = []
        self._held_cmd = FollowCommands()
        self._gesture_until = {"left": -1.0, "right": -1.0}
        self._script_cursor = 0
        self._pending_events: tuple[ScriptEvent, ...] = scenario.script.events
        self._live_until = -1.0

    # ------------------------------------------------------------------
    @property
    def t(self) -> float:
        return self.tick_index * self.dt

    def apply_script(self, t: float) -> None:
        while (
            self._script_cursor < len(self._pending_events)
            and self._pending_events[self._script_cursor].time <= t + 1e-12
        ):
            ev = self._pending_events[self._script_cursor]
            self._script_cursor += 1
            self.apply_event(ev.kind, ev.params, t)

    def apply_event(self, kind: str, params: dict, t: float) -> None:
        if kind == "waypoint":
            self.human.waypoint = np.array([float(params["x"]), float(params["y"])])
            self.human.speed = float(params.get("speed", self.sc.world.human_speed))
            self.human.live_velocity = None
        elif kind == "heading":
            self.human.heading = float(params["value"])
            self.human.face_drone = False
        elif kind == "face_drone":
            self.human.face_drone = bool(params.get("on", True))
            if "turn_rate" in params:
                self.human.face_turn_rate = float(params["turn_rate"])
        elif kind == "gesture":
            side = "right" if params.get("kind", "summon") == "summon" else "left"
            self._gesture_until[side] = t + float(params.get("duration", 0.5))
        elif kind == "set":
            self.set_value(str(params["path"]), params["value"])
        elif kind == "feature":
            name = str(params["name"])
            if name not in self.features:
                raise ScenarioError(f"unknown feature: {name}")
            self.features[name] = bool(params["on"])
            if name == "anc":
                self.anc_loop.enabled = self.features["anc"]
        else:
            raise ScenarioError(f"unknown script event kind: {kind}")

    def live_move(self, vx: float, vy: float, vheading: float, ttl: float = 0.35) -> None:
        """Velocity teleoperation of the human; decays unless refreshed."""
        self.human.waypoint = None
        self.human.live_velocity = np.array([vx, vy])
        self.human.live_heading_rate = vheading
        if vheading != 0.0:
            self.human.face_drone = False
        self._live_until = self.t + ttl

    def submit_nonblocking(self, command) -> str:
        """Accept or reject a movement command at this tick boundary.

        Used by the wire protocol; programmatic callers use
        MotionApi.submit_blocking, which resolves through the same in-flight
        exclusivity.
        """
        if self.active_command is not None:
            self.command_log.append({"t": self.t, "outcome": "rejected_busy"})
            return "busy"
        target = resolve_target(command, self.drone.position, self.drone.yaw)
        hold_ticks = int(round(command.hold_time * self.timing.firmware_task_rate))
        self.active_command = ActiveCommand(
            command=command,
            target=target,
            accepted_at=self.t,
            pending=None,
            hold_ticks_needed=max(1, hold_ticks),
        )
        self.command_log.append(
            {"t": self.t, "outcome": "accepted", "kind": command.kind.value}
        )
        return "accepted"

    def set_value(self, path: str, value) -> None:
        """Runtime-settable knobs (the settings panel's surface)."""
        if path == "behavior.patience":
            self.behavior.cfg = replace(self.behavior.cfg, patience=float(value))
        elif path == "behavior.tau_threshold":
            self.behavior.cfg = replace(self.behavior.cfg, tau_threshold=float(value))
        elif path == "gains.setpoint.distance":
            sp = replace(self.controller.setpoint, distance=float(value))
            self.controller.setpoint = sp
            self.tracker.setpoint = sp
        elif path == "gains.setpoint.lateral_offset":
            sp = replace(self.controller.setpoint, lateral_offset=float(value))
            self.controller.setpoint = sp
            self.tracker.setpoint = sp
        elif path.startswith("features."):
            name = path.split(".", 1)[1]
            if name not in self.features:
                raise ScenarioError(f"unknown feature: {name}")
            self.features[name] = bool(value)
            if name == "anc":
                self.anc_loop.enabled = self.features["anc"]
        else:
            raise ScenarioError(f"path not settable at runtime: {path}")

    # ------------------------------------------------------------------
    def _drain_api(self, t: float) -> None:
        for pending in self.api.drain():
            if self.active_command is not None:
                pending.outcome = CommandOutcome(OutcomeKind.REJECTED_BUSY)
                pending.done.set()
                self.command_log.append({"t": t, "outcome": "rejected_busy"})
                continue
            target = resolve_target(pending.command, self.drone.position, self.drone.yaw)
            hold_ticks = int(round(pending.command.hold_time * self.timing.firmware_task_rate))
            self.active_command = ActiveCommand(
                command=pending.command,
                target=target,
                accepted_at=t,
                pending=pending,
                hold_ticks_needed=max(1, hold_ticks),
            )
            self.command_log.append({"t": t, "outcome": "accepted", "kind": pending.command.kind.value})

    def _firmware(self, t: float) -> None:
        if self.active_command is None:
            return
        outcome = self.active_command.progress(self.drone.position, t)
        if outcome is not None:
            pending = self.active_command.pending
            if pending is not None:
                pending.outcome = outcome
                pending.done.set()
            self.command_log.append(
                {
                    "t": t,
                    "outcome": outcome.kind.value,
                    "elapsed": outcome.elapsed,
                    "residual": outcome.residual_error,
                }
            )
            # A completed move leaves the altitude where the command put it;
            # a timed-out one must not keep chasing an unreachable height.
            if outcome.kind is OutcomeKind.COMPLETED:
                self.z_setpoint = float(self.active_command.target[2])
            else:
                self.z_setpoint = float(self.drone.position[2])
            self.last_outcome = outcome
            self.active_command = None

    def _velocity_command(self) -> tuple[np.ndarray, float]:
        """World-frame velocity + yaw-rate command for the physics step."""
        w = self.sc.world
        if self.active_command is not None:
            err = self.active_command.target - self.drone.position
            v = np.clip(w.api_position_gain * err, -w.max_speed, w.max_speed)
            v[2] = np.clip(v[2], -w.max_climb, w.max_climb)
            return v, 0.0
        cmd = self._held_cmd
        fwd = self.drone.heading()
        right = self.drone.right()
        if self.xy_hold is not None:
            v = np.zeros(3)
            v[:2] = np.clip(
                w.xy_hold_gain * (self.xy_hold - self.drone.position[:2]),
                -w.max_speed,
                w.max_speed,
            )
        else:
            v = cmd.forward * fwd + cmd.lateral * right
        vz = np.clip(
            w.altitude_gain * (self.z_setpoint - self.drone.position[2]),
            -w.max_climb,
            w.max_climb,
        )
        v[2] = vz
        return v, cmd.yaw_rate

    def _vision_frame(self, t: float) -> None:
        fault = ""
        tau_true, d_true, bearing_true, height_off = true_user_geometry(
            self.drone, self.human, self.sc.world.shoulder_height
        )
        truth: BodyLandmarks3D | None
        try:
            truth = body_landmarks(
                self.sc.user_model,
                tau_true,
                d_true,
                neck_height=self.sc.world.neck_height,
                bearing=bearing_true,
                height_offset=height_off,
                left_wrist_raised=self.human.left_wrist_raised,
                right_wrist_raised=self.human.right_wrist_raised,
            )
        except ValueError:
            truth = None

        frame, obs = self.tracker.observe(truth)
        if frame.source.value == "detector":
            self.counters["detector"] += 1

        try:
            event = self.tracker.classify()
        except Exception:
            event = UserEvent.LOST if obs.lost else UserEvent.MINOR_MOTION

        tau_est = obs.estimate.tau if obs.estimate else math.nan
        d_est = obs.estimate.distance if obs.estimate else math.nan
        conf = obs.estimate.confidence if obs.estimate else 0.0

        mask = self.behavior.step(event, tau_est if obs.estimate else math.pi / 2, t)

        cmd = FollowCommands()
        if (
            self.features["following"]
            and self.active_command is None
            and obs.estimate is not None
            and obs.estimate.confidence > 0.0
            and not obs.lost
        ):
            bearing = self.tracker.bearing(frame.landmarks)
            try:
                cmd = self.controller.step(
                    obs.estimate, bearing, self.timing.vision_dt, mask.as_tuple()
                )
            except Exception as exc:  # recorded as a simulation fault
                fault = f"control:{exc}"
                cmd = FollowCommands()
            translating = mask.distance or mask.lateral
        else:
            translating = False
        self._held_cmd = cmd
        if translating:
            self.xy_hold = None
        elif self.xy_hold is None:
            self.xy_hold = self.drone.position[:2].copy()

        lat = float(np.dot(self.drone.position[:2] - self.stab_ref_pos[:2], self.stab_ref_right))
        vert = float(self.drone.position[2] - self.stab_ref_pos[2])
        ppm = self.sc.stabilizer.px_per_m
        apparent = np.array([lat * ppm, vert * ppm]) + self.stab_state.offset

        err_yaw, err_dist, err_lat = self.controller.last_errors
        self.frames.append(
            TelemetryFrame(
                t=t,
                drone=replace(
                    self.drone,
                    position=self.drone.position.copy(),
                    velocity=self.drone.velocity.copy(),
                ),
                human=replace(self.human, position=self.human.position.copy()),
                tau_true=tau_true,
                d_true=d_true,
                tau_est=tau_est,
                d_est=d_est,
                confidence=conf,
                behavior=self.behavior.state.mode.value,
                event=event.value,
                err_yaw=err_yaw,
                err_dist=err_dist,
                err_lat=err_lat,
                cmd=cmd,
                stab_offset=self.stab_state.offset.copy(),
                stab_apparent=apparent,
                anc_dba=self.anc_loop.level_dba,
                api_status=(
                    f"in_flight:{self.active_command.command.kind.value}"
                    if self.active_command
                    else "idle"
                ),
                fault=fault,
            )
        )

    def tick(self) -> None:
        t = self.t
        self.apply_script(t)
        self._drain_api(t)
        self.human.left_wrist_raised = t < self._gesture_until["left"]
        self.human.right_wrist_raised = t < self._gesture_until["right"]
        if self.human.live_velocity is not None and t > self._live_until:
            self.human.live_velocity = None
            self.human.live_heading_rate = 0.0

        if self.tick_index % self.div_firmware == 0:
            self.counters["firmware"] += 1
            self._firmware(t)
        if self.tick_index % self.div_vision == 0:
            self.counters["vision"] += 1
            self._vision_frame(t)
        self.counters["physics"] += 1

        if self.human.face_drone:
            to_drone = self.drone.position[:2] - self.human.position
            if float(np.linalg.norm(to_drone)) > 1e-6:
                want = math.atan2(to_drone[1], to_drone[0])
                diff = (want - self.human.heading + math.pi) % (2 * math.pi) - math.pi
                slew = self.human.face_turn_rate * self.dt
                self.human.heading = (
                    self.human.heading + max(-slew, min(slew, diff)) + math.pi
                ) % (2 * math.pi) - math.pi
        self.human = human_step(self.human, self.dt)
        v_cmd, yaw_rate_cmd = self._velocity_command()
        gust = np.array([p.step(self.dt) for p in self.disturbance])
        self.drone, accel = plant_step(
            self.drone,
            v_cmd,
            yaw_rate_cmd,
            gust,
            self.dt,
            velocity_tc=self.sc.world.velocity_time_constant,
            yaw_tc=self.sc.world.yaw_time_constant,
        )

        accel_display = np.array(
            [float(np.dot(accel[:2], self.drone.right()[:2])), float(accel[2])]
        )
        delayed = self.stab_delay.push(accel_display)
        if self.features["stabilizer"]:
            self.stab_state = stabilize_step(self.stab_state, delayed, self.dt, self.sc.stabilizer)

        self.anc_loop.advance_to(t + self.dt)
        self.tick_index += 1

    def run(self, duration: float | None = None) -> None:
        duration = self.sc.duration if duration is None else duration
        steps = int(round(duration * self.timing.physics_rate))
        for _ in range(steps):
            self.tick()
        self.finish()

    def finish(self) -> None:
        if self.active_command is not None:
            pending = self.active_command.pending
            if pending is not None:
                pending.outcome = CommandOutcome(OutcomeKind.PREEMPTED)
                pending.done.set()
            self.command_log.append({"t": self.t, "outcome": "preempted"})
            self.active_command = None
        self.api.mark_stopped()
