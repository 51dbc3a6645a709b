"""Scenario files: every knob of a run, strictly validated JSON.

Unknown keys are rejected anywhere in the document so silent typos cannot
change an experiment. The shipped default scenario spells out every
default explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any

from .anc import NoiseSpectrum, Tone, default_rotor_spectrum
from .behavior import BehaviorConfig
from .control import FollowGains, FollowSetpoint, PidGains
from .errors import ScenarioError
from .geometry import CameraIntrinsics, UserModelParams
from .stabilizer import StabilizerConfig
from .vision import EventThresholds, TimingConfig


@dataclass(frozen=True)
class DisturbanceConfig:
    """Band-limited hover disturbance: exponentially correlated acceleration
    noise per world axis, independent streams."""

    sigma: float = 0.12            # m/s^2, stationary std
    correlation_time: float = 0.15  # s

    def __post_init__(self):
        if self.sigma < 0 or self.correlation_time <= 0:
            raise ValueError("sigma >= 0 and correlation_time > 0 required")


@dataclass(frozen=True)
class VisionConfig:
    detector_sigma_px: float = 1.0
    drift_sigma_px: float = 0.5
    thresholds: EventThresholds = field(default_factory=EventThresholds)


@dataclass(frozen=True)
class AncConfig:
    enabled_spectrum: NoiseSpectrum = field(default_factory=default_rotor_spectrum)
    sample_rate: float = 48000.0
    window: int = 4096
    receiver_distance: float = 0.6   # m, feedback microphone standoff
    adapt_iterations_per_window: int = 4


@dataclass(frozen=True)
class ApiDefaults:
    tolerance: float = 0.03   # m
    hold_time: float = 0.3    # s
    timeout: float = 10.0     # s

    def __post_init__(self):
        if not (self.timeout > self.hold_time > 0) or self.tolerance <= 0:
            raise ValueError("need timeout > hold_time > 0 and tolerance > 0")


@dataclass(frozen=True)
class ControllerConfig:
    gains: FollowGains = field(default_factory=FollowGains)
    setpoint: FollowSetpoint = field(default_factory=FollowSetpoint)


@dataclass(frozen=True)
class ScriptEvent:
    """One timed scenario event.

    kinds: waypoint {x, y, speed} | heading {value} |
    face_drone {on, turn_rate} | gesture {kind: summon|relieve, duration} |
    set {path, value} | feature {name, on}
    """

    time: float
    kind: str
    params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class StartPose:
    human_x: float = 0.0
    human_y: float = 0.0
    human_heading: float = -math.pi / 2  # facing the drone's start side
    drone_x: float = 0.0
    drone_y: float = -0.6
    drone_z: float = 1.45
    drone_yaw: float = math.pi / 2       # facing the human


@dataclass(frozen=True)
class ScriptConfig:
    start: StartPose = field(default_factory=StartPose)
    events: tuple[ScriptEvent, ...] = ()

    def __post_init__(self):
        times = [e.time for e in self.events]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ScenarioError("script event times must be nondecreasing")


@dataclass(frozen=True)
class FeatureToggles:
    following: bool = True
    stabilizer: bool = True
    anc: bool = True


@dataclass(frozen=True)
class WorldConfig:
    """Plant and placement constants."""

    velocity_time_constant: float = 0.15  # s, inner-loop velocity tracking
    yaw_time_constant: float = 0.10       # s
    altitude_gain: float = 2.5            # 1/s, firmware height hold
    xy_hold_gain: float = 2.0             # 1/s, optical-flow position hold
    api_position_gain: float = 1.5        # 1/s, firmware move tracking
    max_speed: float = 1.2                # m/s, firmware velocity clamp
    max_climb: float = 0.8                # m/s
    shoulder_height: float = 1.40         # m above ground
    neck_height: float = 0.25             # m, eye line above shoulder line
    human_speed: float = 0.5              # m/s default waypoint speed
    hover_height: float = 1.45            # m, default altitude setpoint


@dataclass(frozen=True)
class Scenario:
    timing: TimingConfig = field(default_factory=TimingConfig)
    camera: CameraIntrinsics = field(default_factory=CameraIntrinsics)
    user_model: UserModelParams = field(default_factory=UserModelParams)
    world: WorldConfig = field(default_factory=WorldConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    gains: ControllerConfig = field(default_factory=ControllerConfig)
    behavior: BehaviorConfig = field(default_factory=BehaviorConfig)
    vision: VisionConfig = field(default_factory=VisionConfig)
    stabilizer: StabilizerConfig = field(default_factory=StabilizerConfig)
    anc: AncConfig = field(default_factory=AncConfig)
    api_defaults: ApiDefaults = field(default_factory=ApiDefaults)
    script: ScriptConfig = field(default_factory=ScriptConfig)
    features: FeatureToggles = field(default_factory=FeatureToggles)
    seed: int = 42
    duration: float = 30.0

    def __post_init__(self):
        if self.duration <= 0:
            raise ScenarioError("duration must be positive")
        if self.script.events and self.script.events[-1].time > self.duration:
            raise ScenarioError("duration must cover the last script event")


# ---------------------------------------------------------------------------
# strict (de)serialization

_SIMPLE_SECTIONS = {
    "timing": TimingConfig,
    "camera": CameraIntrinsics,
    "user_model": UserModelParams,
    "world": WorldConfig,
    "disturbance": DisturbanceConfig,
    "behavior": BehaviorConfig,
    "stabilizer": StabilizerConfig,
    "api_defaults": ApiDefaults,
    "features": FeatureToggles,
}


def _strict_kwargs(cls, data: dict, where: str) -> dict:
    import dataclasses

    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - allowed
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in {where}")
    return data


def _build(cls, data: Any, where: str):
    if not isinstance(data, dict):
        raise ScenarioError(f"{where} must be an object")
    try:
        return cls(**_strict_kwargs(cls, data, where))
    except ScenarioError:
        raise
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: {exc}") from exc


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ScenarioError("scenario document must be a JSON object")
    known = set(_SIMPLE_SECTIONS) | {
        "gains", "vision", "anc", "script", "seed", "duration",
    }
    unknown = set(doc) - known
    if unknown:
        raise ScenarioError(f"unknown key(s) {sorted(unknown)} in scenario")

    kwargs: dict[str, Any] = {}
    for name, cls in _SIMPLE_SECTIONS.items():
        if name in doc:
            kwargs[name] = _build(cls, doc[name], name)

    if "gains" in doc:
        section = doc["gains"]
        if not isinstance(section, dict):
            raise ScenarioError("gains must be an object")
        _strict_kwargs(ControllerConfig, section, "gains")
        gains = FollowGains()
        if "gains" in section:
            inner = section["gains"]
            _strict_kwargs(FollowGains, inner, "gains.gains")
            gains = FollowGains(
                **{k: _build(PidGains, v, f"gains.gains.{k}") for k, v in inner.items()}
            )
        setpoint = (
            _build(FollowSetpoint, section["setpoint"], "gains.setpoint")
            if "setpoint" in section
            else FollowSetpoint()
        )
        kwargs["gains"] = ControllerConfig(gains=gains, setpoint=setpoint)

    if "vision" in doc:
        section = dict(doc["vision"])
        _strict_kwargs(VisionConfig, section, "vision")
        thresholds = (
            _build(EventThresholds, section.pop("thresholds"), "vision.thresholds")
            if "thresholds" in section
            else EventThresholds()
        )
        kwargs["vision"] = VisionConfig(thresholds=thresholds, **section)

    if "anc" in doc:
        section = dict(doc["anc"])
        _strict_kwargs(AncConfig, section, "anc")
        if "enabled_spectrum" in section:
            spec = section.pop("enabled_spectrum")
            if not isinstance(spec, dict):
                raise ScenarioError("anc.enabled_spectrum must be an object")
            allowed = {"tones", "wideband_rms", "wideband_cutoff"}
            unknown = set(spec) - allowed
            if unknown:
                raise ScenarioError(f"unknown key(s) {sorted(unknown)} in anc.enabled_spectrum")
            tones = tuple(
                Tone(**_strict_kwargs(Tone, t, "anc tone")) for t in spec.get("tones", [])
            )
            section["enabled_spectrum"] = NoiseSpectrum(
                tones=tones,
                wideband_rms=spec.get("wideband_rms", 0.0),
                wideband_cutoff=spec.get("wideband_cutoff", 6000.0),
            )
        kwargs["anc"] = AncConfig(**section)

    if "script" in doc:
        section = dict(doc["script"])
        _strict_kwargs(ScriptConfig, section, "script")
        start = (
            _build(StartPose, section["start"], "script.start")
            if "start" in section
            else StartPose()
        )
        events = []
        for i, ev in enumerate(section.get("events", [])):
            if not isinstance(ev, dict):
                raise ScenarioError(f"script.events[{i}] must be an object")
            unknown = set(ev) - {"time", "kind", "params"}
            if unknown:
                raise ScenarioError(f"unknown key(s) {sorted(unknown)} in script.events[{i}]")
            if "time" not in ev or "kind" not in ev:
                raise ScenarioError(f"script.events[{i}] needs time and kind")
            events.append(
                ScriptEvent(time=float(ev["time"]), kind=str(ev["kind"]), params=dict(ev.get("params", {})))
            )
        kwargs["script"] = ScriptConfig(start=start, events=tuple(events))

    if "seed" in doc:
        kwargs["seed"] = int(doc["seed"])
    if "duration" in doc:
        kwargs["duration"] = float(doc["duration"])
    return Scenario(**kwargs)


def load_scenario(path: str | Path) -> Scenario:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def scenario_to_dict(sc: Scenario) -> dict:
    doc = asdict(sc)
    # asdict on nested dataclasses matches the accepted layout except for
    # the ANC tone tuples, which serialize as dicts already.
    return doc


def save_scenario(sc: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=2, sort_keys=True) + "\n")


def set_by_path(sc: Scenario, path: str, value: Any) -> Scenario:
    """Return a scenario with one dotted numeric/boolean path replaced,
    e.g. "stabilizer.spring" or "behavior.patience"."""
    doc = scenario_to_dict(sc)
    parts = path.split(".")
    node = doc
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ScenarioError(f"unknown config path: {path}")
        node = node[part]
    if not isinstance(node, dict) or parts[-1] not in node:
        raise ScenarioError(f"unknown config path: {path}")
    node[parts[-1]] = value
    return scenario_from_dict(doc)
