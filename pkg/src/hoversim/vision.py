"""Landmark tracking at the camera rate and user-state classification.

A full (expensive) detection runs on every detector_period-th frame; the
frames in between shift the previous landmarks by the scene's pixel
displacement plus a small accumulating drift, mimicking optical-flow
propagation without touching imagery. Classification maps each tracked
frame to exactly one user event, with gesture and motion debouncing.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .control import FollowSetpoint
from .errors import BehindCamera, InsufficientHistory
from .geometry import (
    BodyLandmarks3D,
    CameraIntrinsics,
    PoseEstimate,
    ProjectedLandmarks,
    UserModelParams,
    estimate_pose,
    measurements_from_pixels,
    project,
)


@dataclass(frozen=True)
class TimingConfig:
    """Loop rates in Hz; the physics rate must divide evenly by all others."""

    vision_rate: float = 50.0
    detector_period: int = 4     # frames between full detections
    controller_rate: float = 50.0
    firmware_task_rate: float = 100.0
    physics_rate: float = 1000.0

    def __post_init__(self):
        if self.detector_period < 1:
            raise ValueError("detector_period must be >= 1")
        for rate in (self.vision_rate, self.controller_rate, self.firmware_task_rate):
            ratio = self.physics_rate / rate
            if abs(ratio - round(ratio)) > 1e-9:
                raise ValueError("physics_rate must be an integer multiple of all rates")

    @property
    def physics_dt(self) -> float:
        return 1.0 / self.physics_rate

    @property
    def vision_dt(self) -> float:
        return 1.0 / self.vision_rate


class FrameSource(enum.Enum):
    DETECTOR = "detector"
    PROPAGATED = "propagated"


class UserEvent(enum.Enum):
    SUMMONING = "summoning"
    RELIEVING = "relieving"
    MAJOR_MOTION = "major_motion"
    MINOR_MOTION = "minor_motion"
    LOST = "lost"


@dataclass(frozen=True)
class TrackedFrame:
    index: int
    source: FrameSource
    landmarks: ProjectedLandmarks | None
    lost: bool


def detect(
    truth: BodyLandmarks3D,
    cam: CameraIntrinsics,
    rng: np.random.Generator,
    sigma_px: float = 1.0,
    frame_index: int = 0,
) -> TrackedFrame:
    """Full detection: project ground truth, add Gaussian pixel noise.

    The frame is lost when any of the four core landmarks leaves the sensor
    or the user is behind the camera.
    """
    try:
        clean = project(truth, cam)
    except BehindCamera:
        return TrackedFrame(frame_index, FrameSource.DETECTOR, None, lost=True)
    pts = {}
    for name in ("e0", "e1", "s0", "s1", "w_left", "w_right"):
        px = getattr(clean, name)
        if px is None:
            pts[name] = None
            continue
        if sigma_px > 0.0:
            px = px + rng.normal(0.0, sigma_px, size=2)
        else:
            px = px.copy()
        pts[name] = px
    p, q, span = measurements_from_pixels(pts["e0"], pts["e1"], pts["s0"], pts["s1"])
    bounds = {n: cam.in_bounds(px) for n, px in pts.items() if px is not None}
    landmarks = ProjectedLandmarks(
        e0=pts["e0"], e1=pts["e1"], s0=pts["s0"], s1=pts["s1"],
        w_left=pts["w_left"], w_right=pts["w_right"],
        p=p, q=q, eye_span_px=span, in_bounds=bounds,
    )
    lost = not landmarks.all_core_in_bounds
    return TrackedFrame(frame_index, FrameSource.DETECTOR, landmarks, lost=lost)


def propagate(
    prev: TrackedFrame,
    displacement: np.ndarray,
    rng: np.random.Generator,
    sigma_drift_px: float = 0.5,
    frame_index: int | None = None,
    cam: CameraIntrinsics | None = None,
) -> TrackedFrame:
    """Shift the previous frame's landmarks by the scene displacement plus
    per-landmark drift noise. Drift accumulates across propagated frames and
    is wiped by the next full detection. Passing the camera refreshes the
    in-sensor flags (and the lost state) for the moved points.
    """
    if prev.lost or prev.landmarks is None:
        raise ValueError("cannot propagate a lost frame")
    idx = prev.index + 1 if frame_index is None else frame_index
    lm = prev.landmarks
    pts = {}
    for name in ("e0", "e1", "s0", "s1", "w_left", "w_right"):
        px = getattr(lm, name)
        if px is None:
            pts[name] = None
            continue
        moved = px + displacement
        if sigma_drift_px > 0.0:
            moved = moved + rng.normal(0.0, sigma_drift_px, size=2)
        pts[name] = moved
    p, q, span = measurements_from_pixels(pts["e0"], pts["e1"], pts["s0"], pts["s1"])
    if cam is None:
        bounds = dict(lm.in_bounds)
    else:
        bounds = {n: cam.in_bounds(px) for n, px in pts.items() if px is not None}
    landmarks = ProjectedLandmarks(
        e0=pts["e0"], e1=pts["e1"], s0=pts["s0"], s1=pts["s1"],
        w_left=pts["w_left"], w_right=pts["w_right"],
        p=p, q=q, eye_span_px=span, in_bounds=bounds,
    )
    return TrackedFrame(idx, FrameSource.PROPAGATED, landmarks, lost=not landmarks.all_core_in_bounds)


@dataclass(frozen=True)
class EventThresholds:
    """Acceptable-motion ranges and debounce lengths for classification."""

    position_range: float = 0.20          # m along camera X or viewing distance
    orientation_range: float = math.radians(15.0)
    motion_frames: int = 2                # consecutive frames out of range
    gesture_frames: int = 5               # consecutive wrist-above-eye frames


@dataclass(frozen=True)
class FrameObservation:
    """One classified frame's worth of evidence."""

    lost: bool
    estimate: PoseEstimate | None
    landmarks: ProjectedLandmarks | None
    lateral_error: float = 0.0   # m, user offset along camera X vs setpoint
    distance_error: float = 0.0  # m, viewing distance vs setpoint


def _wrist_above_eyes(lm: ProjectedLandmarks, wrist: str) -> bool:
    w = getattr(lm, wrist)
    if w is None:
        return False
    eye_line = 0.5 * (lm.e0[1] + lm.e1[1])
    return bool(w[1] > eye_line)


def classify_user_event(
    history: Sequence[FrameObservation],
    setpoint: FollowSetpoint,
    thresholds: EventThresholds,
) -> UserEvent:
    """Classify the newest frame given recent history.

    Priority: Summoning > Relieving > Lost > Major_motion > Minor_motion.
    Gestures fire only after gesture_frames consecutive wrist-above-eye
    frames; motion only after motion_frames consecutive out-of-range frames.
    """
    if len(history) < 2:
        raise InsufficientHistory(f"{len(history)} frame(s), need >= 2")

    def held(frames: int, pred) -> bool:
        if len(history) < frames:
            return False
        recent = history[-frames:]
        return all(not obs.lost and obs.landmarks is not None and pred(obs) for obs in recent)

    if held(thresholds.gesture_frames, lambda o: _wrist_above_eyes(o.landmarks, "w_right")):
        return UserEvent.SUMMONING
    if held(thresholds.gesture_frames, lambda o: _wrist_above_eyes(o.landmarks, "w_left")):
        return UserEvent.RELIEVING
    if history[-1].lost:
        return UserEvent.LOST

    def out_of_range(obs: FrameObservation) -> bool:
        if obs.estimate is None:
            return False
        return (
            abs(obs.lateral_error) > thresholds.position_range
            or abs(obs.distance_error) > thresholds.position_range
            or abs(obs.estimate.tau - setpoint.orientation) > thresholds.orientation_range
        )

    if held(thresholds.motion_frames, out_of_range):
        return UserEvent.MAJOR_MOTION
    return UserEvent.MINOR_MOTION


class Tracker:
    """Owns the detect/propagate cadence and the classification history."""

    def __init__(
        self,
        cam: CameraIntrinsics,
        user: UserModelParams,
        timing: TimingConfig,
        thresholds: EventThresholds,
        setpoint: FollowSetpoint,
        rng: np.random.Generator,
        sigma_px: float = 1.0,
        sigma_drift_px: float = 0.5,
        history_len: int = 25,
        rng_drift: np.random.Generator | None = None,
    ):
        self.cam = cam
        self.user = user
        self.timing = timing
        self.thresholds = thresholds
        self.setpoint = setpoint
        self.rng = rng
        self.rng_drift = rng_drift if rng_drift is not None else rng
        self.sigma_px = sigma_px
        self.sigma_drift_px = sigma_drift_px
        self.history_len = history_len
        self.frame_index = 0
        self.last_frame: TrackedFrame | None = None
        self.history: list[FrameObservation] = []
        self._last_truth_centroid: np.ndarray | None = None

    def observe(self, truth: BodyLandmarks3D | None) -> tuple[TrackedFrame, FrameObservation]:
        """Advance one vision frame against the current ground truth.

        Detector frames re-acquire from truth; in-between frames propagate
        the previous landmarks by the true centroid displacement. A lost or
        absent user yields a lost frame either way.
        """
        idx = self.frame_index
        detector_due = idx % self.timing.detector_period == 0

        truth_centroid = None
        if truth is not None:
            try:
                truth_centroid = project(truth, self.cam).centroid
            except BehindCamera:
                truth_centroid = None

        if truth is None or truth_centroid is None:
            frame = TrackedFrame(idx, FrameSource.DETECTOR, None, lost=True)
        elif detector_due or self.last_frame is None or self.last_frame.lost:
            frame = detect(truth, self.cam, self.rng, self.sigma_px, frame_index=idx)
        else:
            displacement = truth_centroid - self._last_truth_centroid
            frame = propagate(
                self.last_frame, displacement, self.rng_drift, self.sigma_drift_px,
                frame_index=idx, cam=self.cam,
            )

        estimate = None
        lateral_error = 0.0
        distance_error = 0.0
        if not frame.lost and frame.landmarks is not None:
            try:
                estimate = estimate_pose(frame.landmarks, self.user, self.cam)
            except Exception:
                estimate = None
            if estimate is not None and estimate.confidence > 0.0:
                bearing = self.bearing(frame.landmarks)
                lateral = estimate.distance * math.sin(bearing)
                lateral_error = lateral - self.setpoint.lateral_offset
                distance_error = estimate.distance - self.setpoint.distance
        obs = FrameObservation(
            lost=frame.lost or estimate is None or estimate.confidence <= 0.0,
            estimate=estimate,
            landmarks=frame.landmarks,
            lateral_error=lateral_error,
            distance_error=distance_error,
        )
        self.history.append(obs)
        if len(self.history) > self.history_len:
            self.history.pop(0)
        self.last_frame = frame
        self._last_truth_centroid = truth_centroid
        self.frame_index += 1
        return frame, obs

    def bearing(self, landmarks: ProjectedLandmarks) -> float:
        """User centroid angle off the optical axis, positive to image right."""
        return math.atan2(landmarks.centroid[0] - self.cam.cx, self.cam.f)

    def classify(self) -> UserEvent:
        return classify_user_event(self.history, self.setpoint, self.thresholds)
