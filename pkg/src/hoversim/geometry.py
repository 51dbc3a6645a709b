"""Pinhole projection of body landmarks and closed-form user pose recovery.

Coordinate conventions used throughout:

  Camera frame (right-handed):
    X: right, Y: up, Z: forward along the optical axis. Units: meters.
  Pixel frame:
    u = f * X/Z + cx,  v = f * Y/Z + cy.  v grows UPWARD (math convention,
    not image-row order), so "above the eye line" means larger v.

The user is described by three per-person constants: the eye span, the
shoulder span, and the horizontal offset between the vertical plane through
the eyes and the one through the shoulders. From a single frame we measure:

  p, q     signed inboard pixel components (along the projected shoulder
           line, toward the other shoulder) of the shoulder-to-eye vectors
           for each body side;
  eye_span_px   pixel distance between the projected eyes.

and recover the facing angle tau in (0, pi) (pi/2 = squarely facing the
camera) plus the viewing distance in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCamera, DegenerateProjection

Vec2 = np.ndarray  # shape (2,), float64
Vec3 = np.ndarray  # shape (3,), float64


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics. Focal length and principal point in pixels."""

    f: float = 800.0
    width: float = 1280.0
    height: float = 960.0
    cx: float = 640.0
    cy: float = 480.0

    def __post_init__(self):
        if self.f <= 0:
            raise ValueError("focal length must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ValueError("principal point outside sensor bounds")

    def in_bounds(self, px: Vec2) -> bool:
        return bool(0.0 <= px[0] <= self.width and 0.0 <= px[1] <= self.height)


@dataclass(frozen=True)
class UserModelParams:
    """Per-user calibration constants, meters.

    eye_span: distance between the eyes.
    shoulder_span: distance between the shoulders.
    plane_offset: perpendicular distance between the vertical plane through
        the eyes and the vertical plane through the shoulders (the eyes sit
        forward of the shoulders by this much).
    """

    eye_span: float = 0.063
    shoulder_span: float = 0.40
    plane_offset: float = 0.08

    def __post_init__(self):
        if not (self.shoulder_span > self.eye_span > 0):
            raise ValueError("need shoulder_span > eye_span > 0")
        if self.plane_offset <= 0:
            raise ValueError("plane_offset must be positive")

    @property
    def half_span_gap(self) -> float:
        """Half the difference of the two spans; the lever arm of the facing angle."""
        return 0.5 * (self.shoulder_span - self.eye_span)


@dataclass(frozen=True)
class BodyLandmarks3D:
    """Body landmarks in the camera frame, meters. Wrists are optional.

    E0/S0 belong to one body side, E1/S1 to the other; each eye sits inboard
    of its shoulder because the eye span is smaller.
    """

    e0: Vec3
    e1: Vec3
    s0: Vec3
    s1: Vec3
    w_left: Vec3 | None = None
    w_right: Vec3 | None = None

    def points(self) -> list[tuple[str, Vec3]]:
        pts = [("e0", self.e0), ("e1", self.e1), ("s0", self.s0), ("s1", self.s1)]
        if self.w_left is not None:
            pts.append(("w_left", self.w_left))
        if self.w_right is not None:
            pts.append(("w_right", self.w_right))
        return pts


@dataclass(frozen=True)
class ProjectedLandmarks:
    """Pixel-plane landmarks plus the derived pose measurements.

    p and q are signed: each is the component of the shoulder-to-eye pixel
    vector along the projected shoulder line, oriented toward the opposite
    shoulder. The sign carries the facing direction, which keeps the pose
    inversion single-valued over the whole (0, pi) range instead of folding
    at the angle where the plane-offset term changes sign.
    """

    e0: Vec2
    e1: Vec2
    s0: Vec2
    s1: Vec2
    w_left: Vec2 | None
    w_right: Vec2 | None
    p: float
    q: float
    eye_span_px: float
    in_bounds: dict[str, bool] = field(default_factory=dict)

    @property
    def all_core_in_bounds(self) -> bool:
        return all(self.in_bounds.get(k, False) for k in ("e0", "e1", "s0", "s1"))

    @property
    def centroid(self) -> Vec2:
        return (self.e0 + self.e1 + self.s0 + self.s1) / 4.0

    def shifted(self, delta: Vec2) -> "ProjectedLandmarks":
        """Rigid pixel shift of every landmark (p, q, eye span are unchanged)."""
        return ProjectedLandmarks(
            e0=self.e0 + delta,
            e1=self.e1 + delta,
            s0=self.s0 + delta,
            s1=self.s1 + delta,
            w_left=None if self.w_left is None else self.w_left + delta,
            w_right=None if self.w_right is None else self.w_right + delta,
            p=self.p,
            q=self.q,
            eye_span_px=self.eye_span_px,
            in_bounds=dict(self.in_bounds),
        )


@dataclass(frozen=True)
class PoseEstimate:
    """Estimated user facing angle (rad, (0, pi)) and distance (m)."""

    tau: float
    distance: float
    confidence: float


def measurements_from_pixels(
    e0: Vec2, e1: Vec2, s0: Vec2, s1: Vec2
) -> tuple[float, float, float]:
    """Compute (p, q, eye_span_px) from the four core pixel landmarks."""
    shoulder = s1 - s0
    norm = float(np.hypot(shoulder[0], shoulder[1]))
    if norm == 0.0:
        # Shoulders collapse to one pixel; no usable direction.
        return 0.0, 0.0, float(np.linalg.norm(e0 - e1))
    g = shoulder / norm
    p = float(np.dot(e0 - s0, g))     # side 0: inboard is +g
    q = float(np.dot(e1 - s1, -g))    # side 1: inboard is -g
    return p, q, float(np.linalg.norm(e0 - e1))


def project(landmarks: BodyLandmarks3D, cam: CameraIntrinsics) -> ProjectedLandmarks:
    """Pinhole-project landmarks: px = f * (X/Z, Y/Z) + principal point.

    Core landmarks (eyes, shoulders) must be in front of the camera; points
    that land outside the sensor are flagged but still returned.
    """
    pix: dict[str, Vec2] = {}
    bounds: dict[str, bool] = {}
    for name, pt in landmarks.points():
        if pt[2] <= 0.0:
            raise BehindCamera(f"landmark {name} at Z={pt[2]:.4f} m")
        px = np.array([cam.f * pt[0] / pt[2] + cam.cx, cam.f * pt[1] / pt[2] + cam.cy])
        pix[name] = px
        bounds[name] = cam.in_bounds(px)
    p, q, span = measurements_from_pixels(pix["e0"], pix["e1"], pix["s0"], pix["s1"])
    return ProjectedLandmarks(
        e0=pix["e0"],
        e1=pix["e1"],
        s0=pix["s0"],
        s1=pix["s1"],
        w_left=pix.get("w_left"),
        w_right=pix.get("w_right"),
        p=p,
        q=q,
        eye_span_px=span,
        in_bounds=bounds,
    )


def estimate_orientation(proj: ProjectedLandmarks, user: UserModelParams) -> float:
    """Recover the facing angle tau in (0, pi) from the signed p, q pair.

    With a = half the span gap and R = the eye/shoulder plane offset, the
    measurements satisfy p ~ a*sin(tau) + R*cos(tau) and
    q ~ a*sin(tau) - R*cos(tau) up to a common positive scale, so

        tau = atan2(R * (p + q), a * (p - q))

    inverts them exactly; the ratio p/q is reproduced by substituting tau
    back in. The numerator is taken in magnitude, which pins the branch to
    [0, pi] (p + q is positive for any user actually in front of the
    camera; noise can only graze zero near the profile limits).
    """
    if proj.p == 0.0 and proj.q == 0.0:
        raise DegenerateProjection("p = q = 0: no shoulder-to-eye structure")
    a = user.half_span_gap
    return math.atan2(
        abs(user.plane_offset * (proj.p + proj.q)), a * (proj.p - proj.q)
    )


def estimate_distance(
    proj: ProjectedLandmarks,
    tau: float,
    user: UserModelParams,
    cam: CameraIntrinsics,
) -> float:
    """Distance from the foreshortened eye span: D = f * Le * sin(tau) / Le_px."""
    if proj.eye_span_px <= 0.0:
        raise DegenerateProjection("eye landmarks collapse to one pixel")
    if not (0.0 < tau < math.pi):
        raise DegenerateProjection(f"tau={tau} outside (0, pi)")
    return cam.f * user.eye_span * math.sin(tau) / proj.eye_span_px


def estimate_pose(
    proj: ProjectedLandmarks, user: UserModelParams, cam: CameraIntrinsics
) -> PoseEstimate:
    """Full pose recovery with the simple visibility-based confidence rule."""
    tau = estimate_orientation(proj, user)
    distance = estimate_distance(proj, tau, user, cam)
    confidence = 1.0 if proj.all_core_in_bounds else 0.0
    if distance <= 0.0:
        confidence = 0.0
    return PoseEstimate(tau=tau, distance=distance, confidence=confidence)


def body_landmarks(
    user: UserModelParams,
    tau: float,
    distance: float,
    neck_height: float = 0.25,
    bearing: float = 0.0,
    height_offset: float = 0.0,
    left_wrist_raised: bool = False,
    right_wrist_raised: bool = False,
) -> BodyLandmarks3D:
    """Synthesize camera-frame landmarks for a user at (tau, distance).

    The body is realized as its perspective-equivalent frontal pose: the
    shoulder and eye segments are laid out fronto-parallel at depth
    distance/sin(tau), with the eye line shifted sideways by the
    plane-offset lever R*cos(tau)/sin(tau) and raised by the neck height.
    Any pose whose image is identical under the pinhole model may be used
    interchangeably, and this one keeps the span invariants |E0-E1| and
    |S0-S1| exact while making the projected measurements match the
    closed-form model to double precision at any distance.

    height_offset (m) shifts the whole body vertically (shoulder line
    relative to the optical axis); it moves the image but leaves p, q and
    the eye span untouched. bearing (rad) swings the body off the optical
    axis by rotating about the camera Y axis, which introduces the genuine
    mild perspective distortion an off-center user produces.

    The user's right side is side 0 and appears on the image left when the
    user faces the camera.
    """
    if not (0.0 < tau < math.pi):
        raise ValueError("tau must lie in (0, pi)")
    if distance <= 0.0:
        raise ValueError("distance must be positive")
    s, c = math.sin(tau), math.cos(tau)
    depth = distance / s
    lever = user.plane_offset * c / s
    half_eye = 0.5 * user.eye_span
    half_shoulder = 0.5 * user.shoulder_span
    neck = neck_height / s
    y0 = height_offset

    s0 = np.array([-half_shoulder, y0, depth])
    s1 = np.array([half_shoulder, y0, depth])
    e0 = np.array([-half_eye + lever, y0 + neck, depth])
    e1 = np.array([half_eye + lever, y0 + neck, depth])

    # Wrists hang at hip level unless raised above the eye line. Offsets are
    # nominal human proportions; only the above/below-eye relation matters.
    def wrist(side: float, raised: bool) -> Vec3:
        y = (neck_height + 0.15) / s if raised else -0.55 / s
        return np.array([side * (half_shoulder + 0.05) + lever * 0.5, y0 + y, depth])

    w_right = wrist(-1.0, right_wrist_raised)  # user's right = image left
    w_left = wrist(1.0, left_wrist_raised)

    pts = np.stack([e0, e1, s0, s1, w_left, w_right])
    if bearing != 0.0:
        cb, sb = math.cos(bearing), math.sin(bearing)
        rot_y = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
        pts = pts @ rot_y.T
    return BodyLandmarks3D(
        e0=pts[0], e1=pts[1], s0=pts[2], s1=pts[3], w_left=pts[4], w_right=pts[5]
    )
