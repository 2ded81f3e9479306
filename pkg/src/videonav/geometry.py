"""Shared geometric types and numerics for the navigation pipeline.

Conventions used throughout the package:
  - world frame: gravity aligned, +z up, fixed by the first camera pose
  - body frame: x forward, y left, z up
  - yaw: rotation of the body x axis about world z, wrapped into (-pi, pi]
All positions are meters, times are seconds, yaw is radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi

# Floors applied to finite-differenced limits so hover-heavy waypoint
# sequences still produce a flyable profile.
DEFAULT_VMIN = 0.2
DEFAULT_AMIN = 0.5


class YawDegenerateError(ValueError):
    """Forward axis is too close to vertical for a heading to exist."""


class InsufficientWaypointsError(ValueError):
    """Fewer waypoints than the operation needs."""


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.remainder(float(theta), TWO_PI)
    if w <= -math.pi:
        w += TWO_PI
    return w


def _as_vec3(value, name: str) -> np.ndarray:
    vec = np.asarray(value, dtype=float).reshape(-1)
    if vec.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{name} must be finite")
    return vec.copy()


def _project_to_rotation(matrix: np.ndarray) -> np.ndarray:
    """Snap a near-rotation onto SO(3); reject anything genuinely far off."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (3, 3) or not np.all(np.isfinite(m)):
        raise ValueError("rotation must be a finite 3x3 matrix")
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0.0:
        raise ValueError("rotation has negative determinant (reflection)")
    if np.max(np.abs(r - m)) > 1e-6:
        raise ValueError("matrix is not orthonormal within tolerance")
    return r


@dataclass(frozen=True)
class Pose:
    """A camera/body pose: position in meters, rotation body-to-world."""

    position: np.ndarray
    rotation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "rotation", _project_to_rotation(self.rotation))

    @property
    def forward(self) -> np.ndarray:
        return self.rotation[:, 0]


def yaw_from_pose(pose: Pose) -> float:
    """Heading of the body forward axis projected onto the horizontal plane."""
    fx, fy, _ = pose.forward
    if math.hypot(fx, fy) < 1e-6:
        raise YawDegenerateError("forward axis within 1e-6 of vertical")
    return math.atan2(fy, fx)


def yaw_from_motion(a: np.ndarray, b: np.ndarray) -> float:
    """Heading of the displacement a -> b; degenerate when purely vertical."""
    d = _as_vec3(b, "b") - _as_vec3(a, "a")
    if math.hypot(d[0], d[1]) < 1e-9:
        raise YawDegenerateError("displacement has no horizontal component")
    return math.atan2(d[1], d[0])


@dataclass(frozen=True)
class Waypoint:
    """A timed (x, y, z, yaw) target. yaw is wrapped into (-pi, pi]."""

    t: float
    x: float
    y: float
    z: float
    yaw: float

    def __post_init__(self):
        for name in ("t", "x", "y", "z", "yaw"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"waypoint field {name} must be finite")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])


def validate_waypoints(waypoints) -> None:
    """Check the sequence invariant: strictly increasing timestamps."""
    if len(waypoints) == 0:
        raise ValueError("empty waypoint sequence")
    for a, b in zip(waypoints, waypoints[1:]):
        if not b.t > a.t:
            raise ValueError(f"waypoint times must strictly increase ({a.t} -> {b.t})")


def format_waypoints(waypoints) -> str:
    """Serialize as line-delimited 't x y z yaw' records (full precision)."""
    lines = [f"{w.t!r} {w.x!r} {w.y!r} {w.z!r} {w.yaw!r}" for w in waypoints]
    return "\n".join(lines) + "\n" if lines else ""


def parse_waypoints(text: str):
    waypoints = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ValueError(f"waypoint record line {lineno} needs 5 fields: {line!r}")
        try:
            t, x, y, z, yaw = (float(p) for p in parts)
        except ValueError as exc:
            raise ValueError(f"waypoint record line {lineno} is not numeric: {line!r}") from exc
        waypoints.append(Waypoint(t, x, y, z, yaw))
    return waypoints


@dataclass(frozen=True)
class KinematicLimits:
    """Hard caps for trajectory generation, both strictly positive."""

    vmax: float
    amax: float

    def __post_init__(self):
        if not (self.vmax > 0.0 and self.amax > 0.0):
            raise ValueError("kinematic limits must be strictly positive")


def finite_diff_limits(waypoints, vmin: float = DEFAULT_VMIN, amin: float = DEFAULT_AMIN) -> KinematicLimits:
    """Estimate vmax/amax from a waypoint sequence by finite differencing.

    Segment velocities are direction-aware; accelerations difference the
    velocity vectors between segment midpoints. Floors are applied last, and
    sequences too short to measure acceleration fall back to the amin default.
    """
    if len(waypoints) < 2:
        raise InsufficientWaypointsError("need at least 2 waypoints")
    validate_waypoints(waypoints)
    times = np.array([w.t for w in waypoints])
    positions = np.stack([w.position for w in waypoints])
    dt = np.diff(times)
    velocities = np.diff(positions, axis=0) / dt[:, None]
    vmax = float(np.max(np.linalg.norm(velocities, axis=1)))
    if len(waypoints) >= 3:
        midpoints = 0.5 * (times[:-1] + times[1:])
        dv = np.diff(velocities, axis=0)
        dm = np.diff(midpoints)
        amax = float(np.max(np.linalg.norm(dv, axis=1) / dm))
    else:
        amax = amin
    return KinematicLimits(vmax=max(vmax, vmin), amax=max(amax, amin))


def relative_scale_error(s: float, s_gt: float) -> float:
    """|S - S_gt| / S_gt for a strictly positive ground-truth scale."""
    if not s_gt > 0.0:
        raise ValueError("ground-truth scale must be positive")
    return abs(float(s) - float(s_gt)) / float(s_gt)


@dataclass(frozen=True)
class TrajectorySample:
    t: float
    position: np.ndarray
    velocity: np.ndarray
    acceleration: np.ndarray
    yaw: float

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "velocity", _as_vec3(self.velocity, "velocity"))
        object.__setattr__(self, "acceleration", _as_vec3(self.acceleration, "acceleration"))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))


@dataclass
class Trajectory:
    """A time-parameterized executable path sampled at fixed steps."""

    samples: list = field(default_factory=list)

    def __post_init__(self):
        if not self.samples:
            raise ValueError("trajectory needs at least one sample")

    @property
    def duration(self) -> float:
        return self.samples[-1].t

    def validate(self, limits: KinematicLimits, tol: float = 1e-6) -> None:
        """Machine-check the emitted-sample invariants."""
        if self.samples[0].t != 0.0:
            raise ValueError("trajectory must start at t = 0")
        for a, b in zip(self.samples, self.samples[1:]):
            if not b.t > a.t:
                raise ValueError("trajectory times must strictly increase")
        for s in self.samples:
            if np.linalg.norm(s.velocity) > limits.vmax + tol:
                raise ValueError(f"speed {np.linalg.norm(s.velocity):.6f} exceeds vmax at t={s.t}")
            if np.linalg.norm(s.acceleration) > limits.amax + tol:
                raise ValueError(f"acceleration exceeds amax at t={s.t}")

    def sample_at(self, t: float) -> TrajectorySample:
        """Interpolate linearly in time; clamps before the start / past the end."""
        samples = self.samples
        if t <= samples[0].t:
            return samples[0]
        if t >= samples[-1].t:
            return samples[-1]
        times = [s.t for s in samples]
        hi = int(np.searchsorted(times, t, side="right"))
        lo = hi - 1
        a, b = samples[lo], samples[hi]
        u = (t - a.t) / (b.t - a.t)
        yaw = wrap_angle(a.yaw + u * wrap_angle(b.yaw - a.yaw))
        return TrajectorySample(
            t=t,
            position=(1 - u) * a.position + u * b.position,
            velocity=(1 - u) * a.velocity + u * b.velocity,
            acceleration=(1 - u) * a.acceleration + u * b.acceleration,
            yaw=yaw,
        )


def format_trajectory(trajectory: Trajectory) -> str:
    """Waypoint record format extended with velocity and acceleration columns."""
    lines = ["# t x y z yaw vx vy vz ax ay az"]
    for s in trajectory.samples:
        fields = [s.t, s.position[0], s.position[1], s.position[2], s.yaw,
                  s.velocity[0], s.velocity[1], s.velocity[2],
                  s.acceleration[0], s.acceleration[1], s.acceleration[2]]
        lines.append(" ".join(repr(float(v)) for v in fields))
    return "\n".join(lines) + "\n"


def parse_trajectory(text: str) -> Trajectory:
    samples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 11:
            raise ValueError(f"trajectory record line {lineno} needs 11 fields: {line!r}")
        vals = [float(p) for p in parts]
        samples.append(
            TrajectorySample(
                t=vals[0],
                position=np.array(vals[1:4]),
                yaw=vals[4],
                velocity=np.array(vals[5:8]),
                acceleration=np.array(vals[8:11]),
            )
        )
    return Trajectory(samples)


def _require_same_dims(width_a: int, height_a: int, width_b: int, height_b: int, what: str) -> None:
    if (width_a, height_a) != (width_b, height_b):
        raise ValueError(f"{what}: {width_a}x{height_a} vs {width_b}x{height_b}")


@dataclass(frozen=True)
class DepthMap:
    """Per-pixel metric depth; non-finite or <= 0 entries mean 'invalid'."""

    depth: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.depth, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError("depth map must be 2-D")
        object.__setattr__(self, "depth", d)

    @property
    def height(self) -> int:
        return self.depth.shape[0]

    @property
    def width(self) -> int:
        return self.depth.shape[1]

    @property
    def valid_mask(self) -> np.ndarray:
        return np.isfinite(self.depth) & (self.depth > 0.0)


@dataclass(frozen=True)
class PointMap:
    """Per-pixel 3-D points in the camera optical frame (normalized units).

    The third channel is the predicted depth Z_pred(u, v).
    """

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError("point map must be HxWx3")
        object.__setattr__(self, "points", p)

    @property
    def height(self) -> int:
        return self.points.shape[0]

    @property
    def width(self) -> int:
        return self.points.shape[1]

    @property
    def z(self) -> np.ndarray:
        return self.points[:, :, 2]


@dataclass(frozen=True)
class PixelMask:
    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits, dtype=bool)
        if b.ndim != 2:
            raise ValueError("pixel mask must be 2-D")
        object.__setattr__(self, "bits", b)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def count(self) -> int:
        return int(self.bits.sum())
