"""Point-mass execution environment and synthetic ground truth.

Everything desk-scale lives here: a proportional tracking law for closed-loop
execution, exact ray casting against box-and-plane scenes for reference depth
and normalized pointmaps, seeded noise injection, flat-shaded mock frames,
and voxelization of scene geometry into planner grids.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    DepthMap,
    PointMap,
    Pose,
    Trajectory,
    Waypoint,
    wrap_angle,
)
from .planner import OccupancyGrid, WaypointQueue, next_target, occupied_centers

# optical frame is x-right / y-down / z-forward; body is x-forward / z-up
BODY_FROM_OPTICAL = np.array(
    [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]
)


def _rot_z(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class DroneState:
    position: np.ndarray
    velocity: np.ndarray
    yaw: float
    t: float

    def __post_init__(self) -> None:
        position = np.asarray(self.position, dtype=np.float64).reshape(3)
        velocity = np.asarray(self.velocity, dtype=np.float64).reshape(3)
        if not (np.isfinite(position).all() and np.isfinite(velocity).all()
                and math.isfinite(self.yaw) and math.isfinite(self.t)):
            raise ValueError("drone state must be finite")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "velocity", velocity)
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))
        object.__setattr__(self, "t", float(self.t))


def step(
    state: DroneState, trajectory: Trajectory, dt: float, tracking_tau: float = 0.2
) -> DroneState:
    """Advance one control tick with exponential error decay.

    The tracking error relative to the commanded sample decays by
    exp(-dt/tau) per step, so a state exactly on the trajectory stays
    exactly on it, and the terminal sample acts as a hover attractor.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not tracking_tau > 0:
        raise ValueError("tracking_tau must be positive")
    target_now = trajectory.sample_at(state.t)
    target_next = trajectory.sample_at(state.t + dt)
    decay = math.exp(-dt / tracking_tau)
    new_position = target_next.position + decay * (state.position - target_now.position)
    new_yaw = wrap_angle(target_next.yaw + decay * wrap_angle(state.yaw - target_now.yaw))
    velocity = (new_position - state.position) / dt
    return DroneState(position=new_position, velocity=velocity, yaw=new_yaw, t=state.t + dt)


@dataclass(frozen=True)
class LogEntry:
    t: float
    position: np.ndarray
    tracking_error: float


@dataclass
class ExecutionLog:
    entries: list
    visited_indices: list
    done: bool
    final_state: DroneState

    @property
    def max_tracking_error(self) -> float:
        return max((e.tracking_error for e in self.entries), default=0.0)

    @property
    def tracking_rmse(self) -> float:
        if not self.entries:
            return 0.0
        return float(np.sqrt(np.mean([e.tracking_error**2 for e in self.entries])))

    def to_record(self) -> dict:
        return {
            "done": self.done,
            "visited_indices": list(self.visited_indices),
            "max_tracking_error": self.max_tracking_error,
            "tracking_rmse": self.tracking_rmse,
            "entries": [
                {
                    "t": e.t,
                    "position": [float(v) for v in e.position],
                    "tracking_error": e.tracking_error,
                }
                for e in self.entries
            ],
            "final_state": {
                "position": [float(v) for v in self.final_state.position],
                "velocity": [float(v) for v in self.final_state.velocity],
                "yaw": self.final_state.yaw,
                "t": self.final_state.t,
            },
        }


def execute(
    trajectory: Trajectory,
    queue: WaypointQueue,
    dt: float = 0.05,
    tracking_tau: float = 0.2,
) -> ExecutionLog:
    """Fly the trajectory from its start, switching waypoints by Euclidean
    threshold as the state moves; logs one entry per control tick."""
    start = trajectory.samples[0]
    state = DroneState(position=start.position, velocity=np.zeros(3), yaw=start.yaw, t=0.0)
    entries = []
    visited: list[int] = []
    done = False

    def poll_queue() -> None:
        nonlocal done
        before = queue.current_index
        result = next_target(queue, state.position)
        visited.extend(range(before, queue.current_index))
        if result.waypoint is None:
            done = True

    poll_queue()
    steps = max(1, int(math.ceil(trajectory.duration / dt - 1e-9)))
    for _ in range(steps):
        state = step(state, trajectory, dt, tracking_tau)
        target = trajectory.sample_at(state.t)
        error = float(np.linalg.norm(state.position - target.position))
        entries.append(LogEntry(t=state.t, position=state.position, tracking_error=error))
        poll_queue()
    return ExecutionLog(entries=entries, visited_indices=visited, done=done, final_state=state)


@dataclass(frozen=True)
class Violation:
    t: float
    position: np.ndarray
    distance: float


@dataclass(frozen=True)
class CollisionReport:
    violations: list
    clearance: float

    @property
    def is_collision_free(self) -> bool:
        return not self.violations


def check_collisions(
    trajectory: Trajectory, grid: OccupancyGrid, clearance: float
) -> CollisionReport:
    """Exhaustive scan: every sample closer than `clearance` to an occupied
    cell center is a violation; an empty report certifies the trajectory."""
    centers = occupied_centers(grid)
    violations = []
    if centers.shape[0]:
        for s in trajectory.samples:
            d = float(np.linalg.norm(centers - s.position, axis=1).min())
            if d < clearance:
                violations.append(Violation(t=s.t, position=s.position, distance=d))
    return CollisionReport(violations=violations, clearance=clearance)


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError("principal point must be finite")
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")


@dataclass(frozen=True)
class NoiseSpec:
    depth_noise: float = 0.0
    outlier_fraction: float = 0.0
    outlier_range: tuple = (5.0, 50.0)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.depth_noise < 0:
            raise ValueError("depth_noise must be non-negative")
        if not 0.0 <= self.outlier_fraction <= 1.0:
            raise ValueError("outlier_fraction must lie in [0, 1]")
        lo, hi = self.outlier_range
        if not (0 < lo < hi):
            raise ValueError("outlier_range must be an increasing positive pair")
        object.__setattr__(self, "outlier_range", (float(lo), float(hi)))


def _point_in_box(point: np.ndarray, bmin: np.ndarray, bmax: np.ndarray) -> bool:
    # strictly interior: a path stopping exactly on a face is legal
    return bool(np.all(point > bmin + 1e-9) and np.all(point < bmax - 1e-9))


@dataclass
class SyntheticScene:
    """Ground-truth world: boxes, optional floor, the true flight path, the
    camera, the true metric scale, and an optional noise recipe."""

    boxes: list
    ground_plane: float | None
    gt_trajectory: list
    intrinsics: CameraIntrinsics
    gt_scale: float
    noise: NoiseSpec = field(default_factory=NoiseSpec)

    def __post_init__(self) -> None:
        normalized = []
        for bmin, bmax in self.boxes:
            bmin = np.asarray(bmin, dtype=np.float64).reshape(3)
            bmax = np.asarray(bmax, dtype=np.float64).reshape(3)
            if not np.all(bmin < bmax):
                raise ValueError("box min corner must be strictly below max corner")
            normalized.append((bmin, bmax))
        self.boxes = normalized
        if not self.gt_scale > 0:
            raise ValueError("gt_scale must be positive")
        if not self.gt_trajectory:
            raise ValueError("gt_trajectory must be non-empty")
        self._check_trajectory_clear()

    def _check_trajectory_clear(self) -> None:
        points = [self.gt_trajectory[0].position]
        for a, b in zip(self.gt_trajectory, self.gt_trajectory[1:]):
            for u in np.linspace(0.0, 1.0, 50)[1:]:
                points.append((1 - u) * a.position + u * b.position)
        for p in points:
            if self.ground_plane is not None and p[2] <= self.ground_plane + 1e-9:
                raise ValueError(f"gt trajectory touches the ground plane at {p.tolist()}")
            for bmin, bmax in self.boxes:
                if _point_in_box(p, bmin, bmax):
                    raise ValueError(f"gt trajectory passes through a box at {p.tolist()}")


def save_scene(path: str | Path, scene: SyntheticScene) -> None:
    record = {
        "boxes": [
            {"min": [float(v) for v in bmin], "max": [float(v) for v in bmax]}
            for bmin, bmax in scene.boxes
        ],
        "ground_plane": scene.ground_plane,
        "gt_trajectory": [
            {"t": w.t, "x": w.x, "y": w.y, "z": w.z, "yaw": w.yaw}
            for w in scene.gt_trajectory
        ],
        "intrinsics": {
            "fx": scene.intrinsics.fx, "fy": scene.intrinsics.fy,
            "cx": scene.intrinsics.cx, "cy": scene.intrinsics.cy,
            "width": scene.intrinsics.width, "height": scene.intrinsics.height,
        },
        "gt_scale": scene.gt_scale,
        "noise": {
            "depth_noise": scene.noise.depth_noise,
            "outlier_fraction": scene.noise.outlier_fraction,
            "outlier_range": list(scene.noise.outlier_range),
            "seed": scene.noise.seed,
        },
    }
    Path(path).write_text(json.dumps(record, indent=2))


def load_scene(path: str | Path) -> SyntheticScene:
    record = json.loads(Path(path).read_text())
    noise = record.get("noise", {})
    return SyntheticScene(
        boxes=[(np.array(b["min"]), np.array(b["max"])) for b in record["boxes"]],
        ground_plane=record["ground_plane"],
        gt_trajectory=[
            Waypoint(t=w["t"], x=w["x"], y=w["y"], z=w["z"], yaw=w["yaw"])
            for w in record["gt_trajectory"]
        ],
        intrinsics=CameraIntrinsics(**record["intrinsics"]),
        gt_scale=record["gt_scale"],
        noise=NoiseSpec(
            depth_noise=noise.get("depth_noise", 0.0),
            outlier_fraction=noise.get("outlier_fraction", 0.0),
            outlier_range=tuple(noise.get("outlier_range", (5.0, 50.0))),
            seed=noise.get("seed", 0),
        ),
    )


def poses_for_frames(scene: SyntheticScene, n_frames: int) -> list[Pose]:
    """Sample the ground-truth flight line at n evenly spaced times."""
    if n_frames < 1:
        raise ValueError("need at least one frame")
    waypoints = scene.gt_trajectory
    t0, t1 = waypoints[0].t, waypoints[-1].t
    if n_frames == 1 or t1 <= t0:
        times = [t0] * n_frames
    else:
        times = list(np.linspace(t0, t1, n_frames))
    wp_times = [w.t for w in waypoints]
    poses = []
    for t in times:
        hi = min(max(int(np.searchsorted(wp_times, t, side="right")), 1), len(waypoints) - 1)
        lo = hi - 1
        a, b = waypoints[lo], waypoints[hi]
        span = b.t - a.t
        u = 0.0 if span <= 0 else min(max((t - a.t) / span, 0.0), 1.0)
        position = (1 - u) * a.position + u * b.position
        yaw = wrap_angle(a.yaw + u * wrap_angle(b.yaw - a.yaw))
        poses.append(Pose(position=position, rotation=_rot_z(yaw)))
    return poses


def _ray_directions(intrinsics: CameraIntrinsics) -> np.ndarray:
    """Unnormalized optical-frame directions with unit z, shape (H, W, 3).

    Keeping z = 1 makes the ray parameter equal the optical depth, so hit
    distances come out directly in depth-map units.
    """
    us = (np.arange(intrinsics.width) - intrinsics.cx) / intrinsics.fx
    vs = (np.arange(intrinsics.height) - intrinsics.cy) / intrinsics.fy
    dirs = np.empty((intrinsics.height, intrinsics.width, 3))
    dirs[:, :, 0] = us[None, :]
    dirs[:, :, 1] = vs[:, None]
    dirs[:, :, 2] = 1.0
    return dirs


def _cast_scene(scene: SyntheticScene, pose: Pose) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Ray-cast one pose; returns (depth, optical dirs, geometry ids).

    Ids: 0 = miss, 1 = ground plane, 2 + k = box k. Depth is the optical
    z-depth; 0 marks a miss.
    """
    dirs_opt = _ray_directions(scene.intrinsics)
    rotation = pose.rotation @ BODY_FROM_OPTICAL
    dirs_world = np.einsum("ij,hwj->hwi", rotation, dirs_opt)
    origin = pose.position
    t_best = np.full(dirs_opt.shape[:2], np.inf)
    ids = np.zeros(dirs_opt.shape[:2], dtype=np.int32)

    dz = dirs_world[:, :, 2]
    if scene.ground_plane is not None:
        with np.errstate(divide="ignore", invalid="ignore"):
            t_ground = (scene.ground_plane - origin[2]) / dz
        t_ground = np.where(np.abs(dz) > 1e-12, t_ground, np.inf)
        hit = (t_ground > 1e-9) & (t_ground < t_best)
        t_best = np.where(hit, t_ground, t_best)
        ids = np.where(hit, 1, ids)

    safe = np.where(np.abs(dirs_world) < 1e-12, 1e-12, dirs_world)
    for k, (bmin, bmax) in enumerate(scene.boxes):
        t1 = (bmin[None, None, :] - origin[None, None, :]) / safe
        t2 = (bmax[None, None, :] - origin[None, None, :]) / safe
        t_near = np.minimum(t1, t2).max(axis=2)
        t_far = np.maximum(t1, t2).min(axis=2)
        hit = (t_near <= t_far) & (t_near > 1e-9) & (t_near < t_best)
        t_best = np.where(hit, t_near, t_best)
        ids = np.where(hit, 2 + k, ids)

    depth = np.where(np.isfinite(t_best), t_best, 0.0)
    return depth, dirs_opt, ids


def render_ground_truth(
    scene: SyntheticScene, poses: list[Pose]
) -> list[tuple[DepthMap, PointMap]]:
    """Exact reference depth plus decoder-style pointmaps (points / gt_scale)."""
    out = []
    for pose in poses:
        depth, dirs_opt, _ = _cast_scene(scene, pose)
        points = dirs_opt * depth[:, :, None] / scene.gt_scale
        out.append((DepthMap(depth), PointMap(points)))
    return out


def apply_depth_noise(
    depth: np.ndarray, spec: NoiseSpec, frame_index: int, gt_scale: float
) -> np.ndarray:
    """Seeded corruption: multiplicative Gaussian on inliers, then a fraction
    of pixels replaced with ratio-space outliers D = U[range] * Z_pred."""
    values = np.asarray(depth, dtype=np.float64).copy()
    valid = np.isfinite(values) & (values > 0)
    if not valid.any():
        return values
    rng = np.random.default_rng(spec.seed + frame_index)
    if spec.depth_noise > 0:
        noise = rng.normal(0.0, spec.depth_noise, values.shape)
        values[valid] *= 1.0 + noise[valid]
    if spec.outlier_fraction > 0:
        mask = (rng.random(values.shape) < spec.outlier_fraction) & valid
        ratios = rng.uniform(*spec.outlier_range, values.shape)
        z_pred = np.asarray(depth, dtype=np.float64) / gt_scale
        values[mask] = ratios[mask] * z_pred[mask]
    return values


_STAMP_BITS = 1 << 24

_PALETTE = [
    (135, 206, 235),  # miss / sky
    (110, 110, 110),  # ground
    (200, 60, 60),
    (60, 200, 60),
    (60, 60, 200),
    (210, 160, 40),
    (160, 60, 200),
    (60, 200, 200),
]


def _encode_stamp(frame: np.ndarray, seed: int, index: int, count: int) -> None:
    for col, value in enumerate((seed, index, count)):
        value %= _STAMP_BITS
        frame[0, col] = ((value >> 16) & 255, (value >> 8) & 255, value & 255)


def decode_stamp(frame: np.ndarray) -> tuple[int, int, int]:
    """Recover (seed, frame index, frame count) from the corner pixels."""
    out = []
    for col in range(3):
        r, g, b = (int(v) for v in frame[0, col])
        out.append((r << 16) | (g << 8) | b)
    return tuple(out)


def render_frames(scene: SyntheticScene, poses: list[Pose], seed: int) -> list[np.ndarray]:
    """Flat-shaded id images with a telemetry stamp in the top-left corner.

    The stamp carries (seed, frame index, frame count) so the mock decoders
    can identify which slice of the ground-truth flight a frame shows
    without any side channel. Real frames do not need it; real adapters
    never read pixels this way.
    """
    frames = []
    for i, pose in enumerate(poses):
        _, _, ids = _cast_scene(scene, pose)
        frame = np.zeros((*ids.shape, 3), dtype=np.uint8)
        for gid in np.unique(ids):
            frame[ids == gid] = _PALETTE[int(gid) % len(_PALETTE)]
        _encode_stamp(frame, seed, i, len(poses))
        frames.append(frame)
    return frames


def render_observation(scene: SyntheticScene, seed: int = 0) -> np.ndarray:
    """The I_0 stand-in: the first ground-truth pose rendered as one frame."""
    poses = poses_for_frames(scene, 1)
    return render_frames(scene, poses, seed)[0]


def voxelize_scene(
    scene: SyntheticScene, resolution: float, padding: float = 1.0
) -> OccupancyGrid:
    """Rasterize scene boxes into an occupancy grid covering the flight
    volume plus padding. The ground plane is deliberately not voxelized:
    it is a reference surface, not an obstacle the planner may trade off."""
    if not resolution > 0:
        raise ValueError("resolution must be positive")
    points = [w.position for w in scene.gt_trajectory]
    for bmin, bmax in scene.boxes:
        points.extend([bmin, bmax])
    points = np.stack(points)
    low = np.floor((points.min(axis=0) - padding) / resolution) * resolution
    high = points.max(axis=0) + padding
    dims = tuple(int(math.ceil(v)) for v in (high - low) / resolution)
    occupancy = np.zeros(dims, dtype=bool)
    for bmin, bmax in scene.boxes:
        lo_cell = np.ceil((bmin - low) / resolution - 0.5 - 1e-12).astype(int)
        hi_cell = np.floor((bmax - low) / resolution - 0.5 + 1e-12).astype(int)
        lo_cell = np.maximum(lo_cell, 0)
        hi_cell = np.minimum(hi_cell, np.array(dims) - 1)
        if np.all(lo_cell <= hi_cell):
            occupancy[
                lo_cell[0] : hi_cell[0] + 1,
                lo_cell[1] : hi_cell[1] + 1,
                lo_cell[2] : hi_cell[2] + 1,
            ] = True
    return OccupancyGrid(origin=low, resolution=resolution, occupancy=occupancy)


__all__ = [
    "BODY_FROM_OPTICAL",
    "CameraIntrinsics",
    "CollisionReport",
    "DroneState",
    "ExecutionLog",
    "LogEntry",
    "NoiseSpec",
    "SyntheticScene",
    "Violation",
    "apply_depth_noise",
    "check_collisions",
    "decode_stamp",
    "execute",
    "load_scene",
    "poses_for_frames",
    "render_frames",
    "render_ground_truth",
    "render_observation",
    "save_scene",
    "step",
    "voxelize_scene",
]
