"""Grid planning and time parameterization.

Waypoints decoded from a candidate video are metric but unverified; this
module turns them into something a drone can fly: obstacle-inflated grid
search per waypoint pair, shortcut smoothing, a trapezoidal speed profile
capped by waypoint-derived limits, and an independent rate-limited yaw track.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    DEFAULT_AMIN,
    DEFAULT_VMIN,
    KinematicLimits,
    Trajectory,
    TrajectorySample,
    Waypoint,
    finite_diff_limits,
    wrap_angle,
)


class GoalOccludedError(ValueError):
    """Goal cell is occupied or inside the inflated margin."""


class UnreachableError(RuntimeError):
    """Free start and goal exist but no collision-free path connects them."""


class VoxelFormatError(ValueError):
    pass


@dataclass
class OccupancyGrid:
    """Axis-aligned voxel grid; origin is the minimum corner of cell (0,0,0)."""

    origin: np.ndarray
    resolution: float
    occupancy: np.ndarray

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.resolution = float(self.resolution)
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        self.occupancy = np.asarray(self.occupancy, dtype=bool)
        if self.occupancy.ndim != 3:
            raise ValueError("occupancy must be a 3-D boolean array")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.occupancy.shape

    def cell_center(self, cell) -> np.ndarray:
        return self.origin + (np.asarray(cell, dtype=np.float64) + 0.5) * self.resolution

    def world_to_cell(self, point) -> tuple[int, int, int]:
        rel = (np.asarray(point, dtype=np.float64) - self.origin) / self.resolution
        return tuple(int(math.floor(c)) for c in rel)

    def in_bounds(self, cell) -> bool:
        return all(0 <= c < n for c, n in zip(cell, self.dims))


def save_grid(path: str | Path, grid: OccupancyGrid) -> None:
    x, y, z = (repr(float(v)) for v in grid.origin)
    nx, ny, nz = grid.dims
    runs = []
    for value, group in itertools.groupby(grid.occupancy.reshape(-1)):
        runs.append(f"{sum(1 for _ in group)} {int(value)}")
    Path(path).write_text(
        f"origin {x} {y} {z}\n"
        f"resolution {grid.resolution!r}\n"
        f"dims {nx} {ny} {nz}\n"
        f"rle {' '.join(runs)}\n"
    )


def load_grid(path: str | Path) -> OccupancyGrid:
    """Parse the voxel text format: origin, resolution, dims, then one
    run-length-encoded occupancy line in C order."""
    lines = [
        line.strip()
        for line in Path(path).read_text().splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if len(lines) != 4:
        raise VoxelFormatError(f"expected 4 content lines, found {len(lines)}")
    try:
        keys = [line.split()[0] for line in lines]
        if keys != ["origin", "resolution", "dims", "rle"]:
            raise VoxelFormatError(f"header lines out of order: {keys}")
        origin = np.array([float(v) for v in lines[0].split()[1:4]])
        resolution = float(lines[1].split()[1])
        nx, ny, nz = (int(v) for v in lines[2].split()[1:4])
        tokens = lines[3].split()[1:]
    except (IndexError, ValueError) as err:
        if isinstance(err, VoxelFormatError):
            raise
        raise VoxelFormatError(f"malformed header: {err}") from err
    if len(tokens) % 2 != 0:
        raise VoxelFormatError("rle payload must be count/value pairs")
    flat = np.zeros(nx * ny * nz, dtype=bool)
    cursor = 0
    for count_text, value_text in zip(tokens[::2], tokens[1::2]):
        try:
            count, value = int(count_text), int(value_text)
        except ValueError as err:
            raise VoxelFormatError(f"bad rle token pair ({count_text}, {value_text})") from err
        if value not in (0, 1):
            raise VoxelFormatError(f"occupancy value must be 0 or 1, got {value}")
        if count < 1 or cursor + count > flat.size:
            raise VoxelFormatError("rle runs do not fit the declared dims")
        flat[cursor : cursor + count] = bool(value)
        cursor += count
    if cursor != flat.size:
        raise VoxelFormatError(f"rle covers {cursor} of {flat.size} cells")
    return OccupancyGrid(origin=origin, resolution=resolution, occupancy=flat.reshape(nx, ny, nz))


def inflation_radius(resolution: float, clearance: float) -> float:
    """Inflate by the clearance plus half a cell diagonal so that any point
    inside a free cell keeps the full clearance from occupied cell centers."""
    return clearance + 0.5 * resolution * math.sqrt(3.0)


def inflate(grid: OccupancyGrid, radius: float) -> OccupancyGrid:
    """Block every cell whose center lies within `radius` of an occupied center."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    occ = grid.occupancy
    out = np.zeros_like(occ)
    reach = int(math.floor(radius / grid.resolution + 1e-9))
    for di in range(-reach, reach + 1):
        for dj in range(-reach, reach + 1):
            for dk in range(-reach, reach + 1):
                if math.sqrt(di * di + dj * dj + dk * dk) * grid.resolution > radius + 1e-9:
                    continue
                src = [slice(None)] * 3
                dst = [slice(None)] * 3
                for axis, d in enumerate((di, dj, dk)):
                    n = occ.shape[axis]
                    dst[axis] = slice(max(d, 0), n + min(d, 0))
                    src[axis] = slice(max(-d, 0), n + min(-d, 0))
                out[tuple(dst)] |= occ[tuple(src)]
    return OccupancyGrid(origin=grid.origin, resolution=grid.resolution, occupancy=out)


def occupied_centers(grid: OccupancyGrid) -> np.ndarray:
    """World coordinates of all occupied cell centers, shape (M, 3)."""
    cells = np.argwhere(grid.occupancy)
    if cells.size == 0:
        return np.zeros((0, 3))
    return grid.origin + (cells + 0.5) * grid.resolution


_NEIGHBOR_OFFSETS = [
    (di, dj, dk)
    for di in (-1, 0, 1)
    for dj in (-1, 0, 1)
    for dk in (-1, 0, 1)
    if (di, dj, dk) != (0, 0, 0)
]


def _astar(blocked: np.ndarray, resolution: float, start, goal) -> list[tuple[int, int, int]]:
    """Exact shortest 26-connected path on the inflated grid, or raises."""
    goal_arr = np.asarray(goal, dtype=np.float64)

    def heuristic(cell):
        return resolution * float(np.linalg.norm(np.asarray(cell, dtype=np.float64) - goal_arr))

    counter = itertools.count()
    best_g = {start: 0.0}
    came_from = {}
    frontier = [(heuristic(start), 0.0, next(counter), start)]
    closed = set()
    dims = blocked.shape
    while frontier:
        _, g, _, cell = heapq.heappop(frontier)
        if cell in closed:
            continue
        if cell == goal:
            path = [cell]
            while cell in came_from:
                cell = came_from[cell]
                path.append(cell)
            return path[::-1]
        closed.add(cell)
        for di, dj, dk in _NEIGHBOR_OFFSETS:
            nb = (cell[0] + di, cell[1] + dj, cell[2] + dk)
            if not (0 <= nb[0] < dims[0] and 0 <= nb[1] < dims[1] and 0 <= nb[2] < dims[2]):
                continue
            if blocked[nb] or nb in closed:
                continue
            ng = g + resolution * math.sqrt(di * di + dj * dj + dk * dk)
            if ng < best_g.get(nb, math.inf) - 1e-15:
                best_g[nb] = ng
                came_from[nb] = cell
                heapq.heappush(frontier, (ng + heuristic(nb), ng, next(counter), nb))
    raise UnreachableError(f"no path from cell {start} to cell {goal}")


def _min_distance(points: np.ndarray, centers: np.ndarray) -> float:
    if centers.shape[0] == 0:
        return math.inf
    diffs = points[:, None, :] - centers[None, :, :]
    return float(np.sqrt((diffs * diffs).sum(axis=2)).min())


def _line_is_clear(a, b, centers, clearance, resolution) -> bool:
    # samples spaced <= resolution/2; the resolution/4 margin covers the
    # worst case point between samples (distance to centers is 1-Lipschitz)
    length = float(np.linalg.norm(b - a))
    n = max(2, int(math.ceil(length / (resolution / 2.0))) + 1)
    u = np.linspace(0.0, 1.0, n)[:, None]
    points = (1 - u) * a[None, :] + u * b[None, :]
    return _min_distance(points, centers) >= clearance + resolution / 4.0


def plan_segment(grid: OccupancyGrid, start, goal, clearance: float) -> np.ndarray:
    """Collision-free polyline from start to goal, shape (N, 3).

    Obstacles are inflated by clearance plus half a cell diagonal, the
    shortest 26-connected cell path is found, then greedily shortcut by
    line-of-sight pruning. Smoothing only ever shortens the path.
    """
    start = np.asarray(start, dtype=np.float64).reshape(3)
    goal = np.asarray(goal, dtype=np.float64).reshape(3)
    start_cell = grid.world_to_cell(start)
    goal_cell = grid.world_to_cell(goal)
    if not grid.in_bounds(start_cell):
        raise ValueError(f"start {start.tolist()} outside the grid")
    if not grid.in_bounds(goal_cell):
        raise ValueError(f"goal {goal.tolist()} outside the grid")
    blocked = inflate(grid, inflation_radius(grid.resolution, clearance)).occupancy
    if blocked[start_cell]:
        raise ValueError(f"start cell {start_cell} inside an inflated obstacle")
    if blocked[goal_cell]:
        raise GoalOccludedError(f"goal cell {goal_cell} inside an inflated obstacle")
    if start_cell == goal_cell:
        return np.stack([start, goal])
    cells = _astar(blocked, grid.resolution, start_cell, goal_cell)
    vertices = [start] + [grid.cell_center(c) for c in cells] + [goal]
    centers = occupied_centers(grid)
    smoothed = [vertices[0]]
    i = 0
    while i < len(vertices) - 1:
        j = len(vertices) - 1
        while j > i + 1 and not _line_is_clear(
            vertices[i], vertices[j], centers, clearance, grid.resolution
        ):
            j -= 1
        # j == i + 1 needs no check: consecutive vertices are safe by the
        # inflation-radius construction
        smoothed.append(vertices[j])
        i = j
    return np.stack(smoothed)


@dataclass(frozen=True)
class _SegmentProfile:
    start: np.ndarray
    direction: np.ndarray
    length: float
    v0: float
    vp: float
    v1: float
    amax: float

    @property
    def t_acc(self) -> float:
        return (self.vp - self.v0) / self.amax

    @property
    def t_dec(self) -> float:
        return (self.vp - self.v1) / self.amax

    @property
    def t_cruise(self) -> float:
        d_acc = (self.vp**2 - self.v0**2) / (2 * self.amax)
        d_dec = (self.vp**2 - self.v1**2) / (2 * self.amax)
        return max(0.0, self.length - d_acc - d_dec) / self.vp

    @property
    def duration(self) -> float:
        return self.t_acc + self.t_cruise + self.t_dec

    def eval(self, tau: float) -> tuple[float, float, float]:
        """Arc position, speed, and signed tangential acceleration at local time."""
        if tau >= self.duration - 1e-12:
            return self.length, self.v1, 0.0
        a = self.amax
        if tau < self.t_acc:
            return self.v0 * tau + 0.5 * a * tau * tau, self.v0 + a * tau, a
        d_acc = (self.vp**2 - self.v0**2) / (2 * a)
        tau -= self.t_acc
        if tau < self.t_cruise:
            return d_acc + self.vp * tau, self.vp, 0.0
        tau -= self.t_cruise
        return (
            d_acc + self.vp * self.t_cruise + self.vp * tau - 0.5 * a * tau * tau,
            self.vp - a * tau,
            -a,
        )


def _corner_speed_caps(
    vertices: np.ndarray, limits: KinematicLimits, corner_clearance: float
) -> np.ndarray:
    n = len(vertices)
    caps = np.full(n, limits.vmax)
    caps[0] = caps[-1] = 0.0
    corner_cap = math.sqrt(limits.amax * corner_clearance)
    for i in range(1, n - 1):
        d_in = vertices[i] - vertices[i - 1]
        d_out = vertices[i + 1] - vertices[i]
        cos = float(
            np.dot(d_in, d_out) / (np.linalg.norm(d_in) * np.linalg.norm(d_out))
        )
        # a straight-through vertex has no lateral acceleration; only real
        # corners get the sqrt(amax * clearance) cap
        if cos < 0.9999:
            caps[i] = min(caps[i], corner_cap)
    return caps


def time_parameterize(
    path: np.ndarray,
    limits: KinematicLimits,
    dt: float = 0.05,
    corner_clearance: float = 0.3,
) -> Trajectory:
    """Trapezoidal profile over the polyline: rest-to-rest overall, corner
    speeds capped, samples at fixed dt plus one at the exact final time."""
    path = np.asarray(path, dtype=np.float64)
    if path.ndim != 2 or path.shape[1] != 3 or len(path) < 2:
        raise ValueError("path must be an (N, 3) polyline with N >= 2")
    if not dt > 0:
        raise ValueError("dt must be positive")
    vertices = [path[0]]
    for p in path[1:]:
        if np.linalg.norm(p - vertices[-1]) > 1e-12:
            vertices.append(p)
    if len(vertices) < 2:
        hover = TrajectorySample(
            t=0.0, position=vertices[0], velocity=np.zeros(3), acceleration=np.zeros(3), yaw=0.0
        )
        return Trajectory(samples=[hover])
    vertices = np.stack(vertices)
    lengths = np.linalg.norm(np.diff(vertices, axis=0), axis=1)
    caps = _corner_speed_caps(vertices, limits, corner_clearance)

    # forward/backward passes make each vertex speed reachable under amax
    v = caps.copy()
    for i in range(1, len(v)):
        v[i] = min(v[i], math.sqrt(v[i - 1] ** 2 + 2 * limits.amax * lengths[i - 1]))
    for i in range(len(v) - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + 2 * limits.amax * lengths[i]))

    profiles = []
    for i in range(len(vertices) - 1):
        length = float(lengths[i])
        direction = (vertices[i + 1] - vertices[i]) / length
        vp = min(
            limits.vmax,
            math.sqrt((2 * limits.amax * length + v[i] ** 2 + v[i + 1] ** 2) / 2),
        )
        profiles.append(
            _SegmentProfile(
                start=vertices[i], direction=direction, length=length,
                v0=float(v[i]), vp=float(vp), v1=float(v[i + 1]), amax=limits.amax,
            )
        )
    boundaries = np.concatenate([[0.0], np.cumsum([p.duration for p in profiles])])
    total = float(boundaries[-1])

    times = [k * dt for k in range(int(math.floor(total / dt + 1e-9)) + 1)]
    if total - times[-1] > 1e-9:
        times.append(total)

    samples = []
    for t in times:
        if t >= total - 1e-12:
            samples.append(
                TrajectorySample(
                    t=total, position=vertices[-1], velocity=np.zeros(3),
                    acceleration=np.zeros(3), yaw=0.0,
                )
            )
            continue
        seg = min(int(np.searchsorted(boundaries, t, side="right")) - 1, len(profiles) - 1)
        profile = profiles[seg]
        arc, speed, accel = profile.eval(t - float(boundaries[seg]))
        samples.append(
            TrajectorySample(
                t=t,
                position=profile.start + profile.direction * arc,
                velocity=profile.direction * speed,
                acceleration=profile.direction * accel,
                yaw=0.0,
            )
        )
    return Trajectory(samples=samples)


def yaw_schedule(
    waypoints, trajectory: Trajectory, max_yaw_rate: float = 1.5
) -> Trajectory:
    """Fill the yaw channel by slewing toward the next waypoint's yaw.

    Yaw is controlled independently of position: each step turns along the
    shortest angular arc toward the active target at up to max_yaw_rate,
    then holds. Positions, velocities, and accelerations pass through.
    """
    if not waypoints:
        raise ValueError("need at least one waypoint")
    if not max_yaw_rate > 0:
        raise ValueError("max_yaw_rate must be positive")
    samples = trajectory.samples
    positions = np.stack([s.position for s in samples])

    anchors = []
    cursor = 0
    for wp in waypoints:
        dists = np.linalg.norm(positions[cursor:] - wp.position, axis=1)
        cursor = cursor + int(np.argmin(dists))
        anchors.append(cursor)

    yaws = [float(waypoints[0].yaw)]
    k = 0
    for j in range(1, len(samples)):
        while k < len(anchors) and anchors[k] < j:
            k += 1
        target = waypoints[min(k, len(waypoints) - 1)].yaw
        step_budget = max_yaw_rate * (samples[j].t - samples[j - 1].t)
        delta = wrap_angle(target - yaws[-1])
        delta = max(-step_budget, min(step_budget, delta))
        yaws.append(wrap_angle(yaws[-1] + delta))

    rescheduled = [
        TrajectorySample(
            t=s.t, position=s.position, velocity=s.velocity,
            acceleration=s.acceleration, yaw=yaw,
        )
        for s, yaw in zip(samples, yaws)
    ]
    return Trajectory(samples=rescheduled)


class TargetKind(enum.Enum):
    TARGET = "target"
    ADVANCED = "advanced"
    DONE = "done"


@dataclass(frozen=True)
class TargetResult:
    kind: TargetKind
    waypoint: Waypoint | None


@dataclass
class WaypointQueue:
    """Mutable cursor over the waypoint list during execution."""

    waypoints: list
    current_index: int = 0
    switch_threshold: float = 0.5

    def __post_init__(self) -> None:
        if not self.switch_threshold > 0:
            raise ValueError("switch_threshold must be positive")
        if not 0 <= self.current_index <= len(self.waypoints):
            raise ValueError("current_index out of range")


def next_target(queue: WaypointQueue, position) -> TargetResult:
    """Advance past every waypoint within the switch threshold, then report
    the active target (or Done once the final waypoint is reached)."""
    if not queue.waypoints:
        raise ValueError("waypoint queue is empty")
    position = np.asarray(position, dtype=np.float64).reshape(3)
    advanced = False
    while queue.current_index < len(queue.waypoints):
        current = queue.waypoints[queue.current_index]
        if float(np.linalg.norm(position - current.position)) < queue.switch_threshold:
            queue.current_index += 1
            advanced = True
            continue
        return TargetResult(TargetKind.ADVANCED if advanced else TargetKind.TARGET, current)
    return TargetResult(TargetKind.DONE, None)


@dataclass(frozen=True)
class PlanResult:
    path: np.ndarray
    trajectory: Trajectory
    limits: KinematicLimits
    clearance: float


def plan_mission(
    waypoints,
    grid: OccupancyGrid,
    clearance: float = 0.3,
    dt: float = 0.05,
    max_yaw_rate: float = 1.5,
    vmin: float = DEFAULT_VMIN,
    amin: float = DEFAULT_AMIN,
) -> PlanResult:
    """Full planning pass: derive limits from the waypoints, plan each pair
    as a collision-free segment, parameterize, and schedule yaw."""
    limits = finite_diff_limits(waypoints, vmin=vmin, amin=amin)
    vertices = [np.asarray(waypoints[0].position, dtype=np.float64)]
    for a, b in zip(waypoints, waypoints[1:]):
        segment = plan_segment(grid, a.position, b.position, clearance)
        vertices.extend(segment[1:])
    path = np.stack(vertices)
    trajectory = time_parameterize(path, limits, dt=dt, corner_clearance=clearance)
    trajectory = yaw_schedule(waypoints, trajectory, max_yaw_rate=max_yaw_rate)
    return PlanResult(path=path, trajectory=trajectory, limits=limits, clearance=clearance)


__all__ = [
    "GoalOccludedError",
    "OccupancyGrid",
    "PlanResult",
    "TargetKind",
    "TargetResult",
    "UnreachableError",
    "VoxelFormatError",
    "WaypointQueue",
    "inflate",
    "inflation_radius",
    "load_grid",
    "next_target",
    "occupied_centers",
    "plan_mission",
    "plan_segment",
    "save_grid",
    "time_parameterize",
    "yaw_schedule",
]
