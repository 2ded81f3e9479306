"""Mission orchestration: the persistent state machine behind the HTTP API
and the CLI.

Persistence is a plain directory tree per mission. Every stage write goes
through an atomic rename, and the mission manifest is rewritten last, so a
process killed between stages resumes cleanly from the persisted state: a
stage either committed entirely or never happened.
"""

from __future__ import annotations

import enum
import json
import os
import tempfile
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from ..candidates import (
    DEFAULT_TEMPLATE_SET,
    CandidateStatus,
    GenerationRequest,
    PromptLevel,
    build_prompt,
    downsample_indices,
    load_candidate,
    sample_candidates,
    save_candidate,
)
from ..geometry import (
    Waypoint,
    format_trajectory,
    format_waypoints,
    parse_trajectory,
    parse_waypoints,
    yaw_from_pose,
)
from ..judge import (
    JudgeParseError,
    build_ranking_prompt,
    parse_judge_output,
    reward,
    select_best,
)
from ..planner import OccupancyGrid, WaypointQueue, load_grid, plan_mission, save_grid
from ..scale import ScaleEstimate, apply_scale, estimate_scale, save_depth, save_pointmap
from ..simulator import check_collisions, execute, render_observation, voxelize_scene
from .config import ClientBundle, ServiceConfig


class InputError(ValueError):
    """Caller supplied something unusable; the mission is untouched."""


class StateError(RuntimeError):
    """Operation not legal in the mission's current state."""


class MissionState(enum.Enum):
    CREATED = "Created"
    GENERATING = "Generating"
    JUDGING = "Judging"
    AWAITING_SUPERVISOR = "AwaitingSupervisor"
    SELECTED = "Selected"
    DECODING = "Decoding"
    PLANNING = "Planning"
    EXECUTING = "Executing"
    DONE = "Done"
    ABORTED = "Aborted"


TERMINAL_STATES = frozenset({MissionState.DONE, MissionState.ABORTED})

# advance() runs the stage keyed by the current state and rests in the next
# state; AwaitingSupervisor only moves through decide().
_STAGE_ORDER = {
    MissionState.CREATED: "generate",
    MissionState.GENERATING: "judge",
    MissionState.JUDGING: "judge",  # crash recovery: judging never committed
    MissionState.SELECTED: "decode",
    MissionState.DECODING: "plan",
    MissionState.PLANNING: "execute",
    MissionState.EXECUTING: "finalize",
}


class DecisionAction(enum.Enum):
    RESAMPLE = "Resample"
    TERMINATE = "Terminate"
    APPROVE_OVERRIDE = "ApproveOverride"


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path: Path, payload: str) -> None:
    _atomic_write_bytes(path, payload.encode("utf-8"))


def _atomic_write_json(path: Path, record) -> None:
    _atomic_write_text(path, json.dumps(record, indent=2) + "\n")


@dataclass
class Mission:
    id: str
    instruction: str
    state: MissionState
    created_at: float
    resample_count: int = 0
    round: int = 1
    selected_candidate: int | None = None
    abort_cause: str | None = None
    artifacts: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "state": self.state.value,
            "created_at": self.created_at,
            "resample_count": self.resample_count,
            "round": self.round,
            "selected_candidate": self.selected_candidate,
            "abort_cause": self.abort_cause,
            "artifacts": self.artifacts,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Mission":
        return cls(
            id=record["id"],
            instruction=record["instruction"],
            state=MissionState(record["state"]),
            created_at=record["created_at"],
            resample_count=record["resample_count"],
            round=record["round"],
            selected_candidate=record["selected_candidate"],
            abort_cause=record["abort_cause"],
            artifacts=dict(record["artifacts"]),
        )


class MissionService:
    """All state lives on disk under `root`; instances are disposable.

    Concurrency: one lock per mission id serializes stage execution; two
    missions never share any path, so they advance independently.
    """

    def __init__(self, root: str | Path, config: ServiceConfig, clients: ClientBundle):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.config = config
        self.clients = clients
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- store primitives ---------------------------------------------------

    def mission_dir(self, mission_id: str) -> Path:
        return self.root / mission_id

    def _lock(self, mission_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(mission_id, threading.Lock())

    def _load(self, mission_id: str) -> Mission:
        path = self.mission_dir(mission_id) / "mission.json"
        if not path.exists():
            raise KeyError(f"no mission {mission_id}")
        return Mission.from_record(json.loads(path.read_text()))

    def _persist(self, mission: Mission) -> None:
        _atomic_write_json(self.mission_dir(mission.id) / "mission.json", mission.to_record())

    def list_ids(self) -> list[str]:
        if not self.root.exists():
            return []
        ids = [p.name for p in self.root.iterdir() if (p / "mission.json").exists()]
        missions = [self._load(i) for i in ids]
        missions.sort(key=lambda m: (-m.created_at, m.id))
        return [m.id for m in missions]

    # -- lifecycle ----------------------------------------------------------

    def create(self, instruction: str, observation: bytes | str | Path | None) -> Mission:
        if not instruction or not instruction.strip():
            raise InputError("instruction must be non-empty")
        image_bytes = self._observation_bytes(observation)
        mission = Mission(
            id=uuid.uuid4().hex[:12],
            instruction=instruction.strip(),
            state=MissionState.CREATED,
            created_at=time.time(),
        )
        directory = self.mission_dir(mission.id)
        directory.mkdir(parents=True)
        _atomic_write_bytes(directory / "observation.png", image_bytes)
        mission.artifacts["observation"] = "observation.png"
        self._persist(mission)
        return mission

    def _observation_bytes(self, observation) -> bytes:
        if observation is None:
            if self.clients.scene is None:
                raise InputError("no observation given and no scene to render one from")
            import io

            frame = render_observation(self.clients.scene)
            buffer = io.BytesIO()
            Image.fromarray(frame).save(buffer, format="PNG")
            return buffer.getvalue()
        if isinstance(observation, (str, Path)):
            path = Path(observation)
            if not path.is_file():
                raise InputError(f"observation {path} is not a readable file")
            observation = path.read_bytes()
        try:
            import io

            with Image.open(io.BytesIO(observation)) as img:
                img.verify()
        except Exception as err:
            raise InputError(f"observation is not a decodable image: {err}") from err
        return bytes(observation)

    def get(self, mission_id: str) -> Mission:
        return self._load(mission_id)

    def advance(self, mission_id: str) -> Mission:
        with self._lock(mission_id):
            mission = self._load(mission_id)
            if mission.state in TERMINAL_STATES:
                raise StateError(f"mission is {mission.state.value}; nothing to advance")
            if mission.state is MissionState.AWAITING_SUPERVISOR:
                raise StateError("mission awaits a supervisor decision")
            stage = _STAGE_ORDER[mission.state]
            if mission.state is MissionState.GENERATING:
                # mark judging underway so a crash here resumes at the judge
                mission.state = MissionState.JUDGING
                self._persist(mission)
            try:
                getattr(self, f"_stage_{stage}")(mission)
            except (InputError, StateError):
                raise
            except Exception as err:  # noqa: BLE001 - any stage fault aborts the mission
                mission.state = MissionState.ABORTED
                mission.abort_cause = f"{stage}: {err}"
                self._persist(mission)
            return mission

    def decide(self, mission_id: str, action: DecisionAction, candidate_id: int | None = None) -> Mission:
        with self._lock(mission_id):
            mission = self._load(mission_id)
            if mission.state is not MissionState.AWAITING_SUPERVISOR:
                raise StateError(
                    f"decisions are only accepted in AwaitingSupervisor, not {mission.state.value}"
                )
            if action is DecisionAction.TERMINATE:
                mission.state = MissionState.ABORTED
                mission.abort_cause = "terminated by supervisor"
                self._persist(mission)
                return mission
            if action is DecisionAction.APPROVE_OVERRIDE:
                if not self.config.allow_override:
                    raise InputError("override approval is disabled by configuration")
                if candidate_id is None:
                    raise InputError("override requires a candidate id")
                round_dir = self._round_dir(mission)
                if not (round_dir / "candidates" / f"cand_{candidate_id:02d}").is_dir():
                    raise InputError(f"no candidate {candidate_id} in round {mission.round}")
                mission.selected_candidate = candidate_id
                mission.state = MissionState.SELECTED
                self._persist(mission)
                return mission
            # Resample
            if mission.resample_count >= self.config.generation.max_resamples:
                mission.state = MissionState.ABORTED
                mission.abort_cause = "budget-exhausted"
                self._persist(mission)
                return mission
            mission.resample_count += 1
            mission.round += 1
            try:
                self._stage_generate(mission)
            except Exception as err:  # noqa: BLE001
                mission.state = MissionState.ABORTED
                mission.abort_cause = f"generate: {err}"
                self._persist(mission)
            return mission

    # -- stages -------------------------------------------------------------

    def _round_dir(self, mission: Mission) -> Path:
        return self.mission_dir(mission.id) / "rounds" / f"{mission.round:02d}"

    def _seed_base(self, mission: Mission) -> int:
        # each round gets a disjoint seed block
        return self.config.generation.seed + mission.resample_count * self.config.generation.k

    def _stage_generate(self, mission: Mission) -> None:
        gen = self.config.generation
        observation = np.asarray(
            Image.open(self.mission_dir(mission.id) / "observation.png").convert("RGB")
        )
        request = GenerationRequest(
            image=observation,
            instruction=mission.instruction,
            prompt_level=PromptLevel(gen.prompt_level),
            seed=self._seed_base(mission),
            duration=gen.duration,
            fps=gen.fps,
        )
        prompt = build_prompt(request, DEFAULT_TEMPLATE_SET)
        candidates = sample_candidates(
            request, gen.k, self.clients.video, parallelism=self._video_parallelism()
        )
        round_dir = self._round_dir(mission)
        manifest = []
        for video in candidates:
            save_candidate(
                round_dir / "candidates" / f"cand_{video.id:02d}",
                video,
                prompt=prompt,
                fps=gen.fps,
                duration=gen.duration,
            )
            manifest.append(
                {
                    "id": video.id,
                    "seed": video.seed,
                    "status": video.status.value,
                    "frame_count": len(video.frames),
                    "error_note": video.error_note,
                }
            )
        _atomic_write_json(
            round_dir / "candidates.json",
            {"round": mission.round, "seed_base": self._seed_base(mission), "candidates": manifest},
        )
        mission.artifacts[f"round_{mission.round:02d}"] = str(
            round_dir.relative_to(self.mission_dir(mission.id))
        )
        mission.state = MissionState.GENERATING
        mission.selected_candidate = None
        self._persist(mission)

    def _video_parallelism(self) -> int:
        if self.config.adapters.mode == "http":
            return self.config.adapters.video.parallelism
        return 4

    def _stage_judge(self, mission: Mission) -> None:
        round_dir = self._round_dir(mission)
        roster = json.loads((round_dir / "candidates.json").read_text())
        survivors = [
            entry["id"]
            for entry in roster["candidates"]
            if entry["status"] != CandidateStatus.FAIL.value and entry["frame_count"] > 0
        ]
        if not survivors:
            raise RuntimeError("no candidate survived generation")
        videos = [
            load_candidate(round_dir / "candidates" / f"cand_{cid:02d}", cid)
            for cid in survivors
        ]
        weights = self.config.judge.weights()
        prompt = build_ranking_prompt(mission.instruction, len(videos), weights)
        attempts = self.config.judge.parse_retries + 1
        parsed = None
        for attempt in range(attempts):
            raw = self.clients.judge.rank(prompt, [v.frames for v in videos])
            _atomic_write_text(round_dir / "judge_raw.txt", raw)
            try:
                parsed = parse_judge_output(raw, len(videos))
                break
            except JudgeParseError:
                if attempt == attempts - 1:
                    raise
        verdict_records = []
        for cid, scores, total in zip(survivors, parsed.verdicts, parsed.totals):
            verdict_records.append(
                {
                    "candidate_id": cid,
                    "status": scores.status.value,
                    "tp": scores.sc_tp,
                    "as": scores.sc_as,
                    "sc": scores.sc_sc,
                    "reason": scores.reason,
                    "total_reported": total,
                    "reward": reward(scores, weights),
                    "flagged": scores.flagged,
                }
            )
        _atomic_write_json(round_dir / "verdicts.json", {"verdicts": verdict_records})
        outcome = select_best(list(parsed.verdicts), weights)
        selection = {
            "escalated": outcome.escalated,
            "best_candidate": None if outcome.escalated else survivors[outcome.best_id - 1],
            "best_reward": outcome.best_reward,
        }
        _atomic_write_json(round_dir / "selection.json", selection)
        if outcome.escalated:
            mission.state = MissionState.AWAITING_SUPERVISOR
        else:
            mission.selected_candidate = selection["best_candidate"]
            mission.state = MissionState.SELECTED
        self._persist(mission)

    def _stage_decode(self, mission: Mission) -> None:
        if mission.selected_candidate is None:
            raise RuntimeError("no candidate selected")
        gen = self.config.generation
        round_dir = self._round_dir(mission)
        video = load_candidate(
            round_dir / "candidates" / f"cand_{mission.selected_candidate:02d}",
            mission.selected_candidate,
        )
        indices = downsample_indices(len(video.frames), gen.frame_stride)
        subset = [video.frames[i] for i in indices]
        decoded = self.clients.geometry.decode(subset)
        directory = self.mission_dir(mission.id)
        geo_dir = directory / "geometry"
        geo_dir.mkdir(parents=True, exist_ok=True)
        pairs = []
        for slot, (frame, pointmap) in enumerate(zip(subset, decoded.pointmaps)):
            depth = self.clients.depth.estimate(frame)
            save_pointmap(geo_dir / f"pointmap_{slot:02d}.pfm", pointmap)
            save_depth(geo_dir / f"depth_{slot:02d}.pfm", depth)
            pairs.append((depth, pointmap))
        _atomic_write_json(
            geo_dir / "poses.json",
            {
                "frame_indices": list(indices),
                "poses": [
                    {
                        "position": [float(v) for v in p.position],
                        "rotation": [[float(v) for v in row] for row in p.rotation],
                    }
                    for p in decoded.poses
                ],
            },
        )
        estimate = estimate_scale(pairs, self.config.scale.to_scale_config())
        _atomic_write_json(directory / "scale.json", estimate.to_record())
        normalized = [
            Waypoint(
                t=index / gen.fps,
                x=pose.position[0],
                y=pose.position[1],
                z=pose.position[2],
                yaw=yaw_from_pose(pose),
            )
            for index, pose in zip(indices, decoded.poses)
        ]
        scaled = apply_scale(estimate.S, normalized)
        _atomic_write_text(directory / "waypoints_normalized.txt", format_waypoints(normalized))
        _atomic_write_text(directory / "waypoints.txt", format_waypoints(scaled))
        mission.artifacts.update(
            {
                "geometry": "geometry",
                "scale": "scale.json",
                "waypoints_normalized": "waypoints_normalized.txt",
                "waypoints": "waypoints.txt",
            }
        )
        mission.state = MissionState.DECODING
        self._persist(mission)

    def _occupancy_grid(self, waypoints) -> OccupancyGrid:
        planner = self.config.planner
        if self.clients.scene is not None:
            return voxelize_scene(
                self.clients.scene, resolution=planner.grid_resolution, padding=planner.grid_padding
            )
        # wire mode carries no synthetic world: plan in free space around the path
        points = np.array([[w.x, w.y, w.z] for w in waypoints])
        pad = planner.grid_padding + planner.clearance
        low = np.floor((points.min(axis=0) - pad) / planner.grid_resolution) * planner.grid_resolution
        span = points.max(axis=0) + pad - low
        dims = tuple(int(np.ceil(v / planner.grid_resolution)) for v in span)
        return OccupancyGrid(
            origin=low,
            resolution=planner.grid_resolution,
            occupancy=np.zeros(dims, dtype=bool),
        )

    def _stage_plan(self, mission: Mission) -> None:
        planner = self.config.planner
        directory = self.mission_dir(mission.id)
        waypoints = parse_waypoints((directory / "waypoints.txt").read_text())
        grid = self._occupancy_grid(waypoints)
        result = plan_mission(
            waypoints,
            grid,
            clearance=planner.clearance,
            dt=planner.dt,
            max_yaw_rate=planner.max_yaw_rate,
            vmin=planner.vmin,
            amin=planner.amin,
        )
        plan_dir = directory / "plan"
        plan_dir.mkdir(parents=True, exist_ok=True)
        save_grid(plan_dir / "grid.txt", grid)
        _atomic_write_text(plan_dir / "trajectory.txt", format_trajectory(result.trajectory))
        _atomic_write_json(
            plan_dir / "plan.json",
            {
                "path": [[float(v) for v in p] for p in result.path],
                "vmax": result.limits.vmax,
                "amax": result.limits.amax,
                "clearance": result.clearance,
                "duration": result.trajectory.duration,
            },
        )
        mission.artifacts["plan"] = "plan"
        mission.state = MissionState.PLANNING
        self._persist(mission)

    def _stage_execute(self, mission: Mission) -> None:
        planner = self.config.planner
        directory = self.mission_dir(mission.id)
        trajectory = parse_trajectory((directory / "plan" / "trajectory.txt").read_text())
        waypoints = parse_waypoints((directory / "waypoints.txt").read_text())
        queue = WaypointQueue(waypoints=waypoints, switch_threshold=planner.switch_threshold)
        log = execute(trajectory, queue, dt=planner.dt, tracking_tau=planner.tracking_tau)
        grid = load_grid(directory / "plan" / "grid.txt")
        report = check_collisions(trajectory, grid, clearance=planner.clearance)
        record = log.to_record()
        record["collisions"] = {
            "violation_count": len(report.violations),
            "is_collision_free": report.is_collision_free,
        }
        _atomic_write_json(directory / "execution.json", record)
        mission.artifacts["execution"] = "execution.json"
        mission.state = MissionState.EXECUTING
        self._persist(mission)

    def _stage_finalize(self, mission: Mission) -> None:
        directory = self.mission_dir(mission.id)
        execution = json.loads((directory / "execution.json").read_text())
        waypoints = parse_waypoints((directory / "waypoints.txt").read_text())
        path = np.array([[w.x, w.y, w.z] for w in waypoints])
        path_length = float(np.linalg.norm(np.diff(path, axis=0), axis=1).sum())
        scale = json.loads((directory / "scale.json").read_text())
        _atomic_write_json(
            directory / "result.json",
            {
                "mission": mission.id,
                "state": "Done",
                "round": mission.round,
                "selected_candidate": mission.selected_candidate,
                "scale": scale["scale"],
                "path_length": path_length,
                "done": execution["done"],
                "max_tracking_error": execution["max_tracking_error"],
                "tracking_rmse": execution["tracking_rmse"],
                "is_collision_free": execution["collisions"]["is_collision_free"],
            },
        )
        mission.artifacts["result"] = "result.json"
        mission.state = MissionState.DONE
        self._persist(mission)

    # -- derived views ------------------------------------------------------

    def candidate_frame_path(self, mission_id: str, candidate_id: int, frame: int) -> Path:
        mission = self._load(mission_id)
        path = (
            self._round_dir(mission)
            / "candidates"
            / f"cand_{candidate_id:02d}"
            / f"frame_{frame:06d}.png"
        )
        if not path.is_file():
            raise KeyError(f"no frame {frame} for candidate {candidate_id}")
        return path

    def trajectory_text(self, mission_id: str) -> str:
        path = self.mission_dir(mission_id) / "plan" / "trajectory.txt"
        if not path.is_file():
            raise KeyError("trajectory not planned yet")
        return path.read_text()

    def view(self, mission_id: str) -> dict:
        mission = self._load(mission_id)
        directory = self.mission_dir(mission.id)
        view = {
            "id": mission.id,
            "instruction": mission.instruction,
            "state": mission.state.value,
            "created_at": mission.created_at,
            "resample_count": mission.resample_count,
            "max_resamples": self.config.generation.max_resamples,
            "round": mission.round,
            "selected_candidate": mission.selected_candidate,
            "abort_cause": mission.abort_cause,
            "allow_override": self.config.allow_override,
            "candidates": [],
            "scale": None,
            "trajectory": None,
        }
        round_dir = self._round_dir(mission)
        roster_path = round_dir / "candidates.json"
        verdicts_path = round_dir / "verdicts.json"
        verdicts = {}
        if verdicts_path.is_file():
            for entry in json.loads(verdicts_path.read_text())["verdicts"]:
                verdicts[entry["candidate_id"]] = entry
        if roster_path.is_file():
            for entry in json.loads(roster_path.read_text())["candidates"]:
                cid = entry["id"]
                verdict = verdicts.get(cid)
                view["candidates"].append(
                    {
                        "id": cid,
                        "generation_status": entry["status"],
                        "frame_count": entry["frame_count"],
                        "error_note": entry["error_note"],
                        "judge_status": verdict["status"] if verdict else None,
                        "reward": verdict["reward"] if verdict else None,
                        "scores": {
                            "tp": verdict["tp"], "as": verdict["as"], "sc": verdict["sc"]
                        }
                        if verdict
                        else None,
                        "reason": verdict["reason"] if verdict else None,
                        "thumbnail": f"/missions/{mission.id}/candidates/{cid}/frames/0"
                        if entry["frame_count"]
                        else None,
                    }
                )
        scale_path = directory / "scale.json"
        if scale_path.is_file():
            view["scale"] = json.loads(scale_path.read_text())
        plan_path = directory / "plan" / "plan.json"
        if plan_path.is_file():
            plan = json.loads(plan_path.read_text())
            view["trajectory"] = {
                "duration": plan["duration"],
                "vmax": plan["vmax"],
                "amax": plan["amax"],
                "url": f"/missions/{mission.id}/trajectory",
            }
        result_path = directory / "result.json"
        if result_path.is_file():
            view["result"] = json.loads(result_path.read_text())
        return view

    def summary(self, mission_id: str) -> dict:
        mission = self._load(mission_id)
        return {
            "id": mission.id,
            "instruction": mission.instruction,
            "state": mission.state.value,
            "created_at": mission.created_at,
            "resample_count": mission.resample_count,
            "round": mission.round,
        }


__all__ = [
    "DecisionAction",
    "InputError",
    "Mission",
    "MissionService",
    "MissionState",
    "StateError",
    "TERMINAL_STATES",
]
