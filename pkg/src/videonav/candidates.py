"""Candidate generation: prompt templates, batched sampling, frame downsampling.

A mission turns one observation frame plus an instruction into K candidate
rollout videos. Prompts come in four detail levels; the three written levels
are canned per task family, the fourth is produced by a rewriter backend.
"""

from __future__ import annotations

import enum
import json
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from PIL import Image


class ConfigurationError(ValueError):
    pass


class BatchGenerationError(RuntimeError):
    """Every candidate in a batch failed; there is nothing to judge."""


class PromptLevel(enum.Enum):
    SIMPLE = "Simple"
    KINEMATIC = "Kinematic"
    DECOMPOSED = "Decomposed"
    REWRITTEN = "Rewritten"


class CandidateStatus(enum.Enum):
    UNJUDGED = "Unjudged"
    PASS = "Pass"
    FAIL = "Fail"


@dataclass(frozen=True)
class GenerationRequest:
    image: str
    instruction: str
    prompt_level: PromptLevel
    seed: int
    duration: float
    fps: float

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction must be non-empty")
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if not self.fps > 0:
            raise ValueError("fps must be positive")


@dataclass(frozen=True)
class CandidateVideo:
    """One sampled rollout. Frames may only be empty on a failed candidate."""

    id: int
    seed: int
    frames: list[np.ndarray]
    status: CandidateStatus
    error_note: str = ""

    def __post_init__(self) -> None:
        if self.id < 1:
            raise ValueError("candidate ids are 1-based")
        if not self.frames and self.status is not CandidateStatus.FAIL:
            raise ValueError("a candidate without frames must carry Fail status")


def _normalize_family(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip().lower())


# Canned prompt hierarchies for the studio task families. Text is pinned
# data fed verbatim to the video backend; do not reflow or "fix" wording.
_FAMILY_TEXTS: dict[str, dict[PromptLevel, str]] = {
    "circle tree": {
        PromptLevel.SIMPLE: (
            "A first-person perspective video of a 360-degree circular orbit "
            "around a green tree centered in the frame."
        ),
        PromptLevel.KINEMATIC: (
            "First-person perspective. The camera performs a smooth and steady "
            "360-degree circular orbit around the green tree at a constant speed "
            "and fixed height, maintaining a strictly eye-level view without any "
            "vertical bobbing, tilting, or camera shake."
        ),
        PromptLevel.DECOMPOSED: (
            "First-person perspective. The camera performs a fast and steady "
            "360-degree circular orbit around the green tree. The rotation "
            "completes a full 360-degree circle, ensuring the camera ends exactly "
            "back at the starting position and orientation. All environmental "
            "details, including the grey floor and patterned curtains, must "
            "remain perfectly consistent."
        ),
    },
    "behind rock": {
        PromptLevel.SIMPLE: (
            "A first-person perspective video circling around the large black "
            "rock to reach the area behind it."
        ),
        PromptLevel.KINEMATIC: (
            "First-person perspective. The camera performs a smooth and steady "
            "circular movement to reach the rear of the large black rock, "
            "maintaining a constant eye-level view without any vertical bobbing "
            "or camera shake throughout the trajectory."
        ),
        PromptLevel.DECOMPOSED: (
            "First-person perspective. The camera performs a smooth, steady "
            "circular motion around the large black rock to reach its rear. "
            "Crucially, the camera's gaze remains fixed on the specific area "
            "behind the rock at all times. The entire indoor studio environment "
            "must remain perfectly consistent and static."
        ),
    },
    "find kitchen": {
        PromptLevel.SIMPLE: "Move to the room where cooking is possible.",
        PromptLevel.KINEMATIC: (
            "First-person perspective. Perform a smooth and steady gliding "
            "motion at a constant height to enter the room where cooking is "
            "possible. The movement must be fluid with zero camera shake or "
            "erratic tilting."
        ),
        PromptLevel.DECOMPOSED: (
            "First-person perspective. Carefully analyze the visual landmarks "
            "and functional attributes of the two distinct spaces. Based on this "
            "semantic reasoning, execute a smooth transition into the specific "
            "area designed for food preparation while maintaining absolute "
            "environmental consistency."
        ),
    },
    "fast move": {
        PromptLevel.SIMPLE: (
            "First-person perspective video where the camera moves very fast "
            "toward the green tree in the distance and stops right in front of it."
        ),
        PromptLevel.KINEMATIC: (
            "First-person perspective. The camera performs a smooth, high-speed "
            "forward movement toward the green tree, accelerating continuously "
            "to create a dynamic sense of depth, followed by a precise and "
            "stable stop directly in front of the tree."
        ),
        PromptLevel.DECOMPOSED: (
            "In the first 3 seconds, the camera rapidly moves forward toward the "
            "green tree, accelerating continuously to create motion blur on "
            "background elements. At the exact end of the third second, the "
            "camera comes to an immediate, precise stop at a one-meter distance. "
            "For the remaining 2 seconds, the camera remains completely "
            "stationary."
        ),
    },
    "round trip": {
        PromptLevel.SIMPLE: (
            "A first-person perspective video where the camera moves forward "
            "toward the green plants and then moves backward to the starting "
            "position."
        ),
        PromptLevel.KINEMATIC: (
            "First-person perspective. The camera moves smoothly forward toward "
            "the plants along the center axis. At the midpoint of the path, the "
            "camera comes to a complete stop, then pulls back at the same "
            "constant speed until it returns to the start."
        ),
        PromptLevel.DECOMPOSED: (
            "The camera approaches the plants from the center axis, in a "
            "first-person perspective. When it reaches the midpoint, the camera "
            "stops. Then, the camera pulls back at the same speed, retracing the "
            "original path completely. The last frame of the video is exactly "
            "the same as the first frame."
        ),
    },
    "turn and advance": {
        PromptLevel.SIMPLE: (
            "A first-person perspective video where the camera turns 45 degrees "
            "to the right and then moves straight forward across the open studio."
        ),
        PromptLevel.KINEMATIC: (
            "First-person perspective. The camera performs a smooth 45-degree "
            "right turn, followed by a steady and fluid forward movement. The "
            "transition from rotation to translation must be seamless, "
            "maintaining constant height without unintended rotation."
        ),
        PromptLevel.DECOMPOSED: (
            "In the first 1 second, the camera smoothly rotates 45 degrees to "
            "the right. Immediately after finishing the rotation, it moves "
            "straight forward across the studio without any further rotation. "
            "All environmental details—including overhead lights and "
            "rigging—must remain perfectly consistent and static."
        ),
    },
}


def _default_rewriter(instruction: str) -> str:
    """Offline stand-in for the rewriter backend: expands the instruction
    with the framing cues every written template shares."""
    return (
        "First-person perspective. The camera moves smoothly and steadily to "
        f"carry out the following task: {instruction.strip()} The environment "
        "must remain consistent throughout."
    )


@dataclass(frozen=True)
class TemplateSet:
    """Prompt texts per task family and level, plus the rewriter hook.

    Unknown families still work at the Simple level (the instruction already
    is a prompt) and at Rewritten (the rewriter takes any instruction); the
    two middle levels encode family-specific kinematics and need a template.
    """

    families: dict[str, dict[PromptLevel, str]] = field(default_factory=dict)
    rewriter: Callable[[str], str] | None = None

    def __post_init__(self) -> None:
        normalized = {}
        for family, levels in self.families.items():
            key = _normalize_family(family)
            if not key:
                raise ConfigurationError("template family key must be non-empty")
            normalized[key] = dict(levels)
        object.__setattr__(self, "families", normalized)

    def prompt_for(self, instruction: str, level: PromptLevel) -> str:
        if level is PromptLevel.REWRITTEN:
            if self.rewriter is None:
                raise ConfigurationError("Rewritten level requires a rewriter")
            return self.rewriter(instruction)
        levels = self.families.get(_normalize_family(instruction))
        if levels is None:
            if level is PromptLevel.SIMPLE:
                return instruction
            raise ConfigurationError(
                f"no {level.value} template for task family {instruction!r}"
            )
        if level not in levels:
            raise ConfigurationError(
                f"task family {instruction!r} has no {level.value} template"
            )
        return levels[level]


DEFAULT_TEMPLATE_SET = TemplateSet(families=_FAMILY_TEXTS, rewriter=_default_rewriter)


def build_prompt(request: GenerationRequest, template_set: TemplateSet) -> str:
    return template_set.prompt_for(request.instruction, request.prompt_level)


def sample_candidates(
    request: GenerationRequest,
    k: int,
    backend,
    template_set: TemplateSet = DEFAULT_TEMPLATE_SET,
    parallelism: int = 4,
) -> list[CandidateVideo]:
    """Fan out k generation calls; candidate i uses seed request.seed + i.

    A failing backend call marks that candidate Fail and the batch continues;
    only a batch with zero surviving candidates is an error.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    prompt = build_prompt(request, template_set)

    def generate_one(candidate_id: int) -> CandidateVideo:
        seed = request.seed + candidate_id
        try:
            frames = backend.generate(
                prompt=prompt,
                image=request.image,
                seed=seed,
                duration=request.duration,
                fps=request.fps,
            )
        except Exception as err:  # noqa: BLE001 - any backend fault downgrades one candidate
            return CandidateVideo(
                id=candidate_id,
                seed=seed,
                frames=[],
                status=CandidateStatus.FAIL,
                error_note=str(err),
            )
        return CandidateVideo(
            id=candidate_id,
            seed=seed,
            frames=list(frames),
            status=CandidateStatus.UNJUDGED,
        )

    with ThreadPoolExecutor(max_workers=min(parallelism, k)) as pool:
        batch = list(pool.map(generate_one, range(1, k + 1)))
    batch.sort(key=lambda c: c.id)
    if all(c.status is CandidateStatus.FAIL for c in batch):
        notes = "; ".join(f"candidate {c.id}: {c.error_note}" for c in batch)
        raise BatchGenerationError(f"all {k} candidates failed ({notes})")
    return batch


def downsample_indices(n_frames: int, stride: int) -> list[int]:
    """Frame indices 0, stride, 2*stride, ... plus the last frame if missed."""
    if n_frames < 1:
        raise ValueError("need at least one frame")
    if stride < 1:
        raise ValueError("stride must be at least 1")
    indices = list(range(0, n_frames, stride))
    if indices[-1] != n_frames - 1:
        indices.append(n_frames - 1)
    return indices


def downsample_frames(video: CandidateVideo, stride: int) -> list[np.ndarray]:
    if not video.frames:
        raise ValueError("candidate has no frames to downsample")
    return [video.frames[i] for i in downsample_indices(len(video.frames), stride)]


def save_candidate(
    directory: str | Path,
    video: CandidateVideo,
    prompt: str,
    fps: float,
    duration: float,
) -> None:
    """Persist frames as zero-padded PNGs next to a small manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for i, frame in enumerate(video.frames):
        Image.fromarray(frame).save(directory / f"frame_{i:06d}.png")
    manifest = {
        "seed": video.seed,
        "prompt": prompt,
        "fps": fps,
        "duration": duration,
        "frame_count": len(video.frames),
        "status": video.status.value,
        "error_note": video.error_note,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2))


def load_candidate(directory: str | Path, id: int) -> CandidateVideo:
    directory = Path(directory)
    manifest = json.loads((directory / "manifest.json").read_text())
    frames = []
    for i in range(manifest["frame_count"]):
        with Image.open(directory / f"frame_{i:06d}.png") as img:
            frames.append(np.asarray(img.convert("RGB"), dtype=np.uint8))
    return CandidateVideo(
        id=id,
        seed=manifest["seed"],
        frames=frames,
        status=CandidateStatus(manifest.get("status", "Unjudged")),
        error_note=manifest.get("error_note", ""),
    )


def candidate_with_status(
    video: CandidateVideo, status: CandidateStatus, note: str = ""
) -> CandidateVideo:
    return replace(video, status=status, error_note=note or video.error_note)


__all__ = [
    "BatchGenerationError",
    "CandidateStatus",
    "CandidateVideo",
    "ConfigurationError",
    "DEFAULT_TEMPLATE_SET",
    "GenerationRequest",
    "PromptLevel",
    "TemplateSet",
    "build_prompt",
    "candidate_with_status",
    "downsample_frames",
    "downsample_indices",
    "load_candidate",
    "sample_candidates",
    "save_candidate",
]
