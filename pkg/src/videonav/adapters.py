"""Clients for the four external capabilities: video generation, geometry
decoding (poses + pointmaps), metric depth, and VLM judging.

Each capability has a wire implementation speaking JSON over HTTP and a
deterministic mock backed by the synthetic simulator. The two are
interchangeable; the whole pipeline runs green on mocks alone.

Secrets policy: wire clients read the bearer token from the environment
variable named in AdapterConfig at call time. The token value is never
persisted anywhere and never appears in mission artifacts.
"""

from __future__ import annotations

import base64
import io
import json
import os
import threading
import time
from dataclasses import dataclass
from typing import Protocol

import httpx
import numpy as np
from PIL import Image

from .candidates import ConfigurationError
from .geometry import DepthMap, PointMap, Pose
from .judge import (
    JudgeScores,
    JudgeWeights,
    ParsedJudgeOutput,
    Verdict,
    format_judge_output,
    reward,
)
from .simulator import (
    SyntheticScene,
    apply_depth_noise,
    decode_stamp,
    poses_for_frames,
    render_frames,
    render_ground_truth,
)


class TransportError(RuntimeError):
    """A wire call failed for good; carries how many attempts were made."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempt{'s' if attempts != 1 else ''})")
        self.attempts = attempts


@dataclass(frozen=True)
class AdapterConfig:
    endpoint: str
    auth_token_env: str
    timeout: float = 180.0
    max_retries: int = 3
    parallelism: int = 4

    def __post_init__(self) -> None:
        if not self.endpoint:
            raise ValueError("endpoint must be non-empty")
        if not self.auth_token_env:
            raise ValueError("auth_token_env must name an environment variable")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.parallelism < 1:
            raise ValueError("parallelism must be at least 1")


@dataclass(frozen=True)
class GeometryDecodeResult:
    """Decoder output in a consistent arbitrary-scale frame."""

    poses: tuple
    pointmaps: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "poses", tuple(self.poses))
        object.__setattr__(self, "pointmaps", tuple(self.pointmaps))
        if len(self.poses) != len(self.pointmaps):
            raise ValueError(
                f"{len(self.poses)} poses vs {len(self.pointmaps)} pointmaps"
            )


def compute_backoff(
    attempt: int,
    base: float = 1.0,
    factor: float = 2.0,
    jitter: float = 0.2,
    cap: float = 30.0,
    rng: np.random.Generator | None = None,
) -> float:
    """Delay before retry number `attempt` (0-based): capped exponential,
    multiplicatively jittered when an rng is supplied, never above the cap."""
    delay = min(base * factor**attempt, cap)
    if rng is not None and jitter > 0.0:
        delay *= 1.0 + rng.uniform(-jitter, jitter)
    return min(delay, cap)


# ---------------------------------------------------------------------------
# wire codecs: PNG for images, raw little-endian float32 for depth/pointmaps

def encode_image(frame: np.ndarray) -> str:
    frame = np.asarray(frame)
    if frame.dtype != np.uint8 or frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError("expected an RGB uint8 image")
    buffer = io.BytesIO()
    Image.fromarray(frame).save(buffer, format="PNG")
    return base64.b64encode(buffer.getvalue()).decode("ascii")


def decode_image(data: str) -> np.ndarray:
    with Image.open(io.BytesIO(base64.b64decode(data))) as img:
        return np.asarray(img.convert("RGB"))


def encode_map(values: np.ndarray) -> dict:
    values = np.asarray(values, dtype=np.float32)
    if values.ndim == 2:
        channels = 1
    elif values.ndim == 3 and values.shape[2] == 3:
        channels = 3
    else:
        raise ValueError("expected a (h, w) or (h, w, 3) array")
    return {
        "height": values.shape[0],
        "width": values.shape[1],
        "channels": channels,
        "data": base64.b64encode(values.astype("<f4").tobytes()).decode("ascii"),
    }


def decode_map(record: dict) -> np.ndarray:
    height, width = int(record["height"]), int(record["width"])
    channels = int(record.get("channels", 1))
    flat = np.frombuffer(base64.b64decode(record["data"]), dtype="<f4")
    shape = (height, width) if channels == 1 else (height, width, channels)
    expected = height * width * channels
    if flat.size != expected:
        raise ValueError(f"map payload holds {flat.size} floats, expected {expected}")
    return flat.reshape(shape).copy()


# ---------------------------------------------------------------------------
# interfaces

class VideoGenClient(Protocol):
    def generate(self, *, prompt, image, seed, duration, fps) -> list: ...


class GeometryDecoderClient(Protocol):
    def decode(self, frames) -> GeometryDecodeResult: ...


class MetricDepthClient(Protocol):
    def estimate(self, frame) -> DepthMap: ...


class JudgeClient(Protocol):
    def rank(self, prompt: str, candidates) -> str: ...


# ---------------------------------------------------------------------------
# wire implementations

class _HttpClientBase:
    """Shared plumbing: auth from the environment, bounded concurrency,
    capped-exponential retries on transient failures."""

    def __init__(
        self,
        config: AdapterConfig,
        transport: httpx.BaseTransport | None = None,
        sleep=time.sleep,
        rng: np.random.Generator | None = None,
    ):
        self._config = config
        self._sleep = sleep
        self._rng = rng
        self._gate = threading.BoundedSemaphore(config.parallelism)
        self._client = httpx.Client(transport=transport, timeout=config.timeout)

    def _token(self) -> str:
        token = os.environ.get(self._config.auth_token_env)
        if not token:
            raise ConfigurationError(
                f"environment variable {self._config.auth_token_env} is not set"
            )
        return token

    def _post(self, path: str, payload: dict) -> dict:
        # token resolved per call, before any I/O, and held only on the stack
        headers = {"Authorization": f"Bearer {self._token()}"}
        url = self._config.endpoint.rstrip("/") + path
        attempts = 0
        while True:
            attempts += 1
            try:
                with self._gate:
                    response = self._client.post(url, json=payload, headers=headers)
            except httpx.RequestError as err:
                if attempts > self._config.max_retries:
                    raise TransportError(f"{url}: {err}", attempts) from err
                self._sleep(compute_backoff(attempts - 1, rng=self._rng))
                continue
            if response.status_code >= 500:
                if attempts > self._config.max_retries:
                    raise TransportError(
                        f"{url}: server error {response.status_code}", attempts
                    )
                self._sleep(compute_backoff(attempts - 1, rng=self._rng))
                continue
            if response.status_code >= 400:
                # client-side rejection (auth, bad payload): retrying cannot help
                raise TransportError(
                    f"{url}: rejected with status {response.status_code}", attempts
                )
            try:
                return response.json()
            except (json.JSONDecodeError, ValueError) as err:
                raise TransportError(f"{url}: malformed response body", attempts) from err


class HttpVideoGen(_HttpClientBase):
    def generate(self, *, prompt, image, seed, duration, fps) -> list:
        payload = {
            "prompt": prompt,
            "seed": int(seed),
            "duration": float(duration),
            "fps": float(fps),
            "image": encode_image(image) if image is not None else None,
        }
        body = self._post("/generate", payload)
        try:
            return [decode_image(f) for f in body["frames"]]
        except (KeyError, TypeError, ValueError) as err:
            raise TransportError(f"video response malformed: {err}", 1) from err


class HttpGeometryDecoder(_HttpClientBase):
    def decode(self, frames) -> GeometryDecodeResult:
        frames = list(frames)
        if len(frames) < 2:
            raise ValueError("geometry decoding needs at least two frames")
        payload = {"frames": [encode_image(f) for f in frames]}
        body = self._post("/decode", payload)
        try:
            poses = [
                Pose(position=np.array(p["position"]), rotation=np.array(p["rotation"]))
                for p in body["poses"]
            ]
            pointmaps = [PointMap(decode_map(m)) for m in body["pointmaps"]]
        except (KeyError, TypeError, ValueError) as err:
            raise TransportError(f"decode response malformed: {err}", 1) from err
        if len(poses) != len(frames) or len(pointmaps) != len(frames):
            raise TransportError(
                f"decode response length mismatch: {len(poses)} poses, "
                f"{len(pointmaps)} maps for {len(frames)} frames",
                1,
            )
        return GeometryDecodeResult(poses=poses, pointmaps=pointmaps)


class HttpMetricDepth(_HttpClientBase):
    def estimate(self, frame) -> DepthMap:
        payload = {"image": encode_image(frame)}
        body = self._post("/depth", payload)
        try:
            return DepthMap(decode_map(body["depth"]).astype(np.float64))
        except (KeyError, TypeError, ValueError) as err:
            raise TransportError(f"depth response malformed: {err}", 1) from err


class HttpJudge(_HttpClientBase):
    def rank(self, prompt: str, candidates) -> str:
        candidates = list(candidates)
        if not candidates:
            raise ValueError("ranking needs at least one candidate")
        payload = {
            "prompt": prompt,
            "candidates": [[encode_image(f) for f in frames] for frames in candidates],
        }
        body = self._post("/rank", payload)
        try:
            return body["text"]
        except (KeyError, TypeError) as err:
            raise TransportError(f"rank response malformed: {err}", 1) from err


# ---------------------------------------------------------------------------
# simulator-backed mocks
#
# Every mock is a pure function of (scene, arguments, seed); repeated calls
# are bit-identical. Frame identity travels in the corner telemetry stamp,
# never in hidden state.

def _require_rgb(frame) -> np.ndarray:
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError("expected an RGB image array")
    return frame


class MockVideoGen:
    """Renders the scene's ground-truth flight instead of calling a model."""

    def __init__(self, scene: SyntheticScene):
        self._scene = scene

    def generate(self, *, prompt, image, seed, duration, fps) -> list:
        del prompt, image  # content comes from the scene
        n_frames = int(round(float(duration) * float(fps))) + 1
        poses = poses_for_frames(self._scene, n_frames)
        return render_frames(self._scene, poses, seed=int(seed))


class MockGeometryDecoder:
    """Ground-truth poses with translations divided by the scene's scale,
    plus matching pointmaps; which pose a frame shows is read from its
    telemetry stamp."""

    def __init__(self, scene: SyntheticScene):
        self._scene = scene
        self._pose_cache: dict[int, list] = {}

    def _poses(self, count: int) -> list:
        if count not in self._pose_cache:
            self._pose_cache[count] = poses_for_frames(self._scene, count)
        return self._pose_cache[count]

    def decode(self, frames) -> GeometryDecodeResult:
        frames = [_require_rgb(f) for f in frames]
        if len(frames) < 2:
            raise ValueError("geometry decoding needs at least two frames")
        poses = []
        pointmaps = []
        for frame in frames:
            _, index, count = decode_stamp(frame)
            gt_pose = self._poses(count)[index]
            _, pointmap = render_ground_truth(self._scene, [gt_pose])[0]
            poses.append(
                Pose(
                    position=gt_pose.position / self._scene.gt_scale,
                    rotation=gt_pose.rotation,
                )
            )
            pointmaps.append(pointmap)
        return GeometryDecodeResult(poses=poses, pointmaps=pointmaps)


class MockMetricDepth:
    """Exact rendered depth, corrupted by the scene's noise spec (seeded per
    frame index, so estimates are reproducible)."""

    def __init__(self, scene: SyntheticScene):
        self._scene = scene
        self._pose_cache: dict[int, list] = {}

    def _poses(self, count: int) -> list:
        if count not in self._pose_cache:
            self._pose_cache[count] = poses_for_frames(self._scene, count)
        return self._pose_cache[count]

    def estimate(self, frame) -> DepthMap:
        frame = _require_rgb(frame)
        _, index, count = decode_stamp(frame)
        pose = self._poses(count)[index]
        depth, _ = render_ground_truth(self._scene, [pose])[0]
        noisy = apply_depth_noise(
            depth.depth, self._scene.noise, frame_index=index, gt_scale=self._scene.gt_scale
        )
        return DepthMap(noisy)


def _render_reply(entries: list) -> str:
    """entries: (JudgeScores, total) pairs in video-id order."""
    totals = [float(total) for _, total in entries]
    best = max(range(len(entries)), key=lambda i: (totals[i], -i)) + 1
    parsed = ParsedJudgeOutput(
        verdicts=tuple(scores for scores, _ in entries),
        totals=tuple(totals),
        best=best,
    )
    return format_judge_output(parsed)


class ScriptedJudge:
    """Replays a fixed table of verdicts, one round per rank() call.

    Each round is a list with one entry per candidate; an entry is either a
    JudgeScores (total recomputed from the weights) or a (JudgeScores, total)
    pair when a test wants to pin the reported total independently.
    """

    def __init__(self, rounds, weights: JudgeWeights | None = None):
        self._rounds = list(rounds)
        self._weights = weights or JudgeWeights()
        self._cursor = 0

    def rank(self, prompt: str, candidates) -> str:
        del prompt
        candidates = list(candidates)
        if not candidates:
            raise ValueError("ranking needs at least one candidate")
        if self._cursor >= len(self._rounds):
            raise RuntimeError("judge script exhausted")
        round_ = self._rounds[self._cursor]
        self._cursor += 1
        if len(round_) != len(candidates):
            raise ValueError(
                f"script round has {len(round_)} entries for {len(candidates)} candidates"
            )
        entries = []
        for entry in round_:
            if isinstance(entry, JudgeScores):
                entries.append((entry, reward(entry, self._weights)))
            else:
                scores, total = entry
                entries.append((scores, float(total)))
        return _render_reply(entries)


class StochasticJudge:
    """Pass with probability p per candidate; scores drawn inside the band
    the verdict implies. Deterministic for a given seed and call sequence."""

    def __init__(self, p: float, seed: int = 0, weights: JudgeWeights | None = None):
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self._p = p
        self._rng = np.random.default_rng(seed)
        self._weights = weights or JudgeWeights()

    def rank(self, prompt: str, candidates) -> str:
        del prompt
        candidates = list(candidates)
        if not candidates:
            raise ValueError("ranking needs at least one candidate")
        entries = []
        for _ in candidates:
            passed = self._rng.random() < self._p
            low, high = (3.0, 5.0) if passed else (0.0, 2.9)
            tp, as_, sc = (round(float(v), 2) for v in self._rng.uniform(low, high, 3))
            scores = JudgeScores(
                status=Verdict.PASS if passed else Verdict.FAIL,
                sc_tp=tp,
                sc_as=as_,
                sc_sc=sc,
                reason="pass" if passed else "fail",
            )
            entries.append((scores, reward(scores, self._weights)))
        return _render_reply(entries)


__all__ = [
    "AdapterConfig",
    "GeometryDecodeResult",
    "GeometryDecoderClient",
    "HttpGeometryDecoder",
    "HttpJudge",
    "HttpMetricDepth",
    "HttpVideoGen",
    "JudgeClient",
    "MetricDepthClient",
    "MockGeometryDecoder",
    "MockMetricDepth",
    "MockVideoGen",
    "ScriptedJudge",
    "StochasticJudge",
    "TransportError",
    "VideoGenClient",
    "compute_backoff",
    "decode_image",
    "decode_map",
    "encode_image",
    "encode_map",
]
