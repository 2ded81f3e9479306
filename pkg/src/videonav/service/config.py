"""Service configuration: one JSON file covering sampling, judging, scale
recovery, planning, and adapter wiring.

Secrets never appear here. Wire adapter sections name the environment
variable that holds the token; the value is read at call time by the
adapter layer and is never written to disk.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..adapters import (
    AdapterConfig,
    HttpGeometryDecoder,
    HttpJudge,
    HttpMetricDepth,
    HttpVideoGen,
    MockGeometryDecoder,
    MockMetricDepth,
    MockVideoGen,
    ScriptedJudge,
    StochasticJudge,
)
from ..candidates import ConfigurationError, PromptLevel
from ..judge import JudgeScores, JudgeWeights, Verdict
from ..scale import ScaleConfig
from ..simulator import SyntheticScene, load_scene


@dataclass(frozen=True)
class GenerationSettings:
    k: int = 5
    seed: int = 0
    duration: float = 5.0
    fps: float = 16.0
    frame_stride: int = 8
    prompt_level: str = "Simple"
    max_resamples: int = 3

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigurationError("generation.k must be at least 1")
        if not self.duration > 0 or not self.fps > 0:
            raise ConfigurationError("generation duration and fps must be positive")
        if self.frame_stride < 1:
            raise ConfigurationError("generation.frame_stride must be at least 1")
        if self.max_resamples < 0:
            raise ConfigurationError("generation.max_resamples must be non-negative")
        PromptLevel(self.prompt_level)  # raises on unknown level


@dataclass(frozen=True)
class JudgeSettings:
    w_tp: float = 1.4
    w_as: float = 0.8
    w_sc: float = 0.8
    normalizer: float = 3.0
    parse_retries: int = 1

    def __post_init__(self) -> None:
        if self.parse_retries < 0:
            raise ConfigurationError("judge.parse_retries must be non-negative")

    def weights(self) -> JudgeWeights:
        return JudgeWeights(
            w_tp=self.w_tp, w_as=self.w_as, w_sc=self.w_sc, normalizer=self.normalizer
        )


@dataclass(frozen=True)
class ScaleSettings:
    tau_min: float = 0.5
    tau_max: float = 30.0
    min_valid_pixels: int = 100
    pixel_stride: int = 4

    def to_scale_config(self) -> ScaleConfig:
        return ScaleConfig(
            tau_min=self.tau_min,
            tau_max=self.tau_max,
            min_valid_pixels=self.min_valid_pixels,
            pixel_stride=self.pixel_stride,
        )


@dataclass(frozen=True)
class PlannerSettings:
    clearance: float = 0.3
    switch_threshold: float = 0.5
    dt: float = 0.05
    max_yaw_rate: float = 1.5
    vmin: float = 0.2
    amin: float = 0.5
    grid_resolution: float = 0.25
    grid_padding: float = 1.0
    tracking_tau: float = 0.2

    def __post_init__(self) -> None:
        for name in ("clearance", "switch_threshold", "dt", "max_yaw_rate",
                     "vmin", "amin", "grid_resolution", "grid_padding", "tracking_tau"):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"planner.{name} must be positive")


@dataclass(frozen=True)
class WireSettings:
    endpoint: str = ""
    auth_token_env: str = ""
    timeout: float = 180.0
    max_retries: int = 3
    parallelism: int = 4

    def to_adapter_config(self) -> AdapterConfig:
        return AdapterConfig(
            endpoint=self.endpoint,
            auth_token_env=self.auth_token_env,
            timeout=self.timeout,
            max_retries=self.max_retries,
            parallelism=self.parallelism,
        )


@dataclass(frozen=True)
class MockJudgeSettings:
    kind: str = "stochastic"  # "stochastic" | "scripted"
    p: float = 1.0
    seed: int = 0
    # scripted rounds: [[[status, tp, as, sc, reason], ...], ...]
    script: tuple = ()

    def __post_init__(self) -> None:
        if self.kind not in ("stochastic", "scripted"):
            raise ConfigurationError(f"unknown judge mock kind {self.kind!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigurationError("judge mock p must lie in [0, 1]")
        object.__setattr__(
            self, "script", tuple(tuple(tuple(e) for e in r) for r in self.script)
        )


@dataclass(frozen=True)
class AdapterSettings:
    mode: str = "mock"  # "mock" | "http"
    mock_scene: str | None = None
    judge_mock: MockJudgeSettings = field(default_factory=MockJudgeSettings)
    video: WireSettings = field(default_factory=WireSettings)
    geometry: WireSettings = field(default_factory=WireSettings)
    depth: WireSettings = field(default_factory=WireSettings)
    judge: WireSettings = field(default_factory=WireSettings)

    def __post_init__(self) -> None:
        if self.mode not in ("mock", "http"):
            raise ConfigurationError(f"unknown adapter mode {self.mode!r}")


@dataclass(frozen=True)
class ServiceConfig:
    generation: GenerationSettings = field(default_factory=GenerationSettings)
    judge: JudgeSettings = field(default_factory=JudgeSettings)
    scale: ScaleSettings = field(default_factory=ScaleSettings)
    planner: PlannerSettings = field(default_factory=PlannerSettings)
    adapters: AdapterSettings = field(default_factory=AdapterSettings)
    allow_override: bool = False

    def to_record(self) -> dict:
        return dataclasses.asdict(self)


_SECTIONS = {
    "generation": GenerationSettings,
    "judge": JudgeSettings,
    "scale": ScaleSettings,
    "planner": PlannerSettings,
}


def config_from_record(record: dict) -> ServiceConfig:
    known = {"generation", "judge", "scale", "planner", "adapters", "allow_override"}
    unknown = set(record) - known
    if unknown:
        raise ConfigurationError(f"unknown config section(s): {sorted(unknown)}")
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in record:
            kwargs[name] = _build(cls, record[name], name)
    if "adapters" in record:
        section = dict(record["adapters"])
        for wire_name in ("video", "geometry", "depth", "judge"):
            if wire_name in section:
                section[wire_name] = _build(WireSettings, section[wire_name], f"adapters.{wire_name}")
        if "judge_mock" in section:
            section["judge_mock"] = _build(
                MockJudgeSettings, section["judge_mock"], "adapters.judge_mock"
            )
        kwargs["adapters"] = _build(AdapterSettings, section, "adapters")
    if "allow_override" in record:
        kwargs["allow_override"] = bool(record["allow_override"])
    return ServiceConfig(**kwargs)


def _build(cls, record, section: str):
    if not isinstance(record, dict):
        raise ConfigurationError(f"config section {section} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(record) - names
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {section}: {sorted(unknown)}")
    try:
        return cls(**record)
    except TypeError as err:
        raise ConfigurationError(f"bad {section} section: {err}") from err


def load_config(path: str | Path | None) -> ServiceConfig:
    if path is None:
        return ServiceConfig()
    text = Path(path).read_text()
    try:
        record = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigurationError(f"config is not valid JSON: {err}") from err
    return config_from_record(record)


def save_config(path: str | Path, config: ServiceConfig) -> None:
    Path(path).write_text(json.dumps(config.to_record(), indent=2) + "\n")


def resolve_scene(spec: str | Path | None) -> SyntheticScene | None:
    """Scene reference: None, the packaged "demo" scene, or a file path."""
    if spec is None:
        return None
    if str(spec) == "demo":
        ref = resources.files("videonav").joinpath("data/demo_scene.json")
        with resources.as_file(ref) as path:
            return load_scene(path)
    return load_scene(spec)


@dataclass
class ClientBundle:
    """The four capability clients plus the scene they are backed by
    (None in wire mode: no synthetic ground truth exists)."""

    video: object
    geometry: object
    depth: object
    judge: object
    scene: SyntheticScene | None


def _scripted_rounds(settings: MockJudgeSettings) -> list:
    rounds = []
    for round_ in settings.script:
        entries = []
        for entry in round_:
            status, tp, as_, sc = entry[0], float(entry[1]), float(entry[2]), float(entry[3])
            reason = str(entry[4]) if len(entry) > 4 else ""
            entries.append(
                JudgeScores(
                    status=Verdict(status), sc_tp=tp, sc_as=as_, sc_sc=sc, reason=reason
                )
            )
        rounds.append(entries)
    return rounds


def build_clients(config: ServiceConfig, scene_override: str | Path | None = None) -> ClientBundle:
    adapters = config.adapters
    scene = resolve_scene(scene_override or adapters.mock_scene)
    if adapters.mode == "mock":
        if scene is None:
            raise ConfigurationError("mock adapter mode requires a scene (mock_scene)")
        mock_judge = adapters.judge_mock
        if mock_judge.kind == "scripted":
            judge = ScriptedJudge(_scripted_rounds(mock_judge), weights=config.judge.weights())
        else:
            judge = StochasticJudge(
                p=mock_judge.p, seed=mock_judge.seed, weights=config.judge.weights()
            )
        return ClientBundle(
            video=MockVideoGen(scene),
            geometry=MockGeometryDecoder(scene),
            depth=MockMetricDepth(scene),
            judge=judge,
            scene=scene,
        )
    return ClientBundle(
        video=HttpVideoGen(adapters.video.to_adapter_config()),
        geometry=HttpGeometryDecoder(adapters.geometry.to_adapter_config()),
        depth=HttpMetricDepth(adapters.depth.to_adapter_config()),
        judge=HttpJudge(adapters.judge.to_adapter_config()),
        scene=scene,
    )
