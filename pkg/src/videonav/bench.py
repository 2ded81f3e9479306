"""Evaluation protocol: the fixed 15-task suite, per-trial score ingestion,
five-trial aggregation, and report emission.

Scores are ingested, never produced here: trials are graded externally
(human pilots in the reference protocol) and arrive as a delimited text
file. This module owns only the suite registry and the aggregation math.
"""

from __future__ import annotations

import csv
import enum
import json
import warnings
from dataclasses import dataclass
from pathlib import Path


class Category(enum.Enum):
    OBJECT_NAVIGATION = "ObjectNavigation"
    PRECISE_NAVIGATION = "PreciseNavigation"
    SPATIAL_GROUNDING = "SpatialGrounding"
    LANGUAGE_CONTROL = "LanguageControl"
    SCENE_REASONING = "SceneReasoning"


@dataclass(frozen=True)
class TaskSpec:
    category: Category
    name: str
    instruction: str

    def __post_init__(self) -> None:
        if not self.name.strip():
            raise ValueError("task name must be non-empty")
        if not self.instruction.strip():
            raise ValueError("task instruction must be non-empty")


_SUITE = (
    TaskSpec(Category.OBJECT_NAVIGATION, "Find Chair",
             "Navigate to the black chair and stop directly in front."),
    TaskSpec(Category.OBJECT_NAVIGATION, "Find Column",
             "Navigate to the white round column and stop directly in front."),
    TaskSpec(Category.OBJECT_NAVIGATION, "Find Tree",
             "Navigate to the green tree and stop directly in front."),
    TaskSpec(Category.PRECISE_NAVIGATION, "Above Cabinet",
             "Fly forward and upward to stop 0.5m above the cabinet center."),
    TaskSpec(Category.PRECISE_NAVIGATION, "Behind Rock",
             "Orbit the large rock to its rear while keeping gaze on the target."),
    TaskSpec(Category.PRECISE_NAVIGATION, "Left of Tree",
             "Move left past the tree until it is completely out of the frame."),
    TaskSpec(Category.SPATIAL_GROUNDING, "Circle Orbit",
             "Perform a 180-degree orbit around the tree."),
    TaskSpec(Category.SPATIAL_GROUNDING, "Gate Traversal",
             "Pass through the center of the circular hoop to the space beyond."),
    TaskSpec(Category.SPATIAL_GROUNDING, "Midline Stop",
             "Advance and stop on the line connecting the pillar and the tree."),
    TaskSpec(Category.LANGUAGE_CONTROL, "Timed Stop",
             "Accelerate for 3s toward the tree, then hover stationary for 2s."),
    TaskSpec(Category.LANGUAGE_CONTROL, "Round Trip",
             "Approach the plants and retrace the path back to the starting position."),
    TaskSpec(Category.LANGUAGE_CONTROL, "Turn and Advance",
             "Rotate 45° to the right and fly straight forward across the room."),
    TaskSpec(Category.SCENE_REASONING, "Find Kitchen",
             "Identify scene features and navigate to the room suitable for cooking."),
    TaskSpec(Category.SCENE_REASONING, "Find Exit",
             "Observe environment markers to locate and navigate toward the exit."),
    TaskSpec(Category.SCENE_REASONING, "Find Bathroom",
             "Identify scene features and navigate to the room for showering."),
)

METRICS = ("vc", "df", "tc")


def load_suite(path: str | Path | None = None) -> list[TaskSpec]:
    """The built-in 15-task registry, or a custom suite from a JSON file."""
    if path is None:
        return list(_SUITE)
    records = json.loads(Path(path).read_text())
    suite = [
        TaskSpec(
            category=Category(r["category"]), name=r["name"], instruction=r["instruction"]
        )
        for r in records
    ]
    if not suite:
        raise ValueError("suite file contains no tasks")
    return suite


@dataclass(frozen=True)
class TrialScore:
    model: str
    task: str
    trial: int
    vc: float
    df: float
    tc: float

    def __post_init__(self) -> None:
        if not self.model.strip():
            raise ValueError("model label must be non-empty")
        if self.trial < 1:
            raise ValueError("trial indices are 1-based")
        for metric in METRICS:
            value = getattr(self, metric)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{metric}={value} outside [0, 1]")


_HEADER = ["model", "task", "trial", "vc", "df", "tc"]


def load_scores(path: str | Path) -> list[TrialScore]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("score file is empty") from None
        if [h.strip() for h in header] != _HEADER:
            raise ValueError(f"expected header {','.join(_HEADER)!r}, got {','.join(header)!r}")
        scores = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 6:
                raise ValueError(f"line {line_no}: expected 6 fields, got {len(row)}")
            try:
                scores.append(
                    TrialScore(
                        model=row[0].strip(),
                        task=row[1].strip(),
                        trial=int(row[2]),
                        vc=float(row[3]),
                        df=float(row[4]),
                        tc=float(row[5]),
                    )
                )
            except ValueError as err:
                raise ValueError(f"line {line_no}: {err}") from err
    return scores


def save_scores(path: str | Path, scores) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_HEADER)
        for s in scores:
            writer.writerow([s.model, s.task, s.trial, s.vc, s.df, s.tc])


@dataclass
class ModelAggregate:
    model: str
    task_means: dict       # task name -> {metric: mean}
    category_means: dict   # category value -> {metric: mean}
    average: dict          # metric -> mean of category means
    incomplete: list       # task names excluded for missing trials

    def to_record(self) -> dict:
        return {
            "model": self.model,
            "task_means": self.task_means,
            "category_means": self.category_means,
            "average": self.average,
            "incomplete": list(self.incomplete),
        }


def aggregate(scores, suite=None, expected_trials: int = 5) -> dict:
    """Per-task trial means, per-category means, and the overall average
    (mean of the five category values) for each model label.

    A (model, task) missing any of the expected trials is reported as
    incomplete and excluded from its category's mean, with a warning.
    """
    suite = list(suite) if suite is not None else load_suite()
    by_name = {t.name: t for t in suite}
    by_model: dict[str, dict[str, dict[int, TrialScore]]] = {}
    for score in scores:
        if score.task not in by_name:
            raise ValueError(f"score references unknown task {score.task!r}")
        if score.trial > expected_trials:
            raise ValueError(
                f"trial {score.trial} exceeds expected count {expected_trials}"
            )
        trials = by_model.setdefault(score.model, {}).setdefault(score.task, {})
        if score.trial in trials:
            raise ValueError(
                f"duplicate trial {score.trial} for ({score.model!r}, {score.task!r})"
            )
        trials[score.trial] = score

    result = {}
    for model, tasks in by_model.items():
        task_means = {}
        incomplete = []
        for name, trials in tasks.items():
            if len(trials) < expected_trials:
                incomplete.append(name)
                warnings.warn(
                    f"{model}/{name}: {len(trials)} of {expected_trials} trials; "
                    "excluded from aggregates",
                    stacklevel=2,
                )
                continue
            task_means[name] = {
                metric: sum(getattr(s, metric) for s in trials.values()) / expected_trials
                for metric in METRICS
            }
        category_means = {}
        for category in Category:
            names = [
                t.name for t in suite if t.category is category and t.name in task_means
            ]
            if names:
                category_means[category.value] = {
                    metric: sum(task_means[n][metric] for n in names) / len(names)
                    for metric in METRICS
                }
        average = {}
        if category_means:
            average = {
                metric: sum(v[metric] for v in category_means.values()) / len(category_means)
                for metric in METRICS
            }
        result[model] = ModelAggregate(
            model=model,
            task_means=task_means,
            category_means=category_means,
            average=average,
            incomplete=sorted(incomplete),
        )
    return result


_METRIC_LABELS = {"vc": "VC", "df": "DF", "tc": "TC"}


def render_report(aggregates: dict) -> str:
    """Plain-text table: one block per category plus the Average block,
    three metric rows each, one column per model. Display rounds to two
    decimals; raw values live in the JSON record."""
    models = list(aggregates)
    if not models:
        return "no scores ingested\n"
    categories = [c.value for c in Category]
    label_width = max(len(c) for c in categories + ["Average"]) + 2
    col_width = max([len(m) for m in models] + [6]) + 2
    lines = []
    header = " " * (label_width + 8) + "".join(f"{m:>{col_width}}" for m in models)
    lines.append(header)
    for category in categories + ["Average"]:
        for metric in METRICS:
            cells = []
            for model in models:
                agg = aggregates[model]
                source = agg.average if category == "Average" else agg.category_means.get(category)
                value = source.get(metric) if source else None
                cells.append("-" if value is None else f"{value:.2f}")
            label = category if metric == "vc" else ""
            row = f"{label:<{label_width}}{_METRIC_LABELS[metric]:<8}"
            row += "".join(f"{c:>{col_width}}" for c in cells)
            lines.append(row)
    incomplete = {m: aggregates[m].incomplete for m in models if aggregates[m].incomplete}
    for model, names in incomplete.items():
        lines.append(f"incomplete (excluded): {model}: {', '.join(names)}")
    return "\n".join(lines) + "\n"


def emit_report(aggregates: dict, out_dir: str | Path) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    text_path = out_dir / "report.txt"
    json_path = out_dir / "report.json"
    text_path.write_text(render_report(aggregates))
    json_path.write_text(
        json.dumps({m: a.to_record() for m, a in aggregates.items()}, indent=2) + "\n"
    )
    return text_path, json_path


__all__ = [
    "Category",
    "METRICS",
    "ModelAggregate",
    "TaskSpec",
    "TrialScore",
    "aggregate",
    "emit_report",
    "load_scores",
    "load_suite",
    "render_report",
    "save_scores",
]
