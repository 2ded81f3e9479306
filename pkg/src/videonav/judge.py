"""Candidate ranking: prompt construction, strict output parsing, selection.

The ranking backend sees every candidate for one mission in a single call and
answers in a fixed line grammar. We parse that grammar strictly: a reply that
drifts from it is a hard error carrying the offending line, never a silent
skip, because a misread verdict would send the drone down the wrong rollout.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field


class Verdict(enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"


@dataclass(frozen=True)
class JudgeWeights:
    """Weights of the scoring dimensions and the shared normalizer.

    Selection only compares rewards within one candidate set, so any uniform
    rescaling of (w_as, w_sc, w_tp, normalizer) leaves the argmax unchanged.
    """

    w_as: float = 0.8
    w_sc: float = 0.8
    w_tp: float = 1.4
    normalizer: float = 3.0

    def __post_init__(self) -> None:
        for name in ("w_as", "w_sc", "w_tp", "normalizer"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class JudgeScores:
    """One candidate's verdict: binary status plus three 0..5 dimension scores."""

    status: Verdict
    sc_tp: float
    sc_as: float
    sc_sc: float
    reason: str = ""

    def __post_init__(self) -> None:
        for name in ("sc_tp", "sc_as", "sc_sc"):
            value = getattr(self, name)
            if not 0.0 <= value <= 5.0:
                raise ValueError(f"{name}={value} outside [0, 5]")

    @property
    def flagged(self) -> bool:
        """High task-performance score on a failed candidate; worth a second look."""
        return self.status is Verdict.FAIL and self.sc_tp >= 3.0


def reward(verdict: JudgeScores, weights: JudgeWeights) -> float:
    """Weighted scalar used to rank candidates that passed verification."""
    return (
        weights.w_tp * verdict.sc_tp
        + weights.w_as * verdict.sc_as
        + weights.w_sc * verdict.sc_sc
    ) / weights.normalizer


def _fmt_weight(value: float) -> str:
    return f"{value:g}"


_PROMPT_TEMPLATE = """Role Definition: You are a drone video quality ranking arbitrator and task verification expert. You have {count_phrase}, all based on the same starting scene and instruction.

Core Task: Verify each video's success status individually, then evaluate them together to determine a weighted score and final rank.

Step 1: Task Verification (Individual Check, determines Status)
Analyze the logical structure of the instruction, then verify against the red lines.
Structure analysis:
- Type A (Single-Stage): one continuous action or final state (e.g. "Fly forward", "Hover").
- Type B (Multi-Stage): sequential logic (e.g. "First A then B").
Disqualification criteria (Status = Fail):
- Motion Failure: instruction implies movement but the view barely changes.
- Directional Deviation: movement opposite to the instruction.
- Target Miss: stopping far from the required destination.
- Trajectory Incompleteness: executing only a fraction of a required shape.
- Stage Omission (Type B): skipping intermediate steps or shortcutting.
- Sequence Error (Type B): performing stages in the wrong order.
- General Failures: hallucinated content, physics violations such as teleportation, or blur that obscures the scene.
Passing criteria (Status = Pass): violates no red line; Multi-Stage tasks must show the intent of every main stage.

Step 2: Ranking Evaluation (Relative Check)
Evaluate all videos on these dimensions:
1. Task Performance (TP), highest priority.
   Logical Fidelity: for Multi-Stage tasks prioritize stage coverage over polish; a blurry Pass outranks a shortcut Fail.
   Execution Quality: magnitude (significant beats minimal), target accuracy (correct beats incorrect), trajectory correctness (correct beats distorted).
2. Action Safety (AS): physics and stability; coherent motion beats teleportation, smooth control beats jitter.
3. Scene Consistency (SC): visual integrity; a stable environment beats hallucinations or clipping.

Step 3: Scoring Standards and Ranking
Assign each dimension a score from 0.0 to 5.0 using these levels; Fail status normally maps to the lower levels:
- Level 1 (Failure, 0.0 to 1.0): violates core logic; stationary or wrong direction. Status: Fail.
- Level 2 (Poor, 1.0 to 2.9): attempted but failed significantly. Status: Fail or Pass.
- Level 3 (Average, 3.0 to 3.9): completed but lacks polish; shaky path. Status: Pass.
- Level 4 (Good, 4.0 to 4.5): meets precise requirements; good trajectory. Status: Pass.
- Level 5 (Excellent, 4.8 to 5.0): flawless execution, natural physics. Status: Pass.

Final Calculation:
Total Score = (TP * {w_tp} + AS * {w_as} + SC * {w_sc}) / {normalizer}. Rank descending.

Input Information:
Current Instruction: {instruction}

Output Format (strictly follow, one line per video, then the final line):
Video 1: <score> X.X </score> | Status: [Pass/Fail] | TP: X.X | AS: X.X | SC: X.X | Reason: [Concise explanation]
...
Best: Video N
"""


def build_ranking_prompt(
    instruction: str, num_videos: int, weights: JudgeWeights | None = None
) -> str:
    if not instruction.strip():
        raise ValueError("instruction must be non-empty")
    if num_videos < 1:
        raise ValueError("num_videos must be at least 1")
    weights = weights or JudgeWeights()
    noun = "candidate video" if num_videos == 1 else "candidate videos"
    return _PROMPT_TEMPLATE.format(
        count_phrase=f"{num_videos} {noun}",
        w_tp=_fmt_weight(weights.w_tp),
        w_as=_fmt_weight(weights.w_as),
        w_sc=_fmt_weight(weights.w_sc),
        normalizer=_fmt_weight(weights.normalizer),
        instruction=instruction.strip(),
    )


class JudgeParseError(ValueError):
    """Raised when a ranking reply deviates from the output grammar."""

    def __init__(self, message: str, line: str | None = None, line_no: int | None = None):
        self.line = line
        self.line_no = line_no
        if line is not None:
            where = f" (line {line_no})" if line_no is not None else ""
            message = f"{message}{where}: {line!r}"
        super().__init__(message)


@dataclass(frozen=True)
class ParsedJudgeOutput:
    """Verdicts indexed by video id (entry i belongs to video i+1)."""

    verdicts: tuple[JudgeScores, ...]
    totals: tuple[float, ...]
    best: int


_NUM = r"(\d+(?:\.\d+)?)"
_VIDEO_RE = re.compile(
    rf"^Video\s+(\d+)\s*:\s*<score>\s*{_NUM}\s*</score>\s*\|\s*"
    rf"Status:\s*\[?\s*(Pass|Fail)\s*\]?\s*\|\s*"
    rf"TP:\s*{_NUM}\s*\|\s*AS:\s*{_NUM}\s*\|\s*SC:\s*{_NUM}\s*\|\s*"
    rf"Reason:\s*(.*?)\s*$"
)
_BEST_RE = re.compile(r"^Best:\s*Video\s+(\d+)\s*$")


def parse_judge_output(text: str, num_videos: int) -> ParsedJudgeOutput:
    """Parse a ranking reply; every video 1..num_videos must appear exactly once."""
    if num_videos < 1:
        raise ValueError("num_videos must be at least 1")
    rows: dict[int, tuple[JudgeScores, float]] = {}
    best: int | None = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        best_match = _BEST_RE.match(line)
        if best_match:
            if best is not None:
                raise JudgeParseError("duplicate Best line", line, line_no)
            best = int(best_match.group(1))
            continue
        match = _VIDEO_RE.match(line)
        if not match:
            raise JudgeParseError("line does not match the output grammar", line, line_no)
        video_id = int(match.group(1))
        if not 1 <= video_id <= num_videos:
            raise JudgeParseError(f"video id {video_id} outside 1..{num_videos}", line, line_no)
        if video_id in rows:
            raise JudgeParseError(f"duplicate entry for video {video_id}", line, line_no)
        total, tp, as_, sc = (float(match.group(i)) for i in (2, 4, 5, 6))
        for label, value in (("total", total), ("TP", tp), ("AS", as_), ("SC", sc)):
            if not 0.0 <= value <= 5.0:
                raise JudgeParseError(f"{label} score {value} outside [0, 5]", line, line_no)
        verdict = JudgeScores(
            status=Verdict(match.group(3)),
            sc_tp=tp,
            sc_as=as_,
            sc_sc=sc,
            reason=match.group(7),
        )
        rows[video_id] = (verdict, total)
    missing = [i for i in range(1, num_videos + 1) if i not in rows]
    if missing:
        raise JudgeParseError(f"missing entry for Video {missing[0]}")
    if best is None:
        raise JudgeParseError("missing final Best line")
    if best not in rows:
        raise JudgeParseError(f"Best references Video {best}, which has no entry")
    ordered = [rows[i] for i in range(1, num_videos + 1)]
    return ParsedJudgeOutput(
        verdicts=tuple(v for v, _ in ordered),
        totals=tuple(t for _, t in ordered),
        best=best,
    )


def format_judge_output(parsed: ParsedJudgeOutput) -> str:
    """Render verdicts back into the reply grammar; inverse of the parser."""
    lines = []
    for i, (verdict, total) in enumerate(zip(parsed.verdicts, parsed.totals), start=1):
        lines.append(
            f"Video {i}: <score> {total!r} </score> | Status: {verdict.status.value} | "
            f"TP: {verdict.sc_tp!r} | AS: {verdict.sc_as!r} | SC: {verdict.sc_sc!r} | "
            f"Reason: {verdict.reason}"
        )
    lines.append(f"Best: Video {parsed.best}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of selecting over one candidate set.

    When no candidate passed verification there is nothing safe to execute;
    escalated is set and the verdicts ride along for a supervisor to review.
    """

    best_id: int | None
    best_reward: float | None
    escalated: bool
    verdicts: tuple[JudgeScores, ...] = field(default=())


def select_best(verdicts: list[JudgeScores], weights: JudgeWeights) -> SelectionOutcome:
    """Pick the highest-reward passing candidate; ties go to the lowest id."""
    if not verdicts:
        raise ValueError("no verdicts to select from")
    best_id = None
    best_reward = None
    for i, verdict in enumerate(verdicts, start=1):
        if verdict.status is not Verdict.PASS:
            continue
        r = reward(verdict, weights)
        if best_reward is None or r > best_reward:
            best_id, best_reward = i, r
    if best_id is None:
        return SelectionOutcome(None, None, True, tuple(verdicts))
    return SelectionOutcome(best_id, best_reward, False, tuple(verdicts))
