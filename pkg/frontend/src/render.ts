/** HTML-string renderers. Each function maps service data to markup and
 * nothing else; interactivity is wired up by main.ts through data-action
 * attributes. Keeping these as string builders makes every rendering rule
 * assertable in a plain unit test.
 */

import {
  awaitingDecision,
  formatAge,
  formatReward,
  formatScore,
  frameStripIndices,
  isTerminal,
  stateClass,
  type TrajectoryPoint,
  topDownPlot,
} from "./model";
import type { CandidateView, MissionSummary, MissionView } from "./types";

export function escapeHtml(value: string): string {
  return value.replace(/[&<>"']/g, (ch) => {
    switch (ch) {
      case "&":
        return "&amp;";
      case "<":
        return "&lt;";
      case ">":
        return "&gt;";
      case '"':
        return "&quot;";
      default:
        return "&#39;";
    }
  });
}

export function renderBanner(error: string | null, stale: boolean): string {
  const parts: string[] = [];
  if (error !== null) {
    parts.push(
      `<div class="banner banner-error" role="alert">` +
        `<span>service error: ${escapeHtml(error)}</span>` +
        `<button type="button" data-action="retry">Retry</button>` +
        `</div>`,
    );
  }
  if (stale) {
    parts.push(
      `<div class="banner banner-stale">showing the last fetched state; polling has fallen behind</div>`,
    );
  }
  return parts.join("");
}

export function renderMissionRows(
  rows: readonly MissionSummary[],
  selectedId: string | null,
  nowMs: number,
): string {
  if (rows.length === 0) {
    return `<div class="empty-state">No missions yet. Create one above, or start one with the CLI.</div>`;
  }
  return rows
    .map((row) => {
      const classes = ["mission-row", stateClass(row.state)];
      if (row.id === selectedId) classes.push("selected");
      const resamples = row.resample_count > 0 ? `<span class="meta">resampled x${row.resample_count}</span>` : "";
      return (
        `<button type="button" class="${classes.join(" ")}" data-mission-id="${escapeHtml(row.id)}">` +
        `<span class="badge ${stateClass(row.state)}">${row.state}</span>` +
        `<span class="instruction">${escapeHtml(row.instruction)}</span>` +
        `<span class="meta">${escapeHtml(row.id.slice(0, 8))}</span>` +
        `<span class="meta">round ${row.round}</span>` +
        resamples +
        `<span class="meta">${formatAge(row.created_at, nowMs)}</span>` +
        `</button>`
      );
    })
    .join("");
}

function renderFrameStrip(view: MissionView, candidate: CandidateView, baseUrl: string): string {
  const indices = frameStripIndices(candidate.frame_count);
  if (indices.length === 0) {
    // nothing persisted for this candidate (generation failed): placeholder tile
    return `<div class="frame-strip"><div class="frame placeholder">no frames</div></div>`;
  }
  const frames = indices
    .map(
      (i) =>
        `<img class="frame" alt="candidate ${candidate.id} frame ${i}" loading="lazy" ` +
        `src="${baseUrl}/missions/${escapeHtml(view.id)}/candidates/${candidate.id}/frames/${i}">`,
    )
    .join("");
  return `<div class="frame-strip">${frames}</div>`;
}

function renderCandidate(
  view: MissionView,
  candidate: CandidateView,
  baseUrl: string,
  decisionPending: boolean,
): string {
  const verdict = candidate.judge_status;
  const classes = ["candidate"];
  classes.push(verdict !== null ? verdict.toLowerCase() : "unjudged");
  const isSelected = view.selected_candidate === candidate.id;
  if (isSelected) classes.push("chosen");

  const chips: string[] = [];
  if (verdict !== null) {
    chips.push(`<span class="chip verdict-${verdict.toLowerCase()}">${verdict}</span>`);
  } else if (candidate.generation_status === "Fail") {
    chips.push(`<span class="chip verdict-fail">generation failed</span>`);
  } else {
    chips.push(`<span class="chip verdict-none">not judged</span>`);
  }
  if (isSelected) chips.push(`<span class="chip chosen-chip">Selected</span>`);

  const scores = candidate.scores;
  const scoreRow =
    `<div class="scores">` +
    `<span class="reward">R ${formatReward(candidate.reward)}</span>` +
    `<span>tp ${formatScore(scores ? scores.tp : null)}</span>` +
    `<span>as ${formatScore(scores ? scores.as : null)}</span>` +
    `<span>sc ${formatScore(scores ? scores.sc : null)}</span>` +
    `</div>`;

  const reason = candidate.reason
    ? `<div class="reason">${escapeHtml(candidate.reason)}</div>`
    : "";
  const errorNote = candidate.error_note
    ? `<div class="reason">${escapeHtml(candidate.error_note)}</div>`
    : "";

  // Override approval is offered tile by tile so the supervisor picks a
  // concrete candidate, and only while the mission is actually waiting.
  const approve =
    awaitingDecision(view) && view.allow_override
      ? `<button type="button" data-action="approve" data-candidate-id="${candidate.id}"` +
        `${decisionPending ? " disabled" : ""}>Approve this candidate</button>`
      : "";

  return (
    `<article class="${classes.join(" ")}" data-candidate="${candidate.id}">` +
    `<header><span class="candidate-name">Video ${candidate.id}</span>${chips.join("")}</header>` +
    renderFrameStrip(view, candidate, baseUrl) +
    scoreRow +
    reason +
    errorNote +
    approve +
    `</article>`
  );
}

export function renderDecisionPanel(
  view: MissionView,
  decisionPending: boolean,
  decisionNote: string | null,
): string {
  if (!awaitingDecision(view)) return "";
  const disabled = decisionPending ? " disabled" : "";
  const note = decisionNote ? `<div class="decision-note">${escapeHtml(decisionNote)}</div>` : "";
  const budget = view.max_resamples - view.resample_count;
  return (
    `<section class="decision-panel">` +
    `<h3>Supervisor decision required</h3>` +
    `<p>Every candidate failed the judge. Resample a fresh batch (${budget} left) or terminate the mission.</p>` +
    `<div class="decision-buttons">` +
    `<button type="button" class="primary" data-action="resample"${disabled}>Resample</button>` +
    `<button type="button" class="danger" data-action="terminate"${disabled}>Terminate</button>` +
    `</div>` +
    note +
    `</section>`
  );
}

function renderTrajectory(view: MissionView, points: TrajectoryPoint[] | null, baseUrl: string): string {
  const summary = view.trajectory;
  if (!summary) return "";
  const plot = points ? topDownPlot(points, 280, 280) : null;
  const svg = plot
    ? `<svg class="plot" viewBox="0 0 280 280" aria-label="top-down waypoint plot">` +
      `<polyline points="${plot.outline}" fill="none"></polyline>` +
      `<circle class="start" cx="${plot.start[0]}" cy="${plot.start[1]}" r="5"></circle>` +
      `<circle class="end" cx="${plot.end[0]}" cy="${plot.end[1]}" r="5"></circle>` +
      `</svg>`
    : "";
  return (
    `<section class="trajectory">` +
    `<h3>Trajectory</h3>` +
    `<div class="meta-row">` +
    `<span>duration ${summary.duration.toFixed(2)} s</span>` +
    `<span>vmax ${summary.vmax.toFixed(2)} m/s</span>` +
    `<span>amax ${summary.amax.toFixed(2)} m/s&#178;</span>` +
    `<a href="${baseUrl}${escapeHtml(summary.url)}" target="_blank" rel="noopener">raw</a>` +
    `</div>` +
    svg +
    `</section>`
  );
}

function renderOutcome(view: MissionView): string {
  const result = view.result;
  if (!result) return "";
  const collision = result.is_collision_free
    ? `<span class="chip verdict-pass">collision free</span>`
    : `<span class="chip verdict-fail">collision</span>`;
  const done = result.done
    ? `<span class="chip verdict-pass">all waypoints reached</span>`
    : `<span class="chip verdict-fail">incomplete</span>`;
  return (
    `<section class="outcome">` +
    `<h3>Outcome</h3>` +
    `<div class="meta-row">${done}${collision}` +
    `<span>tracking rmse ${result.tracking_rmse.toFixed(3)} m</span>` +
    `<span>path ${result.path_length.toFixed(2)} m</span>` +
    `<span>scale ${result.scale.toFixed(4)}</span>` +
    `</div>` +
    `</section>`
  );
}

export interface DetailOptions {
  baseUrl: string;
  decisionPending: boolean;
  decisionNote: string | null;
  trajectory: TrajectoryPoint[] | null;
  nowMs: number;
}

export function renderMissionDetail(view: MissionView, options: DetailOptions): string {
  const { baseUrl, decisionPending, decisionNote, trajectory, nowMs } = options;

  const advance =
    !isTerminal(view.state) && !awaitingDecision(view)
      ? `<button type="button" data-action="advance"${decisionPending ? " disabled" : ""}>Advance</button>`
      : "";

  const abort = view.abort_cause
    ? `<div class="abort-cause">aborted: ${escapeHtml(view.abort_cause)}</div>`
    : "";

  const candidates =
    view.candidates.length > 0
      ? `<section class="gallery">` +
        `<h3>Candidates (round ${view.round})</h3>` +
        `<div class="tiles">` +
        view.candidates.map((c) => renderCandidate(view, c, baseUrl, decisionPending)).join("") +
        `</div>` +
        `</section>`
      : "";

  return (
    `<header class="detail-header">` +
    `<div class="title-row">` +
    `<span class="badge ${stateClass(view.state)}">${view.state}</span>` +
    `<h2>${escapeHtml(view.instruction)}</h2>` +
    `</div>` +
    `<div class="meta-row">` +
    `<span>${escapeHtml(view.id)}</span>` +
    `<span>created ${formatAge(view.created_at, nowMs)}</span>` +
    `<span>round ${view.round}</span>` +
    `<span>resamples ${view.resample_count}/${view.max_resamples}</span>` +
    advance +
    `</div>` +
    `</header>` +
    abort +
    renderDecisionPanel(view, decisionPending, decisionNote) +
    candidates +
    renderTrajectory(view, trajectory, baseUrl) +
    renderOutcome(view)
  );
}

export function renderDetailPlaceholder(): string {
  return `<div class="empty-state">Select a mission to review its candidates.</div>`;
}
