import { describe, expect, it } from "vitest";

import type { DetailOptions } from "../src/render";
import {
  escapeHtml,
  renderBanner,
  renderDecisionPanel,
  renderMissionDetail,
  renderMissionRows,
} from "../src/render";
import { candidateFixture, escalatedFixture, summaryFixture, viewFixture } from "./fixtures";

const NOW = 1_755_300_060_000; // 60 s after the fixture missions were created

function detailOptions(over: Partial<DetailOptions> = {}): DetailOptions {
  return {
    baseUrl: "http://svc:8000",
    decisionPending: false,
    decisionNote: null,
    trajectory: null,
    nowMs: NOW,
    ...over,
  };
}

describe("escaping", () => {
  it("neutralizes markup in service strings", () => {
    expect(escapeHtml(`<script>alert("x")</script>`)).toBe(
      "&lt;script&gt;alert(&quot;x&quot;)&lt;/script&gt;",
    );
  });
});

describe("mission list", () => {
  it("renders an empty-state panel when the store is empty", () => {
    expect(renderMissionRows([], null, NOW)).toContain("empty-state");
  });

  it("renders one row per mission with its state badge", () => {
    const rows = [
      summaryFixture({ id: "m1", state: "Done" }),
      summaryFixture({ id: "m2", state: "Generating" }),
      summaryFixture({ id: "m3", state: "AwaitingSupervisor" }),
    ];
    const html = renderMissionRows(rows, "m2", NOW);
    expect(html.match(/data-mission-id=/g)).toHaveLength(3);
    expect(html).toContain(">Done<");
    expect(html).toContain(">Generating<");
    expect(html).toContain(">AwaitingSupervisor<");
    expect(html).toContain("state-awaitingsupervisor");
  });

  it("marks only the selected row", () => {
    const rows = [summaryFixture({ id: "m1" }), summaryFixture({ id: "m2" })];
    const html = renderMissionRows(rows, "m1", NOW);
    expect(html.match(/mission-row state-generating selected/g)).toHaveLength(1);
  });

  it("escapes instructions", () => {
    const rows = [summaryFixture({ instruction: "<img onerror=x>" })];
    const html = renderMissionRows(rows, null, NOW);
    expect(html).not.toContain("<img onerror");
    expect(html).toContain("&lt;img onerror=x&gt;");
  });
});

describe("banner", () => {
  it("is empty when the service is healthy", () => {
    expect(renderBanner(null, false)).toBe("");
  });

  it("shows the error with a retry control", () => {
    const html = renderBanner("service unreachable: ECONNREFUSED", false);
    expect(html).toContain("banner-error");
    expect(html).toContain("ECONNREFUSED");
    expect(html).toContain('data-action="retry"');
  });

  it("flags a stale view after a polling gap", () => {
    expect(renderBanner(null, true)).toContain("banner-stale");
  });
});

describe("candidate gallery", () => {
  it("renders one tile per candidate with service-reported rewards at 2 decimals", () => {
    const html = renderMissionDetail(escalatedFixture(), detailOptions());
    expect(html.match(/<article class="candidate/g)).toHaveLength(3);
    // the strings the service's arithmetic produces, no client-side math
    expect(html).toContain("R 1.13");
    expect(html).toContain("R 0.77");
    expect(html).toContain("R 1.33");
    expect(html).toContain("tp 1.0");
    expect(html).toContain("as 1.5");
    expect(html).toContain("sc 0.5");
    expect(html).toContain("drifted");
    expect(html).toContain("wrong way");
  });

  it("makes Fail tiles visually distinct from Pass tiles", () => {
    const view = viewFixture({
      state: "Selected",
      selected_candidate: 1,
      candidates: [
        candidateFixture({ id: 1, judge_status: "Pass", reward: 4.2333333, reason: "clean" }),
        candidateFixture({ id: 2, judge_status: "Fail" }),
      ],
    });
    const html = renderMissionDetail(view, detailOptions());
    expect(html).toContain('class="candidate pass chosen"');
    expect(html).toContain('class="candidate fail"');
    expect(html).toContain(">Selected</span>");
  });

  it("renders frame strips from persisted frames", () => {
    const html = renderMissionDetail(escalatedFixture(), detailOptions());
    expect(html).toContain(
      'src="http://svc:8000/missions/a2b9c4d1e0f34567890123456789abcd/candidates/1/frames/0"',
    );
    expect(html).toContain("/candidates/1/frames/4"); // last of the 5 persisted frames
  });

  it("shows a placeholder tile when a candidate has no frames", () => {
    const view = viewFixture({
      candidates: [
        candidateFixture({
          id: 1,
          generation_status: "Fail",
          frame_count: 0,
          judge_status: null,
          reward: null,
          scores: null,
          reason: null,
          thumbnail: null,
          error_note: "video backend timed out",
        }),
      ],
    });
    const html = renderMissionDetail(view, detailOptions());
    expect(html).toContain("placeholder");
    expect(html).toContain("no frames");
    expect(html).not.toContain("<img");
    expect(html).toContain("R -");
    expect(html).toContain("video backend timed out");
  });
});

describe("decision panel gating", () => {
  it("is rendered only in AwaitingSupervisor", () => {
    const awaiting = renderMissionDetail(escalatedFixture(), detailOptions());
    expect(awaiting).toContain("decision-panel");
    expect(awaiting).toContain('data-action="resample"');
    expect(awaiting).toContain('data-action="terminate"');

    for (const state of ["Created", "Generating", "Selected", "Executing", "Done", "Aborted"] as const) {
      const html = renderMissionDetail({ ...escalatedFixture(), state }, detailOptions());
      expect(html).not.toContain("decision-panel");
    }
  });

  it("disables the controls while a decision is pending confirmation", () => {
    const html = renderDecisionPanel(escalatedFixture(), true, null);
    expect(html).toContain('data-action="resample" disabled');
    expect(html).toContain('data-action="terminate" disabled');
  });

  it("shows the remaining resample budget", () => {
    const view = { ...escalatedFixture(), resample_count: 2, max_resamples: 3 };
    expect(renderDecisionPanel(view, false, null)).toContain("(1 left)");
  });

  it("surfaces a conflict note inline", () => {
    const html = renderDecisionPanel(escalatedFixture(), false, "decision rejected: already resampled");
    expect(html).toContain("decision-note");
    expect(html).toContain("already resampled");
  });

  it("offers per-candidate override only when the service allows it", () => {
    const allowed = { ...escalatedFixture(), allow_override: true };
    const html = renderMissionDetail(allowed, detailOptions());
    expect(html.match(/data-action="approve"/g)).toHaveLength(3);
    expect(html).toContain('data-candidate-id="2"');

    const denied = renderMissionDetail(escalatedFixture(), detailOptions());
    expect(denied).not.toContain('data-action="approve"');

    // override buttons disappear once the mission is no longer waiting
    const moved = renderMissionDetail({ ...allowed, state: "Generating" }, detailOptions());
    expect(moved).not.toContain('data-action="approve"');
  });
});

describe("detail chrome", () => {
  it("shows the abort cause", () => {
    const view = viewFixture({ state: "Aborted", abort_cause: "budget-exhausted" });
    const html = renderMissionDetail(view, detailOptions());
    expect(html).toContain("budget-exhausted");
  });

  it("offers Advance only for live, non-waiting states", () => {
    expect(renderMissionDetail(viewFixture({ state: "Created" }), detailOptions())).toContain(
      'data-action="advance"',
    );
    expect(renderMissionDetail(escalatedFixture(), detailOptions())).not.toContain(
      'data-action="advance"',
    );
    expect(renderMissionDetail(viewFixture({ state: "Done" }), detailOptions())).not.toContain(
      'data-action="advance"',
    );
  });

  it("plots the trajectory top-down when points are available", () => {
    const view = viewFixture({
      state: "Done",
      trajectory: { duration: 3.05, vmax: 2, amax: 1, url: "/missions/m/trajectory" },
    });
    const points = [
      { t: 0, x: 0, y: 0, z: 1.2, yaw: 0 },
      { t: 1, x: 1, y: 0, z: 1.2, yaw: 0 },
      { t: 2, x: 2, y: 0.5, z: 1.2, yaw: 0 },
    ];
    const html = renderMissionDetail(view, detailOptions({ trajectory: points }));
    expect(html).toContain("duration 3.05 s");
    expect(html).toContain("<polyline");
    expect(html).toContain('href="http://svc:8000/missions/m/trajectory"');
  });

  it("summarizes the outcome once the result exists", () => {
    const view = viewFixture({
      state: "Done",
      result: {
        mission: "m",
        state: "Done",
        round: 1,
        selected_candidate: 1,
        scale: 2.1739,
        path_length: 2.998,
        done: true,
        max_tracking_error: 0.01,
        tracking_rmse: 0.004,
        is_collision_free: true,
      },
    });
    const html = renderMissionDetail(view, detailOptions());
    expect(html).toContain("collision free");
    expect(html).toContain("tracking rmse 0.004 m");
  });

  it("escapes the instruction in the header", () => {
    const view = viewFixture({ instruction: `<b onmouseover="steal()">go</b>` });
    const html = renderMissionDetail(view, detailOptions());
    expect(html).not.toContain("<b onmouseover");
    expect(html).toContain("&lt;b onmouseover=");
  });
});
