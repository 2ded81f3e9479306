import { describe, expect, it } from "vitest";

import {
  missionListSchema,
  missionSummarySchema,
  missionViewSchema,
} from "../src/types";
import { escalatedFixture, summaryFixture, viewFixture } from "./fixtures";

describe("mission summary schema", () => {
  it("accepts the service list shape", () => {
    const rows = [summaryFixture(), summaryFixture({ id: "b", state: "Done" })];
    expect(missionListSchema.parse(rows)).toHaveLength(2);
  });

  it("rejects an unknown state string", () => {
    const row = { ...summaryFixture(), state: "Paused" };
    expect(missionSummarySchema.safeParse(row).success).toBe(false);
  });

  it("rejects a missing field", () => {
    const { resample_count: _dropped, ...row } = summaryFixture();
    expect(missionSummarySchema.safeParse(row).success).toBe(false);
  });
});

describe("mission view schema", () => {
  it("accepts a freshly created mission", () => {
    const view = missionViewSchema.parse(viewFixture({ state: "Created" }));
    expect(view.candidates).toEqual([]);
    expect(view.scale).toBeNull();
    expect(view.result).toBeUndefined();
  });

  it("accepts an escalated mission with judged candidates", () => {
    const view = missionViewSchema.parse(escalatedFixture());
    expect(view.candidates).toHaveLength(3);
    expect(view.candidates[0]?.scores?.as).toBe(1.5);
  });

  it("accepts a finished mission with scale, trajectory, and result", () => {
    const done = viewFixture({
      state: "Done",
      selected_candidate: 1,
      scale: { scale: 2.1739, valid_pixel_count: 33792, per_frame_medians: [2.17, 2.18] },
      trajectory: { duration: 3.1, vmax: 2.0, amax: 1.0, url: "/missions/a2b9/trajectory" },
      result: {
        mission: "a2b9",
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
    const view = missionViewSchema.parse(done);
    expect(view.result?.is_collision_free).toBe(true);
    expect(view.trajectory?.duration).toBeCloseTo(3.1);
  });

  it("rejects a candidate with a malformed score block", () => {
    const broken = viewFixture({
      candidates: [
        {
          ...escalatedFixture().candidates[0]!,
          scores: { tp: 1.0, as: 1.5 } as never,
        },
      ],
    });
    expect(missionViewSchema.safeParse(broken).success).toBe(false);
  });

  it("tolerates extra keys the service may grow", () => {
    const widened = { ...viewFixture(), extra_field: "later" };
    expect(missionViewSchema.safeParse(widened).success).toBe(true);
  });
});
