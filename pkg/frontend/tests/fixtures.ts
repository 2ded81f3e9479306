/** Builders for service payloads, mirroring the shapes the backend emits. */

import type { CandidateView, MissionSummary, MissionView } from "../src/types";

export function summaryFixture(over: Partial<MissionSummary> = {}): MissionSummary {
  return {
    id: "a2b9c4d1e0f34567890123456789abcd",
    instruction: "fly forward over the gate",
    state: "Generating",
    created_at: 1_755_300_000.0,
    resample_count: 0,
    round: 1,
    ...over,
  };
}

export function candidateFixture(over: Partial<CandidateView> = {}): CandidateView {
  return {
    id: 1,
    generation_status: "Unjudged",
    frame_count: 5,
    error_note: null,
    judge_status: "Fail",
    reward: 1.1333333333333333,
    scores: { tp: 1.0, as: 1.5, sc: 1.0 },
    reason: "drifted",
    thumbnail: "/missions/a2b9c4d1e0f34567890123456789abcd/candidates/1/frames/0",
    ...over,
  };
}

export function viewFixture(over: Partial<MissionView> = {}): MissionView {
  return {
    ...summaryFixture(),
    max_resamples: 3,
    selected_candidate: null,
    abort_cause: null,
    allow_override: false,
    candidates: [],
    scale: null,
    trajectory: null,
    ...over,
  };
}

/** A mission the judge escalated: three Fail candidates, supervisor pending.
 * Reward values are the service's own arithmetic for the scripted verdicts
 * (Fail 1.0/1.5/1.0, Fail 0.5/1.0/1.0, Fail 2.0/1.0/0.5). */
export function escalatedFixture(): MissionView {
  return viewFixture({
    state: "AwaitingSupervisor",
    candidates: [
      candidateFixture({
        id: 1,
        judge_status: "Fail",
        reward: 1.1333333333333333,
        scores: { tp: 1.0, as: 1.5, sc: 1.0 },
        reason: "drifted",
      }),
      candidateFixture({
        id: 2,
        judge_status: "Fail",
        reward: 0.7666666666666666,
        scores: { tp: 0.5, as: 1.0, sc: 1.0 },
        reason: "stalled",
        thumbnail: "/missions/a2b9c4d1e0f34567890123456789abcd/candidates/2/frames/0",
      }),
      candidateFixture({
        id: 3,
        judge_status: "Fail",
        reward: 1.3333333333333333,
        scores: { tp: 2.0, as: 1.0, sc: 0.5 },
        reason: "wrong way",
        thumbnail: "/missions/a2b9c4d1e0f34567890123456789abcd/candidates/3/frames/0",
      }),
    ],
  });
}
