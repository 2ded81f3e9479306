/** Wire shapes of the mission service HTTP API, validated at the edge. */

import { z } from "zod";

export const MISSION_STATES = [
  "Created",
  "Generating",
  "Judging",
  "AwaitingSupervisor",
  "Selected",
  "Decoding",
  "Planning",
  "Executing",
  "Done",
  "Aborted",
] as const;

export const missionStateSchema = z.enum(MISSION_STATES);
export type MissionState = z.infer<typeof missionStateSchema>;

export const DECISION_ACTIONS = ["Resample", "Terminate", "ApproveOverride"] as const;
export type DecisionAction = (typeof DECISION_ACTIONS)[number];

export const missionSummarySchema = z.object({
  id: z.string(),
  instruction: z.string(),
  state: missionStateSchema,
  created_at: z.number(),
  resample_count: z.number().int(),
  round: z.number().int(),
});
export type MissionSummary = z.infer<typeof missionSummarySchema>;

export const candidateScoresSchema = z.object({
  tp: z.number(),
  as: z.number(),
  sc: z.number(),
});
export type CandidateScores = z.infer<typeof candidateScoresSchema>;

export const candidateViewSchema = z.object({
  id: z.number().int(),
  generation_status: z.enum(["Unjudged", "Pass", "Fail"]),
  frame_count: z.number().int(),
  error_note: z.string().nullable(),
  judge_status: z.enum(["Pass", "Fail"]).nullable(),
  reward: z.number().nullable(),
  scores: candidateScoresSchema.nullable(),
  reason: z.string().nullable(),
  thumbnail: z.string().nullable(),
});
export type CandidateView = z.infer<typeof candidateViewSchema>;

export const scaleRecordSchema = z.object({
  scale: z.number(),
  valid_pixel_count: z.number().int(),
  per_frame_medians: z.array(z.number()),
});
export type ScaleRecord = z.infer<typeof scaleRecordSchema>;

export const trajectorySummarySchema = z.object({
  duration: z.number(),
  vmax: z.number(),
  amax: z.number(),
  url: z.string(),
});
export type TrajectorySummary = z.infer<typeof trajectorySummarySchema>;

export const missionResultSchema = z.object({
  mission: z.string(),
  state: z.string(),
  round: z.number().int(),
  selected_candidate: z.number().int(),
  scale: z.number(),
  path_length: z.number(),
  done: z.boolean(),
  max_tracking_error: z.number(),
  tracking_rmse: z.number(),
  is_collision_free: z.boolean(),
});
export type MissionResult = z.infer<typeof missionResultSchema>;

export const missionViewSchema = missionSummarySchema.extend({
  max_resamples: z.number().int(),
  selected_candidate: z.number().int().nullable(),
  abort_cause: z.string().nullable(),
  allow_override: z.boolean(),
  candidates: z.array(candidateViewSchema),
  scale: scaleRecordSchema.nullable(),
  trajectory: trajectorySummarySchema.nullable(),
  // present once the mission has finished
  result: missionResultSchema.optional(),
});
export type MissionView = z.infer<typeof missionViewSchema>;

export const missionListSchema = z.array(missionSummarySchema);
