/** Pure presentation logic: everything here is a function of service data,
 * so the rendering rules are testable without a DOM or a server.
 *
 * One rule dominates this module: numbers shown to the operator are the
 * service's numbers. Rewards and scores are formatted, never recomputed.
 */

import type { MissionState, MissionSummary, MissionView } from "./types";

export const TERMINAL_STATES: ReadonlySet<MissionState> = new Set(["Done", "Aborted"]);

export function isTerminal(state: MissionState): boolean {
  return TERMINAL_STATES.has(state);
}

export function awaitingDecision(view: Pick<MissionView, "state">): boolean {
  return view.state === "AwaitingSupervisor";
}

export function orderMissions(rows: readonly MissionSummary[]): MissionSummary[] {
  return [...rows].sort((a, b) => b.created_at - a.created_at || a.id.localeCompare(b.id));
}

export function stateClass(state: MissionState): string {
  return `state-${state.toLowerCase()}`;
}

export function formatReward(reward: number | null): string {
  return reward === null ? "-" : reward.toFixed(2);
}

export function formatScore(value: number | null): string {
  return value === null ? "-" : value.toFixed(1);
}

export function formatAge(createdAt: number, nowMs: number): string {
  const seconds = Math.max(0, Math.round(nowMs / 1000 - createdAt));
  if (seconds < 60) return `${seconds}s ago`;
  if (seconds < 3600) return `${Math.floor(seconds / 60)}m ago`;
  if (seconds < 86400) return `${Math.floor(seconds / 3600)}h ago`;
  return `${Math.floor(seconds / 86400)}d ago`;
}

/** Evenly spaced indices into the persisted frames, at most `limit` of them. */
export function frameStripIndices(frameCount: number, limit = 6): number[] {
  if (frameCount <= 0) return [];
  const n = Math.min(limit, frameCount);
  const picked = new Set<number>();
  for (let i = 0; i < n; i++) {
    picked.add(Math.round((i * (frameCount - 1)) / Math.max(1, n - 1)));
  }
  return [...picked].sort((a, b) => a - b);
}

export interface ListSnapshot {
  rows: MissionSummary[];
  error: string | null;
}

export const EMPTY_LIST: ListSnapshot = { rows: [], error: null };

export function listAfterSuccess(rows: MissionSummary[]): ListSnapshot {
  return { rows: orderMissions(rows), error: null };
}

/** A failed poll keeps the previous rows on screen; only the banner changes. */
export function listAfterFailure(previous: ListSnapshot, error: unknown): ListSnapshot {
  const message = error instanceof Error ? error.message : String(error);
  return { rows: previous.rows, error: message };
}

export interface TrajectoryPoint {
  t: number;
  x: number;
  y: number;
  z: number;
  yaw: number;
}

/** Parse the service's trajectory text ("# t x y z yaw vx vy vz ax ay az"). */
export function parseTrajectoryText(text: string): TrajectoryPoint[] {
  const points: TrajectoryPoint[] = [];
  for (const raw of text.split("\n")) {
    const line = raw.trim();
    if (line === "" || line.startsWith("#")) continue;
    const fields = line.split(/\s+/).map(Number);
    if (fields.length < 5 || fields.some(Number.isNaN)) continue;
    const [t, x, y, z, yaw] = fields as [number, number, number, number, number];
    points.push({ t, x, y, z, yaw });
  }
  return points;
}

export interface TopDownPlot {
  /** SVG polyline points, pixel coordinates, north (+y) up. */
  outline: string;
  start: [number, number];
  end: [number, number];
}

export function topDownPlot(
  points: readonly TrajectoryPoint[],
  width: number,
  height: number,
  pad = 12,
): TopDownPlot | null {
  if (points.length < 2) return null;
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const minX = Math.min(...xs);
  const maxX = Math.max(...xs);
  const minY = Math.min(...ys);
  const maxY = Math.max(...ys);
  const span = Math.max(maxX - minX, maxY - minY, 1e-9);
  const scale = (Math.min(width, height) - 2 * pad) / span;
  const cx = (minX + maxX) / 2;
  const cy = (minY + maxY) / 2;
  const toPixel = (p: TrajectoryPoint): [number, number] => [
    Math.round((width / 2 + (p.x - cx) * scale) * 100) / 100,
    Math.round((height / 2 - (p.y - cy) * scale) * 100) / 100,
  ];
  const pixels = points.map(toPixel);
  return {
    outline: pixels.map(([px, py]) => `${px},${py}`).join(" "),
    start: pixels[0] as [number, number],
    end: pixels[pixels.length - 1] as [number, number],
  };
}
