/** HTTP client for the mission service. The console talks to the backend
 * exclusively through this module, configured by a single base URL. */

import type { z } from "zod";
import {
  missionListSchema,
  missionViewSchema,
  type DecisionAction,
  type MissionSummary,
  type MissionView,
} from "./types";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ServiceError";
  }

  /** True for 409: the mission moved on and the request no longer applies. */
  get conflict(): boolean {
    return this.status === 409;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function detailOf(response: Response): Promise<string> {
  const fallback = `HTTP ${response.status}`;
  try {
    const body: unknown = await response.json();
    const detail = (body as { detail?: unknown }).detail;
    return typeof detail === "string" ? detail : fallback;
  } catch {
    return fallback;
  }
}

export class MissionClient {
  readonly baseUrl: string;
  private readonly fetchFn: FetchLike;
  // Decision submissions are serialized per mission: a second submission
  // waits for the first to settle, then gets the service's state check.
  private readonly decisionTail = new Map<string, Promise<unknown>>();

  constructor(baseUrl = "", fetchFn?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  url(path: string): string {
    return this.baseUrl + path;
  }

  private async raw(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchFn(this.url(path), init);
    } catch (err) {
      const reason = err instanceof Error ? err.message : String(err);
      throw new ServiceError(0, `service unreachable: ${reason}`);
    }
    if (!response.ok) {
      throw new ServiceError(response.status, await detailOf(response));
    }
    return response;
  }

  private async request<T>(schema: z.ZodType<T>, path: string, init?: RequestInit): Promise<T> {
    const response = await this.raw(path, init);
    return schema.parse(await response.json());
  }

  private post<T>(schema: z.ZodType<T>, path: string, body?: unknown): Promise<T> {
    return this.request(schema, path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
  }

  listMissions(): Promise<MissionSummary[]> {
    return this.request(missionListSchema, "/missions");
  }

  getMission(id: string): Promise<MissionView> {
    return this.request(missionViewSchema, `/missions/${id}`);
  }

  createMission(instruction: string): Promise<MissionView> {
    return this.post(missionViewSchema, "/missions", { instruction });
  }

  advance(id: string): Promise<MissionView> {
    return this.post(missionViewSchema, `/missions/${id}/advance`);
  }

  submitDecision(id: string, action: DecisionAction, candidateId?: number): Promise<MissionView> {
    const send = () =>
      this.post(missionViewSchema, `/missions/${id}/decision`, {
        action,
        candidate_id: candidateId ?? null,
      });
    const previous = this.decisionTail.get(id) ?? Promise.resolve();
    const turn = previous.then(send, send);
    this.decisionTail.set(id, turn.catch(() => undefined));
    return turn;
  }

  async trajectoryText(id: string): Promise<string> {
    const response = await this.raw(`/missions/${id}/trajectory`);
    return response.text();
  }

  frameUrl(missionId: string, candidateId: number, frame: number): string {
    return this.url(`/missions/${missionId}/candidates/${candidateId}/frames/${frame}`);
  }
}
