import { describe, expect, it } from "vitest";

import { MissionClient, ServiceError } from "../src/client";
import { escalatedFixture, summaryFixture, viewFixture } from "./fixtures";

interface RecordedCall {
  url: string;
  init?: RequestInit;
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/** fetch stub that replays queued responses and records every call */
function stubFetch(responses: (Response | Error)[]) {
  const calls: RecordedCall[] = [];
  const fetchFn = (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const next = responses.shift();
    if (next === undefined) return Promise.reject(new Error("no response queued"));
    if (next instanceof Error) return Promise.reject(next);
    return Promise.resolve(next);
  };
  return { calls, fetchFn };
}

describe("MissionClient requests", () => {
  it("lists missions from GET /missions", async () => {
    const { calls, fetchFn } = stubFetch([jsonResponse([summaryFixture()])]);
    const client = new MissionClient("http://svc:8000", fetchFn);
    const rows = await client.listMissions();
    expect(calls[0]?.url).toBe("http://svc:8000/missions");
    expect(rows[0]?.state).toBe("Generating");
  });

  it("normalizes a trailing slash in the base URL", async () => {
    const { calls, fetchFn } = stubFetch([jsonResponse([])]);
    const client = new MissionClient("http://svc:8000/", fetchFn);
    await client.listMissions();
    expect(calls[0]?.url).toBe("http://svc:8000/missions");
  });

  it("creates a mission with a JSON instruction body", async () => {
    const { calls, fetchFn } = stubFetch([jsonResponse(viewFixture({ state: "Created" }))]);
    const client = new MissionClient("", fetchFn);
    const view = await client.createMission("hover in place");
    expect(view.state).toBe("Created");
    expect(calls[0]?.url).toBe("/missions");
    expect(calls[0]?.init?.method).toBe("POST");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({ instruction: "hover in place" });
  });

  it("posts decisions with action and candidate id", async () => {
    const { calls, fetchFn } = stubFetch([jsonResponse(viewFixture({ state: "Decoding" }))]);
    const client = new MissionClient("", fetchFn);
    await client.submitDecision("m1", "ApproveOverride", 2);
    expect(calls[0]?.url).toBe("/missions/m1/decision");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({
      action: "ApproveOverride",
      candidate_id: 2,
    });
  });

  it("omits the candidate id as null for plain actions", async () => {
    const { calls, fetchFn } = stubFetch([jsonResponse(viewFixture())]);
    const client = new MissionClient("", fetchFn);
    await client.submitDecision("m1", "Resample");
    expect(JSON.parse(String(calls[0]?.init?.body))).toEqual({
      action: "Resample",
      candidate_id: null,
    });
  });

  it("returns trajectory text verbatim", async () => {
    const text = "# t x y z yaw vx vy vz ax ay az\n0.0 0 0 1.2 0 0 0 0 0 0 0\n";
    const { fetchFn } = stubFetch([new Response(text, { status: 200 })]);
    const client = new MissionClient("", fetchFn);
    expect(await client.trajectoryText("m1")).toBe(text);
  });

  it("builds frame URLs against the base", () => {
    const client = new MissionClient("http://svc:9000");
    expect(client.frameUrl("m1", 2, 4)).toBe("http://svc:9000/missions/m1/candidates/2/frames/4");
  });
});

describe("MissionClient errors", () => {
  it("surfaces the service detail on a 409 conflict", async () => {
    const { fetchFn } = stubFetch([
      jsonResponse({ detail: "mission m1 is Generating, decision needs AwaitingSupervisor" }, 409),
    ]);
    const client = new MissionClient("", fetchFn);
    const err = await client.submitDecision("m1", "Resample").catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).status).toBe(409);
    expect((err as ServiceError).conflict).toBe(true);
    expect((err as ServiceError).message).toContain("AwaitingSupervisor");
  });

  it("falls back to the HTTP status when the body is not JSON", async () => {
    const { fetchFn } = stubFetch([new Response("boom", { status: 500 })]);
    const client = new MissionClient("", fetchFn);
    const err = await client.listMissions().catch((e: unknown) => e);
    expect((err as ServiceError).message).toBe("HTTP 500");
  });

  it("maps network failures to a status 0 ServiceError", async () => {
    const { fetchFn } = stubFetch([new Error("ECONNREFUSED")]);
    const client = new MissionClient("", fetchFn);
    const err = await client.listMissions().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect((err as ServiceError).status).toBe(0);
    expect((err as ServiceError).message).toContain("unreachable");
  });

  it("rejects payloads that break the contract", async () => {
    const { fetchFn } = stubFetch([jsonResponse([{ id: 42 }])]);
    const client = new MissionClient("", fetchFn);
    await expect(client.listMissions()).rejects.toThrow();
  });
});

describe("decision serialization", () => {
  it("holds the second submission until the first settles", async () => {
    const calls: RecordedCall[] = [];
    const pending: Array<(r: Response) => void> = [];
    const fetchFn = (url: string, init?: RequestInit): Promise<Response> => {
      calls.push({ url, init });
      return new Promise((resolve) => pending.push(resolve));
    };
    const client = new MissionClient("", fetchFn);

    const first = client.submitDecision("m1", "Resample");
    const second = client.submitDecision("m1", "Resample");
    await Promise.resolve(); // give queued microtasks a chance to (wrongly) fire
    expect(calls).toHaveLength(1);

    pending[0]!(jsonResponse(viewFixture({ state: "Generating", resample_count: 1 })));
    await first;
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(calls).toHaveLength(2);

    pending[1]!(jsonResponse({ detail: "already resampled" }, 409));
    const err = await second.catch((e: unknown) => e);
    expect((err as ServiceError).conflict).toBe(true);
  });

  it("keeps the queue alive after a failed submission", async () => {
    const { calls, fetchFn } = stubFetch([
      jsonResponse({ detail: "conflict" }, 409),
      jsonResponse(viewFixture({ state: "Aborted" })),
    ]);
    const client = new MissionClient("", fetchFn);
    await expect(client.submitDecision("m1", "Resample")).rejects.toThrow("conflict");
    const view = await client.submitDecision("m1", "Terminate");
    expect(view.state).toBe("Aborted");
    expect(calls).toHaveLength(2);
  });

  it("does not serialize decisions across different missions", async () => {
    const calls: RecordedCall[] = [];
    const pending: Array<(r: Response) => void> = [];
    const fetchFn = (url: string, init?: RequestInit): Promise<Response> => {
      calls.push({ url, init });
      return new Promise((resolve) => pending.push(resolve));
    };
    const client = new MissionClient("", fetchFn);
    void client.submitDecision("m1", "Resample").catch(() => undefined);
    void client.submitDecision("m2", "Resample").catch(() => undefined);
    await Promise.resolve();
    expect(calls).toHaveLength(2);
  });
});

describe("fixture sanity", () => {
  it("escalated fixture carries three judged candidates", () => {
    expect(escalatedFixture().candidates.map((c) => c.judge_status)).toEqual([
      "Fail",
      "Fail",
      "Fail",
    ]);
  });
});
