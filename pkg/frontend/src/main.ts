/** Console entry point: owns the DOM and the poll loop, delegates everything
 * else. Mission state is mutated only through the decision endpoint; every
 * other request is a read.
 */

import { MissionClient, ServiceError } from "./client";
import {
  EMPTY_LIST,
  awaitingDecision,
  listAfterFailure,
  listAfterSuccess,
  parseTrajectoryText,
  type ListSnapshot,
  type TrajectoryPoint,
} from "./model";
import { Poller } from "./poll";
import {
  renderBanner,
  renderDetailPlaceholder,
  renderMissionDetail,
  renderMissionRows,
} from "./render";
import type { DecisionAction, MissionView } from "./types";

// one setting: the service base URL (?api=http://host:port), same origin by default
const apiBase = new URLSearchParams(window.location.search).get("api") ?? "";
const client = new MissionClient(apiBase);

interface UiState {
  list: ListSnapshot;
  selectedId: string | null;
  detail: MissionView | null;
  trajectory: { url: string; points: TrajectoryPoint[] } | null;
  busy: boolean; // a decision or advance is in flight or unconfirmed
  decisionNote: string | null;
}

const state: UiState = {
  list: EMPTY_LIST,
  selectedId: null,
  detail: null,
  trajectory: null,
  busy: false,
  decisionNote: null,
};

const bannerHost = document.getElementById("banner") as HTMLElement;
const listHost = document.getElementById("mission-list") as HTMLElement;
const detailHost = document.getElementById("mission-detail") as HTMLElement;
const createForm = document.getElementById("create-form") as HTMLFormElement;
const createInput = document.getElementById("create-instruction") as HTMLInputElement;

function message(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}

function paint(): void {
  bannerHost.innerHTML = renderBanner(state.list.error, poller.isStale());
  listHost.innerHTML = renderMissionRows(state.list.rows, state.selectedId, Date.now());
  detailHost.innerHTML =
    state.detail !== null
      ? renderMissionDetail(state.detail, {
          baseUrl: client.baseUrl,
          decisionPending: state.busy,
          decisionNote: state.decisionNote,
          trajectory: state.trajectory?.points ?? null,
          nowMs: Date.now(),
        })
      : renderDetailPlaceholder();
}

async function loadTrajectory(view: MissionView): Promise<void> {
  const summary = view.trajectory;
  if (!summary) {
    state.trajectory = null;
    return;
  }
  if (state.trajectory?.url === summary.url) return; // already fetched this plan
  const text = await client.trajectoryText(view.id);
  state.trajectory = { url: summary.url, points: parseTrajectoryText(text) };
}

async function refresh(): Promise<void> {
  let failure: unknown = null;
  try {
    state.list = listAfterSuccess(await client.listMissions());
  } catch (err) {
    failure = err;
    state.list = listAfterFailure(state.list, err);
  }

  if (failure === null && state.selectedId !== null) {
    try {
      const view = await client.getMission(state.selectedId);
      if (state.busy && !awaitingDecision(view)) {
        // the poll confirmed the transition; re-enable the controls
        state.busy = false;
        state.decisionNote = null;
      }
      state.detail = view;
      await loadTrajectory(view);
    } catch (err) {
      if (err instanceof ServiceError && err.status === 404) {
        state.selectedId = null;
        state.detail = null;
        state.trajectory = null;
      } else {
        failure = err;
        state.list = listAfterFailure(state.list, err);
      }
    }
  }

  paint();
  if (failure !== null) throw failure;
}

const poller = new Poller(refresh);

function select(missionId: string): void {
  if (state.selectedId === missionId) return;
  state.selectedId = missionId;
  state.detail = null;
  state.trajectory = null;
  state.busy = false;
  state.decisionNote = null;
  paint();
  void poller.poll();
}

function submitDecision(action: DecisionAction, candidateId?: number): void {
  const missionId = state.selectedId;
  if (missionId === null || state.busy) return;
  state.busy = true; // panel stays disabled until a poll confirms the move
  state.decisionNote = null;
  paint();
  client.submitDecision(missionId, action, candidateId).then(
    (view) => {
      state.detail = view;
      state.busy = awaitingDecision(view);
      paint();
      void poller.poll();
    },
    (err: unknown) => {
      state.decisionNote = err instanceof ServiceError && err.conflict
        ? `decision rejected: ${message(err)}`
        : message(err);
      state.busy = false;
      paint();
      void poller.poll(); // re-fetch so the view reflects what the service did
    },
  );
}

function advanceSelected(): void {
  const missionId = state.selectedId;
  if (missionId === null || state.busy) return;
  state.busy = true;
  paint();
  client.advance(missionId).then(
    (view) => {
      state.detail = view;
      state.busy = false;
      paint();
      void poller.poll();
    },
    (err: unknown) => {
      state.decisionNote = message(err);
      state.busy = false;
      paint();
      void poller.poll();
    },
  );
}

document.addEventListener("click", (event) => {
  const target = event.target as HTMLElement | null;
  if (!target) return;

  const row = target.closest<HTMLElement>("[data-mission-id]");
  if (row?.dataset.missionId) {
    select(row.dataset.missionId);
    return;
  }

  const control = target.closest<HTMLElement>("[data-action]");
  if (!control) return;
  switch (control.dataset.action) {
    case "retry":
      void poller.poll();
      break;
    case "advance":
      advanceSelected();
      break;
    case "resample":
      submitDecision("Resample");
      break;
    case "terminate":
      submitDecision("Terminate");
      break;
    case "approve": {
      const id = Number(control.dataset.candidateId);
      if (Number.isInteger(id)) submitDecision("ApproveOverride", id);
      break;
    }
  }
});

createForm.addEventListener("submit", (event) => {
  event.preventDefault();
  const instruction = createInput.value.trim();
  if (instruction === "") return;
  client.createMission(instruction).then(
    (view) => {
      createInput.value = "";
      state.list = listAfterSuccess([...state.list.rows, view]);
      select(view.id);
    },
    (err: unknown) => {
      state.list = { ...state.list, error: message(err) };
      paint();
    },
  );
});

poller.start();
