// Session state and its pure transitions. The view is a function of
// (scene, history, last response); replaying a session's history against the
// same server reproduces the same view, which the tests rely on.

import type { QueryResponse } from "./api.js";

export interface HistoryEntry {
  vocabulary: string[];
  timestamp: number;
  response: QueryResponse;
}

export interface SessionState {
  sceneId: string | null;
  vocabularyText: string;
  lastResponse: QueryResponse | null;
  history: HistoryEntry[];
  /** sequence number of the newest submitted query; stale responses are dropped */
  latestSeq: number;
  pending: boolean;
  banner: string | null;
}

export function createSession(): SessionState {
  return {
    sceneId: null,
    vocabularyText: "",
    lastResponse: null,
    history: [],
    latestSeq: 0,
    pending: false,
    banner: null,
  };
}

/** Comma-separated vocabulary text -> trimmed, lowercased label list. */
export function parseVocabulary(text: string): string[] {
  return text
    .split(",")
    .map((part) => part.trim().toLowerCase().replace(/\s+/g, " "))
    .filter((part) => part.length > 0);
}

export function canSubmit(state: SessionState): boolean {
  return state.sceneId !== null && parseVocabulary(state.vocabularyText).length >= 1;
}

export function selectScene(state: SessionState, sceneId: string): SessionState {
  // a new scene invalidates the rendered assignments but keeps the session log
  return { ...state, sceneId, lastResponse: null, banner: null };
}

export function setVocabulary(state: SessionState, text: string): SessionState {
  return { ...state, vocabularyText: text };
}

/** Mark a query in flight; returns the sequence number to submit under. */
export function beginQuery(state: SessionState): { state: SessionState; seq: number } {
  const seq = state.latestSeq + 1;
  return { state: { ...state, latestSeq: seq, pending: true }, seq };
}

export function applyResponse(
  state: SessionState,
  seq: number,
  response: QueryResponse,
  timestamp: number,
): SessionState {
  if (seq < state.latestSeq) {
    return state; // superseded by a newer submit
  }
  const entry: HistoryEntry = {
    vocabulary: [...response.labels],
    timestamp,
    response,
  };
  return {
    ...state,
    pending: false,
    banner: null,
    lastResponse: response,
    history: [...state.history, entry], // append-only
  };
}

/** Errors surface as a banner without clearing the previous result. */
export function applyError(state: SessionState, seq: number, message: string): SessionState {
  if (seq < state.latestSeq) {
    return state;
  }
  return { ...state, pending: false, banner: message };
}

export interface DiffResult {
  agreement: number; // fraction of points whose assigned label NAME matches
  agreeFlags: boolean[];
}

/** Per-point agreement between two query results on the same scene. */
export function diffAssignments(a: QueryResponse, b: QueryResponse): DiffResult {
  if (a.assignments.length !== b.assignments.length) {
    throw new Error("diff requires queries over the same scene");
  }
  const flags = a.assignments.map(
    (ia, i) => a.labels[ia] === b.labels[b.assignments[i]],
  );
  const agree = flags.reduce((acc, f) => acc + (f ? 1 : 0), 0);
  return { agreement: flags.length === 0 ? 1 : agree / flags.length, agreeFlags: flags };
}

export interface LegendRow {
  label: string;
  color: [number, number, number];
  count: number;
}

export interface ViewModel {
  sceneId: string | null;
  labels: string[];
  assignments: number[];
  legend: LegendRow[];
  banner: string | null;
}

/** Pure render model consumed by the viewer and the tests. */
export function viewModel(state: SessionState): ViewModel {
  const response = state.lastResponse;
  if (!response) {
    return {
      sceneId: state.sceneId,
      labels: [],
      assignments: [],
      legend: [],
      banner: state.banner,
    };
  }
  const counts = new Map<string, number>();
  for (const idx of response.assignments) {
    const label = response.labels[idx];
    counts.set(label, (counts.get(label) ?? 0) + 1);
  }
  return {
    sceneId: state.sceneId,
    labels: [...response.labels],
    assignments: [...response.assignments],
    legend: response.labels.map((label) => ({
      label,
      color: response.colors[label],
      count: counts.get(label) ?? 0,
    })),
    banner: state.banner,
  };
}

export interface QueryRunner {
  query(sceneId: string, labels: string[]): Promise<QueryResponse>;
}

/**
 * Re-issue every history entry in order against the service and rebuild the
 * session. With a deterministic checkpoint the final view equals the live one.
 */
export async function replayHistory(
  api: QueryRunner,
  sceneId: string,
  history: HistoryEntry[],
): Promise<SessionState> {
  let state = selectScene(createSession(), sceneId);
  for (const entry of history) {
    state = setVocabulary(state, entry.vocabulary.join(", "));
    const { state: inFlight, seq } = beginQuery(state);
    const response = await api.query(sceneId, parseVocabulary(state.vocabularyText));
    state = applyResponse(inFlight, seq, response, entry.timestamp);
  }
  return state;
}
