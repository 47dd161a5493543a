import { describe, expect, it } from "vitest";

import type { QueryResponse } from "../src/api.js";
import {
  applyError,
  applyResponse,
  beginQuery,
  canSubmit,
  createSession,
  diffAssignments,
  parseVocabulary,
  selectScene,
  setVocabulary,
  viewModel,
} from "../src/state.js";

function response(labels: string[], assignments: number[]): QueryResponse {
  const colors: Record<string, [number, number, number]> = {};
  for (const l of labels) colors[l] = [0.5, 0.5, 0.5];
  return { scene_id: "s", labels, assignments, colors, timing_ms: 1 };
}

describe("parseVocabulary", () => {
  it("trims, lowercases, collapses whitespace, drops empties", () => {
    expect(parseVocabulary("  Wall , floor,,  White   Board ")).toEqual([
      "wall",
      "floor",
      "white board",
    ]);
  });

  it("empty text parses to no labels", () => {
    expect(parseVocabulary("  , ,")).toEqual([]);
  });
});

describe("canSubmit", () => {
  it("needs both a scene and a vocabulary", () => {
    let state = createSession();
    expect(canSubmit(state)).toBe(false);
    state = setVocabulary(state, "wall");
    expect(canSubmit(state)).toBe(false);
    state = selectScene(state, "room-a");
    expect(canSubmit(state)).toBe(true);
    state = setVocabulary(state, " , ");
    expect(canSubmit(state)).toBe(false);
  });
});

describe("session transitions", () => {
  it("applyResponse appends history and updates the view", () => {
    let state = selectScene(createSession(), "room-a");
    state = setVocabulary(state, "wall, floor");
    const { state: inFlight, seq } = beginQuery(state);
    state = applyResponse(inFlight, seq, response(["wall", "floor"], [0, 1, 0]), 123);
    expect(state.history).toHaveLength(1);
    expect(state.history[0].vocabulary).toEqual(["wall", "floor"]);
    expect(state.pending).toBe(false);
    const view = viewModel(state);
    expect(view.legend.map((r) => r.count)).toEqual([2, 1]);
  });

  it("stale responses are discarded by sequence number", () => {
    let state = selectScene(createSession(), "room-a");
    const first = beginQuery(state);
    const second = beginQuery(first.state);
    state = applyResponse(second.state, second.seq, response(["a"], [0]), 1);
    const after = applyResponse(state, first.seq, response(["b"], [0]), 2);
    expect(after.lastResponse?.labels).toEqual(["a"]);
    expect(after.history).toHaveLength(1);
  });

  it("errors keep the previous result and raise a banner", () => {
    let state = selectScene(createSession(), "room-a");
    const ok = beginQuery(state);
    state = applyResponse(ok.state, ok.seq, response(["wall"], [0, 0]), 1);
    const failing = beginQuery(state);
    state = applyError(failing.state, failing.seq, "HTTP 404: unknown scene");
    expect(state.banner).toContain("404");
    expect(state.lastResponse?.labels).toEqual(["wall"]);
    expect(viewModel(state).legend).toHaveLength(1);
  });

  it("pre-query view model is empty", () => {
    const view = viewModel(selectScene(createSession(), "room-a"));
    expect(view.assignments).toEqual([]);
    expect(view.legend).toEqual([]);
  });
});

describe("diffAssignments", () => {
  it("identical queries agree fully", () => {
    const a = response(["wall", "floor"], [0, 1, 1]);
    const diff = diffAssignments(a, response(["wall", "floor"], [0, 1, 1]));
    expect(diff.agreement).toBe(1.0);
  });

  it("disjoint single-label queries disagree on every point", () => {
    const a = response(["wall"], [0, 0, 0]);
    const b = response(["sofa"], [0, 0, 0]);
    expect(diffAssignments(a, b).agreement).toBe(0.0);
  });

  it("compares label names, not positions", () => {
    const a = response(["wall", "floor"], [0, 1]);
    const b = response(["floor", "wall"], [1, 0]);
    expect(diffAssignments(a, b).agreement).toBe(1.0);
  });

  it("rejects mismatched scenes", () => {
    const a = response(["wall"], [0, 0]);
    const b = response(["wall"], [0]);
    expect(() => diffAssignments(a, b)).toThrow();
  });
});
