// DOM wiring: scene picker, vocabulary box, legend, history with diff view.

import { ApiClient, ApiError } from "./api.js";
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
  type SessionState,
} from "./state.js";
import { SceneViewer } from "./viewer.js";

const api = new ApiClient("");
let state: SessionState = createSession();

const el = {
  scenes: document.getElementById("scenes") as HTMLSelectElement,
  vocabulary: document.getElementById("vocabulary") as HTMLTextAreaElement,
  submit: document.getElementById("submit") as HTMLButtonElement,
  legend: document.getElementById("legend") as HTMLUListElement,
  history: document.getElementById("history") as HTMLOListElement,
  banner: document.getElementById("banner") as HTMLDivElement,
  diffA: document.getElementById("diff-a") as HTMLSelectElement,
  diffB: document.getElementById("diff-b") as HTMLSelectElement,
  diffOut: document.getElementById("diff-out") as HTMLSpanElement,
  status: document.getElementById("status") as HTMLSpanElement,
  canvas: document.getElementById("view") as HTMLCanvasElement,
};

const viewer = new SceneViewer(
  el.canvas,
  el.canvas.clientWidth || 900,
  el.canvas.clientHeight || 600,
);
window.addEventListener("resize", () =>
  viewer.setSize(el.canvas.clientWidth || 900, el.canvas.clientHeight || 600),
);

function refresh(): void {
  const view = viewModel(state);
  el.submit.disabled = !canSubmit(state) || state.pending;
  el.banner.textContent = view.banner ?? "";
  el.banner.style.display = view.banner ? "block" : "none";

  el.legend.replaceChildren(
    ...view.legend.map((row) => {
      const item = document.createElement("li");
      const swatch = document.createElement("span");
      swatch.className = "swatch";
      swatch.style.background = `rgb(${row.color.map((c) => Math.round(c * 255)).join(",")})`;
      item.append(swatch, ` ${row.label} (${row.count})`);
      item.onclick = () => viewer.toggleIsolate(row.label);
      el.legend.append(item);
      return item;
    }),
  );

  const options = state.history.map((entry, i) => {
    const option = document.createElement("option");
    option.value = String(i);
    option.textContent = `#${i + 1}: ${entry.vocabulary.join(", ")}`;
    return option;
  });
  el.history.replaceChildren(
    ...state.history.map((entry, i) => {
      const item = document.createElement("li");
      item.textContent = `${entry.vocabulary.join(", ")} — ${entry.response.timing_ms.toFixed(0)} ms`;
      item.onclick = () => {
        state = setVocabulary(state, entry.vocabulary.join(", "));
        el.vocabulary.value = state.vocabularyText;
        refresh();
      };
      return item;
    }),
  );
  for (const select of [el.diffA, el.diffB]) {
    const keep = select.value;
    select.replaceChildren(...options.map((o) => o.cloneNode(true) as HTMLOptionElement));
    select.value = keep;
  }
  viewer.showAssignments(view.assignments.length ? view : null);
}

async function loadScenes(): Promise<void> {
  const scenes = await api.scenes();
  el.scenes.replaceChildren(
    ...scenes.map((s) => {
      const option = document.createElement("option");
      option.value = s.scene_id;
      option.textContent = `${s.scene_id} (${s.source_id}, ${s.point_count} pts)`;
      return option;
    }),
  );
  if (scenes.length) {
    await pickScene(scenes[0].scene_id);
  }
}

async function pickScene(sceneId: string): Promise<void> {
  state = selectScene(state, sceneId);
  viewer.setScene(await api.scene(sceneId));
  refresh();
}

async function submit(): Promise<void> {
  const sceneId = state.sceneId;
  if (!canSubmit(state) || sceneId === null) return;
  const labels = parseVocabulary(state.vocabularyText);
  const { state: inFlight, seq } = beginQuery(state);
  state = inFlight;
  refresh();
  try {
    const response = await api.query(sceneId, labels);
    state = applyResponse(state, seq, response, Date.now());
  } catch (err) {
    const message = err instanceof ApiError ? err.message : String(err);
    state = applyError(state, seq, message);
  }
  refresh();
}

function showDiff(): void {
  const a = state.history[Number(el.diffA.value)];
  const b = state.history[Number(el.diffB.value)];
  if (!a || !b) return;
  const diff = diffAssignments(a.response, b.response);
  el.diffOut.textContent = `${(diff.agreement * 100).toFixed(1)}% agreement`;
}

el.scenes.onchange = () => void pickScene(el.scenes.value);
el.vocabulary.oninput = () => {
  state = setVocabulary(state, el.vocabulary.value);
  refresh();
};
el.submit.onclick = () => void submit();
el.diffA.onchange = showDiff;
el.diffB.onchange = showDiff;

void (async () => {
  try {
    const health = await api.health();
    el.status.textContent = `model ${health.model_version}`;
    await loadScenes();
  } catch (err) {
    el.status.textContent = `service unavailable: ${String(err)}`;
  }
  refresh();
})();
