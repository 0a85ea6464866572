// DOM wiring: one ViewState, one in-flight ask at a time (new submissions
// abort the previous request), results pane replaced wholesale.

import { ApiClient, ApiError } from "./api.js";
import {
  applyError,
  applyResponse,
  beginRequest,
  initialState,
  setK,
  type ViewState,
} from "./state.js";
import { renderDocumentOptions, renderError, renderResult } from "./render.js";
import type { Retriever } from "./types.js";

const api = new ApiClient("");
let state: ViewState = initialState();
let inflight: AbortController | null = null;

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function paint(): void {
  const result = el<HTMLDivElement>("result");
  const banner = el<HTMLDivElement>("banner");
  banner.innerHTML = state.error ? renderError(state.error) : "";
  el<HTMLSpanElement>("k-value").textContent = String(state.k);
  el<HTMLButtonElement>("ask-button").disabled = state.pending || !state.docId;
  if (state.pending) {
    result.classList.add("stale");
  } else {
    result.classList.remove("stale");
    result.innerHTML = state.lastResponse ? renderResult(state.lastResponse) : "";
  }
}

async function refreshDocuments(): Promise<void> {
  try {
    const docs = await api.listDocuments();
    el<HTMLSelectElement>("doc-picker").innerHTML = renderDocumentOptions(docs, state.docId);
  } catch (err) {
    state = { ...state, error: `could not list documents: ${message(err)}` };
    paint();
  }
}

function message(err: unknown): string {
  if (err instanceof ApiError) return err.message;
  if (err instanceof Error) return err.message;
  return String(err);
}

async function submitAsk(): Promise<void> {
  const { docId, question, k, retriever } = state;
  if (!docId || !question.trim()) return;
  inflight?.abort();
  inflight = new AbortController();
  const begun = beginRequest(state);
  state = begun.state;
  paint();
  try {
    const resp = await api.ask(docId, question, k, retriever, inflight.signal);
    state = applyResponse(state, begun.seq, resp);
  } catch (err) {
    if ((err as Error).name === "AbortError") return; // superseded
    state = applyError(state, begun.seq, message(err));
  }
  paint();
}

async function submitUpload(): Promise<void> {
  const fileInput = el<HTMLInputElement>("pdf-file");
  const sidecarInput = el<HTMLInputElement>("sidecar-file");
  const charsInput = el<HTMLInputElement>("chars-file");
  const file = fileInput.files?.[0];
  if (!file) return;
  const status = el<HTMLSpanElement>("upload-status");
  status.textContent = "uploading...";
  try {
    const docId = await api.uploadDocument(
      file,
      file.name,
      sidecarInput.files?.[0],
      charsInput.files?.[0],
    );
    status.textContent = `ingested as ${docId}`;
    state = { ...state, docId, error: null };
    await refreshDocuments();
    paint();
  } catch (err) {
    const detail = message(err);
    status.textContent = "";
    const hint = detail.includes("zero passages")
      ? " Try uploading a region sidecar alongside the PDF."
      : "";
    state = { ...state, error: `upload failed: ${detail}${hint}` };
    paint();
  }
}

function wire(): void {
  el<HTMLSelectElement>("doc-picker").addEventListener("change", (e) => {
    state = { ...state, docId: (e.target as HTMLSelectElement).value || null };
    paint();
  });
  el<HTMLInputElement>("question").addEventListener("input", (e) => {
    state = { ...state, question: (e.target as HTMLInputElement).value };
  });
  el<HTMLInputElement>("k-slider").addEventListener("input", (e) => {
    state = setK(state, Number((e.target as HTMLInputElement).value));
    paint();
    // Re-issue the ask so the result pane tracks the slider.
    if (state.lastResponse && state.docId && state.question.trim()) void submitAsk();
  });
  el<HTMLSelectElement>("retriever").addEventListener("change", (e) => {
    state = { ...state, retriever: (e.target as HTMLSelectElement).value as Retriever };
  });
  el<HTMLFormElement>("ask-form").addEventListener("submit", (e) => {
    e.preventDefault();
    void submitAsk();
  });
  el<HTMLButtonElement>("upload-button").addEventListener("click", () => {
    void submitUpload();
  });
  void refreshDocuments();
  paint();
}

document.addEventListener("DOMContentLoaded", wire);
