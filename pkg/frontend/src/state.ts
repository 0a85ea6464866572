// View state and the request-ordering discipline: a new submission
// invalidates everything before it, so stale responses can never clobber a
// newer one even if the network reorders them.

import type { AskResponse, Retriever } from "./types.js";

export const K_MIN = 1;
export const K_MAX = 10;

export interface ViewState {
  docId: string | null;
  question: string;
  k: number;
  retriever: Retriever;
  lastResponse: AskResponse | null;
  error: string | null;
  pending: boolean;
  requestSeq: number;
}

export function initialState(): ViewState {
  return {
    docId: null,
    question: "",
    k: 3,
    retriever: "bm25",
    lastResponse: null,
    error: null,
    pending: false,
    requestSeq: 0,
  };
}

export function clampK(k: number): number {
  return Math.min(K_MAX, Math.max(K_MIN, Math.round(k)));
}

export function setK(state: ViewState, k: number): ViewState {
  return { ...state, k: clampK(k) };
}

export function beginRequest(state: ViewState): { state: ViewState; seq: number } {
  const seq = state.requestSeq + 1;
  return { state: { ...state, requestSeq: seq, pending: true, error: null }, seq };
}

function isCurrent(state: ViewState, seq: number): boolean {
  return seq === state.requestSeq;
}

export function applyResponse(state: ViewState, seq: number, resp: AskResponse): ViewState {
  if (!isCurrent(state, seq)) return state; // stale: a newer ask is in flight
  return { ...state, lastResponse: resp, error: null, pending: false };
}

export function applyError(state: ViewState, seq: number, message: string): ViewState {
  if (!isCurrent(state, seq)) return state;
  // Keep the previous result on screen; the banner explains what failed.
  return { ...state, error: message, pending: false };
}
