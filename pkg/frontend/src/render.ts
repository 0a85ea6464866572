// HTML renderers. Pure string-in/string-out so they test without a DOM;
// every number shown comes straight off the AskResponse.

import { escapeHtml, highlightTerms } from "./highlight.js";
import type { AskResponse, DocumentEntry } from "./types.js";

export function renderAnswerCard(resp: AskResponse): string {
  const answer = resp.answer;
  if (answer.answer_type === "no_answer") {
    return [
      '<div class="answer-card no-answer">',
      '<span class="badge badge-no-answer">no answer</span>',
      '<p class="answer-text muted">The pipeline found no answer in the top contexts.</p>',
      "</div>",
    ].join("");
  }
  const confidence = (answer.confidence * 100).toFixed(1);
  const defaulted = answer.confidence_defaulted
    ? ' <span class="badge badge-defaulted" title="backend returned no confidence">default</span>'
    : "";
  return [
    '<div class="answer-card">',
    `<span class="badge badge-${answer.answer_type}">${answer.answer_type}</span>`,
    `<span class="confidence">confidence ${confidence}%${defaulted}</span>`,
    `<p class="answer-text">${escapeHtml(answer.text)}</p>`,
    `<p class="answer-source">from context #${answer.rank_of_context} (${escapeHtml(answer.passage_id)})</p>`,
    "</div>",
  ].join("");
}

export function renderEvidence(resp: AskResponse): string {
  // Rows stay in API order: the ranking is the server's, not ours.
  const rows = resp.evidence.map((row, i) => {
    const page = row.page_index === null || row.page_index === undefined
      ? ""
      : `<span class="chip chip-page">p.${row.page_index + 1}</span>`;
    return [
      `<li class="evidence-row" data-passage-id="${escapeHtml(row.passage_id)}">`,
      `<span class="chip chip-score" title="retriever score">${row.score.toFixed(3)}</span>`,
      `<span class="chip chip-rank">#${i + 1}</span>`,
      `<span class="chip chip-category">${escapeHtml(row.category)}</span>`,
      page,
      `<p class="evidence-text">${highlightTerms(row.text, resp.question)}</p>`,
      "</li>",
    ].join("");
  });
  return `<ol class="evidence-list">${rows.join("")}</ol>`;
}

export function renderResult(resp: AskResponse): string {
  return [
    renderAnswerCard(resp),
    `<h3 class="evidence-heading">Evidence (${resp.retriever})</h3>`,
    renderEvidence(resp),
  ].join("");
}

export function renderDocumentOptions(docs: DocumentEntry[], selected: string | null): string {
  const placeholder = `<option value="" disabled${selected ? "" : " selected"}>pick a document</option>`;
  const options = docs.map((d) => {
    const label = d.title ? `${d.title} (${d.n_passages})` : `${d.doc_id} (${d.n_passages})`;
    const sel = d.doc_id === selected ? " selected" : "";
    return `<option value="${escapeHtml(d.doc_id)}"${sel}>${escapeHtml(label)}</option>`;
  });
  return placeholder + options.join("");
}

export function renderError(message: string): string {
  return `<div class="error-banner" role="alert">${escapeHtml(message)}</div>`;
}
