// Query-term highlighting inside evidence text. Escape first, mark second.

const STOPWORDS = new Set([
  "a", "an", "the", "is", "are", "was", "were", "do", "does", "did",
  "what", "which", "who", "when", "where", "why", "how", "of", "in", "on",
  "to", "and", "or",
]);

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function queryTerms(question: string): string[] {
  const words = question.toLowerCase().match(/[\p{L}\p{N}]+/gu) ?? [];
  const seen = new Set<string>();
  for (const w of words) {
    if (w.length >= 2 && !STOPWORDS.has(w)) seen.add(w);
  }
  return [...seen];
}

function escapeRegex(term: string): string {
  return term.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

/** Escaped HTML with <mark> around whole-word query-term matches. */
export function highlightTerms(text: string, question: string): string {
  const escaped = escapeHtml(text);
  const terms = queryTerms(question);
  if (terms.length === 0) return escaped;
  const pattern = new RegExp(
    `\\b(${terms.map(escapeRegex).join("|")})\\b`,
    "giu",
  );
  return escaped.replace(pattern, "<mark>$1</mark>");
}
