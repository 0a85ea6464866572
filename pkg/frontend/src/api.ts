// Thin fetch client for the documented HTTP API; no other endpoints.

import type { AskResponse, DocumentEntry, Retriever } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (typeof body?.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return `HTTP ${res.status}`;
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async listDocuments(): Promise<DocumentEntry[]> {
    const res = await fetch(this.url("/documents"));
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    const body = await res.json();
    return body.documents as DocumentEntry[];
  }

  async ask(
    docId: string,
    question: string,
    k: number,
    retriever: Retriever,
    signal?: AbortSignal,
  ): Promise<AskResponse> {
    const res = await fetch(this.url(`/documents/${encodeURIComponent(docId)}/ask`), {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ question, k, retriever }),
      signal,
    });
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as AskResponse;
  }

  async uploadDocument(file: Blob, filename: string, sidecar?: Blob, chars?: Blob): Promise<string> {
    const form = new FormData();
    form.append("file", file, filename);
    if (sidecar) form.append("sidecar", sidecar, "regions.json");
    if (chars) form.append("chars", chars, "chars.jsonl");
    const res = await fetch(this.url("/documents"), { method: "POST", body: form });
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    const body = await res.json();
    return body.doc_id as string;
  }
}
