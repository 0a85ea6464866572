// Wire types mirroring the HTTP API. The UI renders these verbatim and
// computes no scores of its own.

export type Retriever = "bm25" | "dual_encoder" | "cross_encoder";

export type AnswerType = "extractive" | "abstractive" | "boolean" | "no_answer";

export interface AnswerCandidate {
  text: string;
  answer_type: AnswerType;
  confidence: number;
  passage_id: string;
  rank_of_context: number;
  confidence_defaulted: boolean;
}

export interface EvidenceRow {
  passage_id: string;
  score: number;
  text: string;
  category: string;
  page_index: number | null;
}

export interface AskResponse {
  doc_id: string;
  question: string;
  retriever: Retriever;
  answer: AnswerCandidate;
  candidates: AnswerCandidate[];
  evidence: EvidenceRow[];
  timings?: Record<string, number>;
}

export interface DocumentEntry {
  doc_id: string;
  title: string;
  n_passages: number;
  source: string;
}
