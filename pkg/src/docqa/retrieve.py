"""Per-document passage ranking: BM25 over an inverted index, dual-encoder
dot products, cross-encoder backend scores, evidence classification, and
retriever training-pair generation.

Indexing is per document (questions are posed against a single document, so
cross-document term statistics would only pollute IDF). Indexes are immutable
after build and all ranking calls are read-only.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import Document, Passage, QuestionRecord
from .text import normalize_tokens

logger = logging.getLogger(__name__)

RETRIEVERS = ("bm25", "dual_encoder", "cross_encoder")


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self) -> None:
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0,1], got {self.b}")


@dataclass
class InvertedIndex:
    """Term postings over one document's passages.

    ``passage_order`` fixes the document order used for deterministic
    tie-breaking; postings lists follow that order.
    """

    doc_id: str
    postings: dict[str, list[tuple[str, int]]]
    passage_lengths: dict[str, int]
    avg_len: float
    n_passages: int
    passage_order: list[str]

    def position(self, passage_id: str) -> int:
        return self._positions[passage_id]

    def __post_init__(self) -> None:
        self._positions = {pid: i for i, pid in enumerate(self.passage_order)}

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "postings": {t: [[pid, tf] for pid, tf in plist] for t, plist in self.postings.items()},
            "passage_lengths": self.passage_lengths,
            "avg_len": self.avg_len,
            "n_passages": self.n_passages,
            "passage_order": self.passage_order,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InvertedIndex":
        return cls(
            doc_id=d["doc_id"],
            postings={t: [(pid, int(tf)) for pid, tf in plist] for t, plist in d["postings"].items()},
            passage_lengths={k: int(v) for k, v in d["passage_lengths"].items()},
            avg_len=float(d["avg_len"]),
            n_passages=int(d["n_passages"]),
            passage_order=list(d["passage_order"]),
        )


@dataclass
class RankedList:
    """Passages of one document ordered by a retriever score (non-increasing,
    ties broken by document order)."""

    question_id: str
    entries: list[tuple[str, float]]
    retriever: str

    def __post_init__(self) -> None:
        if self.retriever not in RETRIEVERS:
            raise ValueError(f"unknown retriever: {self.retriever!r}")
        ids = [pid for pid, _ in self.entries]
        if len(ids) != len(set(ids)):
            raise ValueError("ranked list contains duplicate passage ids")
        scores = [s for _, s in self.entries]
        if any(a < b for a, b in zip(scores, scores[1:])):
            raise ValueError("ranked list scores must be non-increasing")

    @property
    def passage_ids(self) -> list[str]:
        return [pid for pid, _ in self.entries]

    def top(self, k: int) -> list[tuple[str, float]]:
        return self.entries[: max(0, k)]


def build_index(doc: Document) -> InvertedIndex:
    """Index normalize_tokens output per passage; immutable thereafter."""
    if not doc.passages:
        raise ValueError(f"cannot index empty document {doc.doc_id}")
    postings: dict[str, list[tuple[str, int]]] = {}
    lengths: dict[str, int] = {}
    order: list[str] = []
    for p in doc.passages:
        tokens = normalize_tokens(p.text)
        lengths[p.passage_id] = len(tokens)
        order.append(p.passage_id)
        counts: dict[str, int] = {}
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
        for t, tf in counts.items():
            postings.setdefault(t, []).append((p.passage_id, tf))
    n = len(order)
    avg_len = sum(lengths.values()) / n
    return InvertedIndex(
        doc_id=doc.doc_id,
        postings=postings,
        passage_lengths=lengths,
        avg_len=avg_len,
        n_passages=n,
        passage_order=order,
    )


def _ordered(
    scores: Mapping[str, float], positions: Mapping[str, int]
) -> list[tuple[str, float]]:
    return sorted(scores.items(), key=lambda kv: (-kv[1], positions[kv[0]]))


def bm25_rank(
    question: str,
    index: InvertedIndex,
    params: Bm25Params = Bm25Params(),
    question_id: str = "",
) -> RankedList:
    """Okapi BM25 with the non-negative ln(1 + ...) IDF.

    score(P) = sum over query token occurrences of
        IDF(t) * tf * (k1+1) / (tf + k1 * (1 - b + b * len(P)/avg_len))
    with IDF(t) = ln(1 + (N - n_t + 0.5) / (n_t + 0.5)). Every passage is
    returned, zero scores included, in full descending order.
    """
    n = index.n_passages
    scores = {pid: 0.0 for pid in index.passage_order}
    for term in normalize_tokens(question):
        plist = index.postings.get(term)
        if not plist:
            continue
        n_t = len(plist)
        idf = math.log(1 + (n - n_t + 0.5) / (n_t + 0.5))
        for pid, tf in plist:
            ratio = index.passage_lengths[pid] / index.avg_len if index.avg_len > 0 else 0.0
            denom = tf + params.k1 * (1 - params.b + params.b * ratio)
            scores[pid] += idf * tf * (params.k1 + 1) / denom
    entries = _ordered(scores, index._positions)
    return RankedList(question_id=question_id, entries=entries, retriever="bm25")


def dual_encoder_rank(
    q_vec: Sequence[float],
    p_vecs: Mapping[str, Sequence[float]],
    question_id: str = "",
) -> RankedList:
    """Inner-product scores, descending; the mapping's iteration order is
    taken as the document order for tie-breaking."""
    dim = len(q_vec)
    scores: dict[str, float] = {}
    positions: dict[str, int] = {}
    for i, (pid, vec) in enumerate(p_vecs.items()):
        if len(vec) != dim:
            raise ValueError(
                f"embedding dimension mismatch for passage {pid}: {len(vec)} != {dim}"
            )
        scores[pid] = sum(q * p for q, p in zip(q_vec, vec))
        positions[pid] = i
    entries = _ordered(scores, positions)
    return RankedList(question_id=question_id, entries=entries, retriever="dual_encoder")


def cross_encoder_rank(
    question: str,
    passages: Sequence[Passage],
    scorer: Callable[[Sequence[tuple[str, str]]], Sequence[float]],
    question_id: str = "",
    batch_size: int = 32,
) -> RankedList:
    """Rank by backend relevance probabilities.

    ``scorer`` takes (question, passage_text) pairs and returns one score in
    [0,1] per pair. Batching is internal; the output does not depend on
    batch_size.
    """
    from .backends import BackendProtocolError

    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    pairs = [(question, p.text) for p in passages]
    scores: list[float] = []
    for start in range(0, len(pairs), batch_size):
        batch = pairs[start : start + batch_size]
        out = list(scorer(batch))
        if len(out) != len(batch):
            raise BackendProtocolError(
                f"scorer returned {len(out)} scores for {len(batch)} pairs"
            )
        scores.extend(out)
    for p, s in zip(passages, scores):
        if not 0.0 <= s <= 1.0:
            raise BackendProtocolError(
                f"score outside [0,1] for passage {p.passage_id}: {s}"
            )
    positions = {p.passage_id: i for i, p in enumerate(passages)}
    entries = _ordered({p.passage_id: float(s) for p, s in zip(passages, scores)}, positions)
    return RankedList(question_id=question_id, entries=entries, retriever="cross_encoder")


def classify_evidence(ranked: RankedList, threshold: float = 0.5) -> set[str]:
    """Passages whose relevance probability clears the threshold (inclusive).

    Only cross-encoder scores are probabilities; anything else is a caller
    bug, not a unit mismatch to paper over.
    """
    if ranked.retriever != "cross_encoder":
        raise ValueError(
            f"classify_evidence needs probability scores; {ranked.retriever} scores are not probabilities"
        )
    return {pid for pid, score in ranked.entries if score >= threshold}


# ---------------------------------------------------------------------------
# Retriever training pairs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainingPairConfig:
    negatives_per_positive: int = 4
    hard_negative_source: str = "bm25_top"

    def __post_init__(self) -> None:
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be >= 1")
        if self.hard_negative_source not in ("bm25_top", "random"):
            raise ValueError(f"unknown hard_negative_source: {self.hard_negative_source!r}")


@dataclass(frozen=True)
class TrainingPair:
    question_id: str
    passage_id: str
    question: str
    passage: str
    label: int


def build_training_pairs(
    q: QuestionRecord,
    doc: Document,
    index: InvertedIndex,
    cfg: TrainingPairConfig = TrainingPairConfig(),
    params: Bm25Params = Bm25Params(),
    seed: int = 0,
) -> list[TrainingPair]:
    """Gold evidence as positives plus negatives_per_positive negatives each.

    Hard negatives are the top non-gold passages under BM25 (or a seeded
    random draw). If the document runs out of non-gold passages, all
    available are emitted with a warning.
    """
    if not q.gold_evidence:
        raise ValueError(f"question {q.question_id} has no gold evidence")
    texts = doc.texts_by_id()
    gold = [pid for pid in index.passage_order if pid in q.gold_evidence]
    wanted = len(gold) * cfg.negatives_per_positive

    if cfg.hard_negative_source == "bm25_top":
        ranking = bm25_rank(q.text, index, params, question_id=q.question_id)
        pool = [pid for pid in ranking.passage_ids if pid not in q.gold_evidence]
        negatives = pool[:wanted]
    else:
        pool = [pid for pid in index.passage_order if pid not in q.gold_evidence]
        rng = random.Random(seed)
        negatives = rng.sample(pool, min(wanted, len(pool)))

    if len(negatives) < wanted:
        logger.warning(
            "question %s: only %d non-gold passages for %d requested negatives",
            q.question_id, len(negatives), wanted,
        )

    pairs = [
        TrainingPair(q.question_id, pid, q.text, texts[pid], 1) for pid in gold
    ]
    pairs += [
        TrainingPair(q.question_id, pid, q.text, texts[pid], 0) for pid in negatives
    ]
    return pairs


def write_training_pairs_tsv(pairs: Iterable[TrainingPair], path: str | Path) -> None:
    """Tab-separated question_id, passage_id, label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(f"{p.question_id}\t{p.passage_id}\t{p.label}\n")


def write_training_pairs_jsonl(pairs: Iterable[TrainingPair], path: str | Path) -> None:
    """Full-text mirror consumable by an external trainer."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps({
                "question_id": p.question_id,
                "passage_id": p.passage_id,
                "question": p.question,
                "passage": p.passage,
                "label": p.label,
            }, sort_keys=True, ensure_ascii=False))
            f.write("\n")
