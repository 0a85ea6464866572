"""Answer prediction over retrieved contexts.

One candidate per top-K context comes from a pluggable answerer (the
deterministic reference answerer, or a generator backend adapter); the final
answer is picked by a gold-free confidence rule. Weak-supervision examples
sample contexts in proportion to retrieval scores.
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .corpus import QuestionRecord
from .metrics import token_prf
from .retrieve import RankedList
from .text import normalize_tokens, split_sentences

logger = logging.getLogger(__name__)

CANDIDATE_TYPES = ("extractive", "abstractive", "boolean", "no_answer")

BOOLEAN_LEADS = frozenset(
    {"is", "are", "do", "does", "did", "can", "was", "were", "has", "have"}
)
_WH_WORDS = frozenset(
    {"what", "which", "who", "whom", "whose", "when", "where", "why", "how"}
)
_SCORE_EPS = 1e-6

# An answerer maps (question, context) to a candidate.
Answerer = Callable[[str, str], "AnswerCandidate"]


class ComprehendError(Exception):
    """Raised when no context produced any candidate."""


@dataclass(frozen=True)
class AnswerCandidate:
    """A typed answer with confidence and source context provenance."""

    text: str
    answer_type: str
    confidence: float
    passage_id: str = ""
    rank_of_context: int = 1
    confidence_defaulted: bool = False

    def __post_init__(self) -> None:
        if self.answer_type not in CANDIDATE_TYPES:
            raise ValueError(f"unknown candidate type: {self.answer_type!r}")
        if self.answer_type == "no_answer" and self.text:
            raise ValueError("no_answer candidates carry empty text")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0,1]: {self.confidence}")
        if self.rank_of_context < 1:
            raise ValueError("rank_of_context is 1-based")

    def to_dict(self) -> dict:
        return {
            "text": self.text,
            "answer_type": self.answer_type,
            "confidence": self.confidence,
            "passage_id": self.passage_id,
            "rank_of_context": self.rank_of_context,
            "confidence_defaulted": self.confidence_defaulted,
        }


def no_answer(confidence: float = 0.0) -> AnswerCandidate:
    return AnswerCandidate(text="", answer_type="no_answer", confidence=confidence)


def answer_with_contexts(
    question: str,
    ranked: RankedList,
    k: int,
    answerer: Answerer,
    passages: Mapping[str, str],
) -> list[AnswerCandidate]:
    """One candidate per top-min(k, |ranked|) context.

    A failing backend call turns that context into a zero-confidence
    no_answer candidate (logged); if every context fails, raise.
    """
    from .backends import BackendError

    if k < 1:
        raise ValueError("k must be >= 1")
    if not ranked.entries:
        raise ValueError("cannot answer over an empty ranking")

    candidates: list[AnswerCandidate] = []
    failures = 0
    for rank, (pid, _score) in enumerate(ranked.top(k), start=1):
        try:
            cand = answerer(question, passages[pid])
        except BackendError as exc:
            logger.warning("answer backend failed on context %s (rank %d): %s", pid, rank, exc)
            failures += 1
            cand = no_answer()
        candidates.append(replace(cand, passage_id=pid, rank_of_context=rank))
    if failures == len(candidates):
        raise ComprehendError(f"answer backend failed on all {failures} contexts")
    return candidates


def select_answer(candidates: Sequence[AnswerCandidate]) -> AnswerCandidate:
    """Highest confidence among answerable candidates; ties go to the lower
    context rank; all-no_answer falls back to the rank-1 no_answer."""
    if not candidates:
        raise ValueError("select_answer requires at least one candidate")
    answerable = [c for c in candidates if c.answer_type != "no_answer"]
    if answerable:
        return min(answerable, key=lambda c: (-c.confidence, c.rank_of_context))
    return min(candidates, key=lambda c: c.rank_of_context)


# ---------------------------------------------------------------------------
# Reference answerer (deterministic, backend-free)
# ---------------------------------------------------------------------------


def _content_tokens(question_tokens: Sequence[str]) -> list[str]:
    return [t for t in question_tokens if t not in BOOLEAN_LEADS and t not in _WH_WORDS]


def reference_answerer(question: str, context: str) -> AnswerCandidate:
    """Deterministic stand-in for a neural reader.

    Boolean-form questions (leading auxiliary verb) answer yes when at least
    half the question's content tokens appear in the context, with the
    overlap fraction as confidence. Anything else extracts the context
    sentence with maximal token-F1 against the content tokens.
    """
    if not context.strip():
        return no_answer()
    q_tokens = normalize_tokens(question)
    content = _content_tokens(q_tokens)
    ctx_tokens = set(normalize_tokens(context))

    if q_tokens and q_tokens[0] in BOOLEAN_LEADS:
        distinct = set(content)
        overlap = len(distinct & ctx_tokens) / len(distinct) if distinct else 0.0
        return AnswerCandidate(
            text="yes" if overlap >= 0.5 else "no",
            answer_type="boolean",
            confidence=overlap,
        )

    best_sentence, best_f1 = "", -1.0
    for sentence in split_sentences(context):
        f1 = token_prf(normalize_tokens(sentence), content)[2]
        if f1 > best_f1:
            best_sentence, best_f1 = sentence, f1
    if not best_sentence:
        return no_answer()
    return AnswerCandidate(
        text=best_sentence, answer_type="extractive", confidence=max(best_f1, 0.0)
    )


def classify_generated(answer: str, context: str) -> tuple[str, str]:
    """Map a backend's raw answer string to (canonical_text, answer_type)."""
    text = answer.strip()
    lowered = text.lower().rstrip(".!")
    if not text or lowered in ("no answer", "noanswer", "unanswerable"):
        return "", "no_answer"
    if lowered in ("yes", "no"):
        return lowered, "boolean"
    if text in context:
        return text, "extractive"
    return text, "abstractive"


def make_backend_answerer(
    generate: Callable[[str, str], tuple[str, float | None]]
) -> Answerer:
    """Adapt a generator backend into an answerer.

    A missing confidence defaults to 0.5 and is flagged on the candidate.
    """

    def answerer(question: str, context: str) -> AnswerCandidate:
        raw, confidence = generate(question, context)
        text, answer_type = classify_generated(raw, context)
        defaulted = confidence is None
        if defaulted:
            confidence = 0.5
        return AnswerCandidate(
            text=text,
            answer_type=answer_type,
            confidence=float(confidence),
            confidence_defaulted=defaulted,
        )

    return answerer


# ---------------------------------------------------------------------------
# Weak supervision
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeakExample:
    question: str
    context: str
    target: str
    sampled_rank: int
    sample_prob: float


def sampling_probabilities(ranked: RankedList) -> list[float]:
    """Score-proportional probabilities with an epsilon floor.

    p_i = (s_i + eps) / sum(s_j + eps); all-zero scores degrade to uniform.
    """
    scores = [s for _, s in ranked.entries]
    if any(s < 0 for s in scores):
        raise ValueError("sampling requires non-negative scores")
    shifted = [s + _SCORE_EPS for s in scores]
    total = sum(shifted)
    return [s / total for s in shifted]


def weak_supervision_sampler(
    q: QuestionRecord,
    ranked: RankedList,
    n_samples: int,
    seed: int,
    passages: Mapping[str, str],
) -> list[WeakExample]:
    """Draw contexts with score-proportional probability, pairing each draw
    with a gold answer (cycled). Reproducible given the seed."""
    if not q.gold_answers:
        raise ValueError(f"question {q.question_id} has no gold answers")
    probs = sampling_probabilities(ranked)
    rng = random.Random(seed)
    draws = rng.choices(range(len(probs)), weights=probs, k=n_samples)
    examples = []
    for j, i in enumerate(draws):
        pid = ranked.entries[i][0]
        gold = q.gold_answers[j % len(q.gold_answers)]
        examples.append(
            WeakExample(
                question=q.text,
                context=passages[pid],
                target=gold.text,
                sampled_rank=i + 1,
                sample_prob=probs[i],
            )
        )
    return examples


def write_weak_examples(examples: Iterable[WeakExample], path: str | Path) -> None:
    """JSON-lines, one finetuning example per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for ex in examples:
            f.write(json.dumps({
                "question": ex.question,
                "context": ex.context,
                "target": ex.target,
                "sampled_rank": ex.sampled_rank,
                "sample_prob": ex.sample_prob,
            }, sort_keys=True, ensure_ascii=False))
            f.write("\n")
