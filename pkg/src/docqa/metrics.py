"""Evaluation arithmetic: token/set F1 kernels, Answer-F1, Evidence-F1,
top-K% retrieval recall, and report aggregation.

One kernel serves every token-level score in the package (extraction
precision/recall, Answer-F1) and one serves every set-level score
(Evidence-F1), so the numbers are mutually consistent.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .text import normalize_tokens

if TYPE_CHECKING:
    from .corpus import GoldAnswer
    from .retrieve import RankedList


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------


def token_prf(pred_tokens: Sequence[str], gold_tokens: Sequence[str]) -> tuple[float, float, float]:
    """Multiset precision/recall/F1 over token lists.

    Both empty -> (1, 1, 1); exactly one empty -> (0, 0, 0).
    """
    if not pred_tokens and not gold_tokens:
        return 1.0, 1.0, 1.0
    if not pred_tokens or not gold_tokens:
        return 0.0, 0.0, 0.0
    common = Counter(pred_tokens) & Counter(gold_tokens)
    same = sum(common.values())
    if same == 0:
        return 0.0, 0.0, 0.0
    precision = same / len(pred_tokens)
    recall = same / len(gold_tokens)
    f1 = 2 * precision * recall / (precision + recall)
    return precision, recall, f1


def token_f1(prediction: str, reference: str) -> float:
    """Token-level F1 between two strings after normalization."""
    return token_prf(normalize_tokens(prediction), normalize_tokens(reference))[2]


def set_prf(predicted: frozenset | set, gold: frozenset | set) -> tuple[float, float, float]:
    """Set precision/recall/F1. Both empty -> 1; exactly one empty -> 0."""
    if not predicted and not gold:
        return 1.0, 1.0, 1.0
    if not predicted or not gold:
        return 0.0, 0.0, 0.0
    same = len(set(predicted) & set(gold))
    if same == 0:
        return 0.0, 0.0, 0.0
    precision = same / len(predicted)
    recall = same / len(gold)
    return precision, recall, 2 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# Answer / evidence metrics
# ---------------------------------------------------------------------------


def answer_f1(prediction: str, references: Sequence["GoldAnswer"]) -> tuple[float, dict[str, float]]:
    """Token F1 of ``prediction`` against typed references.

    Returns (overall, per_type) where per_type holds, for each answer type
    present in the references, the max F1 over that type's references, and
    overall is the max over all references.
    """
    if not references:
        raise ValueError("answer_f1 requires at least one reference")
    pred_tokens = normalize_tokens(prediction)
    per_type: dict[str, float] = {}
    overall = 0.0
    for ref in references:
        f1 = token_prf(pred_tokens, normalize_tokens(ref.text))[2]
        per_type[ref.answer_type] = max(per_type.get(ref.answer_type, 0.0), f1)
        overall = max(overall, f1)
    return overall, per_type


def evidence_f1(predicted: Iterable[str], gold: Iterable[str]) -> float:
    """Set F1 between classified and gold evidence passage ids."""
    return set_prf(set(predicted), set(gold))[2]


def recall_at_percent(ranked: "RankedList", gold: Iterable[str], k_percent: float) -> float:
    """Fraction of gold evidence inside the top max(1, ceil(K% of N)) passages.

    ``ranked`` must cover the document's passages; a question with empty gold
    is the caller's job to exclude (raises here).
    """
    gold = set(gold)
    if not gold:
        raise ValueError("recall_at_percent requires non-empty gold evidence")
    n = len(ranked.entries)
    if n == 0:
        raise ValueError("recall_at_percent requires a non-empty ranking")
    m = max(1, math.ceil(k_percent * n / 100))
    top = {pid for pid, _ in ranked.entries[:m]}
    return len(gold & top) / len(gold)


def aggregate(values: Sequence[tuple[str, float]], grouping: str = "flat_mean") -> float:
    """Fold per-question (doc_id, value) pairs into one cell.

    ``by_document_then_mean``: mean within each document's questions, then
    mean over documents. ``flat_mean``: plain mean over questions.
    """
    if not values:
        raise ValueError("aggregate requires at least one value")
    if grouping == "flat_mean":
        return sum(v for _, v in values) / len(values)
    if grouping == "by_document_then_mean":
        per_doc: dict[str, list[float]] = {}
        for doc_id, v in values:
            per_doc.setdefault(doc_id, []).append(v)
        doc_means = [sum(vs) / len(vs) for vs in per_doc.values()]
        return sum(doc_means) / len(doc_means)
    raise ValueError(f"unknown grouping: {grouping!r}")


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------

RECALL_KS = (1, 5, 10, 20)
_TYPE_ROWS = ("extractive", "abstractive", "boolean")


@dataclass
class EvalReport:
    """Cells mirror the paper-style tables: per-type and overall Answer-F1,
    Evidence-F1, and top-K% recall, each keyed by split.

    Values are stored in [0,1]; rendering multiplies by 100. Recall cells use
    the by-document mean (each document weighted equally); ``recall_at_flat``
    keeps the question-weighted alternative and the text report labels both.
    """

    per_type: dict[str, dict[str, float]] = field(default_factory=dict)
    overall: dict[str, float] = field(default_factory=dict)
    evidence_f1: dict[str, float] = field(default_factory=dict)
    recall_at: dict[str, dict[int, float]] = field(default_factory=dict)
    recall_at_flat: dict[str, dict[int, float]] = field(default_factory=dict)
    counts: dict[str, dict[str, int]] = field(default_factory=dict)
    coverage: dict[str, dict[str, int]] = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def splits(self) -> list[str]:
        keys = set(self.overall) | set(self.recall_at) | set(self.evidence_f1) | set(self.counts)
        return sorted(keys)

    def to_dict(self) -> dict:
        return {
            "per_type": self.per_type,
            "overall": self.overall,
            "evidence_f1": self.evidence_f1,
            "recall_at": {s: {str(k): v for k, v in ks.items()} for s, ks in self.recall_at.items()},
            "recall_at_flat": {
                s: {str(k): v for k, v in ks.items()} for s, ks in self.recall_at_flat.items()
            },
            "counts": self.counts,
            "coverage": self.coverage,
            "config": self.config,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        report = cls(
            per_type=d.get("per_type", {}),
            overall=d.get("overall", {}),
            evidence_f1=d.get("evidence_f1", {}),
            recall_at={s: {int(k): v for k, v in ks.items()} for s, ks in d.get("recall_at", {}).items()},
            recall_at_flat={
                s: {int(k): v for k, v in ks.items()} for s, ks in d.get("recall_at_flat", {}).items()
            },
            counts=d.get("counts", {}),
            coverage=d.get("coverage", {}),
            config=d.get("config", {}),
        )
        return report

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def render_text(self) -> str:
        """Aligned plain-text tables (values x100)."""
        splits = self.splits()
        lines: list[str] = []

        def cell(value: float | None) -> str:
            return f"{value * 100:8.2f}" if value is not None else f"{'--':>8}"

        if self.overall or self.per_type:
            lines.append("Answer-F1 (question mean)")
            header = f"{'type':<12}" + "".join(f"{s:>10}" for s in splits)
            lines.append(header)
            for row in _TYPE_ROWS:
                vals = [self.per_type.get(row, {}).get(s) for s in splits]
                if all(v is None for v in vals):
                    continue
                lines.append(f"{row:<12}" + "".join(f"{cell(v):>10}" for v in vals))
            lines.append(
                f"{'overall':<12}" + "".join(f"{cell(self.overall.get(s)):>10}" for s in splits)
            )
            lines.append("")

        if self.evidence_f1:
            lines.append("Evidence-F1 (threshold 0.5)")
            lines.append(f"{'':<12}" + "".join(f"{s:>10}" for s in splits))
            lines.append(
                f"{'evidence':<12}"
                + "".join(f"{cell(self.evidence_f1.get(s)):>10}" for s in splits)
            )
            lines.append("")

        if self.recall_at:
            lines.append("Retrieval recall at top-K% (by-document mean; flat question mean in parens)")
            lines.append(f"{'K%':<6}" + "".join(f"{s:>22}" for s in splits))
            ks = sorted({k for per in self.recall_at.values() for k in per})
            for k in ks:
                row = f"{k:<6}"
                for s in splits:
                    v = self.recall_at.get(s, {}).get(k)
                    vf = self.recall_at_flat.get(s, {}).get(k)
                    pair = (
                        f"{v * 100:7.2f} ({vf * 100:6.2f})"
                        if v is not None and vf is not None
                        else f"{'--':>15}"
                    )
                    row += f"{pair:>22}"
                lines.append(row)
            lines.append("")

        for s in splits:
            c = self.counts.get(s, {})
            cov = self.coverage.get(s, {})
            if c or cov:
                lines.append(
                    f"[{s}] documents={c.get('documents', 0)} questions={c.get('questions', 0)} "
                    f"evidence: resolved={cov.get('questions_with_evidence', 0)} "
                    f"excluded_from_recall={cov.get('questions_without_evidence', 0)} "
                    f"unresolved_strings={cov.get('unresolved_evidence_strings', 0)}"
                )
        if self.config:
            lines.append("")
            lines.append(
                "mode: " + ", ".join(f"{k}={self.config[k]}" for k in sorted(self.config))
            )
        return "\n".join(lines) + "\n"


def merge_reports(reports: Sequence[EvalReport]) -> EvalReport:
    """Combine single-split reports into one multi-column report."""
    merged = EvalReport()
    for r in reports:
        for t, per_split in r.per_type.items():
            merged.per_type.setdefault(t, {}).update(per_split)
        merged.overall.update(r.overall)
        merged.evidence_f1.update(r.evidence_f1)
        for s, ks in r.recall_at.items():
            merged.recall_at.setdefault(s, {}).update(ks)
        for s, ks in r.recall_at_flat.items():
            merged.recall_at_flat.setdefault(s, {}).update(ks)
        merged.counts.update(r.counts)
        merged.coverage.update(r.coverage)
        merged.config.update(r.config)
    return merged
