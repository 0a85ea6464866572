"""Stage orchestration: ingest -> index -> rank -> answer, plus the
evaluation harness and the training-data emitters.

Every stage with a neural counterpart has a deterministic offline path
(sidecar regions or geometric fallback; BM25; the reference answerer), so
the whole pipeline runs with no backend processes. Backends slot in through
the config URLs without changing any call site.
"""

from __future__ import annotations

import json
import logging
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from . import comprehend, extract, metrics, retrieve
from .backends import (
    BackendError,
    DetectBackend,
    EmbeddingBackend,
    GeneratorBackend,
    ScoringBackend,
)
from .comprehend import AnswerCandidate, answer_with_contexts, select_answer
from .config import PipelineConfig
from .corpus import Document, IngestResult, load_qasper, register_document
from .pdfio import DEFAULT_CHAR_COMMAND, run_char_command
from .retrieve import RankedList, TrainingPairConfig
from .store import DocumentStore

logger = logging.getLogger(__name__)

RECALL_KS = (1, 5, 10, 20)


class PipelineError(Exception):
    pass


class StageError(PipelineError):
    """A required stage (or its backend) failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class IngestError(PipelineError):
    pass


@dataclass
class AskResponse:
    doc_id: str
    question: str
    retriever: str
    answer: AnswerCandidate
    candidates: list[AnswerCandidate]
    evidence: list[dict]
    timings: dict[str, float] = field(default_factory=dict)

    def to_dict(self, include_timings: bool = True) -> dict:
        d = {
            "doc_id": self.doc_id,
            "question": self.question,
            "retriever": self.retriever,
            "answer": self.answer.to_dict(),
            "candidates": [c.to_dict() for c in self.candidates],
            "evidence": self.evidence,
        }
        if include_timings:
            d["timings"] = self.timings
        return d

    def canonical_json(self) -> bytes:
        """Deterministic byte form: everything except wall-clock timings."""
        return json.dumps(
            self.to_dict(include_timings=False), sort_keys=True, ensure_ascii=False
        ).encode("utf-8")


class Pipeline:
    """Composes the stages over a document store.

    Backend clients are constructed lazily from config URLs; tests inject
    fakes through the keyword arguments.
    """

    def __init__(
        self,
        config: PipelineConfig,
        store: DocumentStore | None = None,
        embedder: Callable[[Sequence[str]], list[list[float]]] | None = None,
        scorer: Callable[[Sequence[tuple[str, str]]], Sequence[float]] | None = None,
        generator: Callable[[str, str], tuple[str, float | None]] | None = None,
        detector: Callable[[str | Path], list[dict]] | None = None,
    ):
        self.config = config
        self.store = store or DocumentStore(config.data_dir)
        self._embedder = embedder
        self._scorer = scorer
        self._generator = generator
        self._detector = detector

    # -- backend wiring ------------------------------------------------------

    def _embed(self, texts: Sequence[str]) -> list[list[float]]:
        if self._embedder is None:
            if not self.config.embed_url:
                raise StageError("retrieve", "dual_encoder requires embed_url or an injected embedder")
            self._embedder = EmbeddingBackend(self.config.embed_url).embed
        return self._embedder(texts)

    def _score(self, pairs: Sequence[tuple[str, str]]) -> Sequence[float]:
        if self._scorer is None:
            if not self.config.score_url:
                raise StageError("retrieve", "cross_encoder requires score_url or an injected scorer")
            self._scorer = ScoringBackend(self.config.score_url).score_pairs
        return self._scorer(pairs)

    def _answerer(self) -> comprehend.Answerer:
        if self.config.answerer == "reference":
            return comprehend.reference_answerer
        if self._generator is None:
            if not self.config.generate_url:
                raise StageError("comprehend", "backend answerer requires generate_url")
            self._generator = GeneratorBackend(self.config.generate_url).generate
        return comprehend.make_backend_answerer(self._generator)

    def _detect(self, pdf_path: str | Path) -> list[dict]:
        if self._detector is None:
            if not self.config.detect_url:
                raise StageError("detect", "region detection requires detect_url, a sidecar, or fallback mode")
            self._detector = DetectBackend(self.config.detect_url).detect
        return self._detector(pdf_path)

    # -- ranking -------------------------------------------------------------

    def rank(
        self, doc: Document, question: str, retriever: str | None = None, question_id: str = ""
    ) -> RankedList:
        retriever = retriever or self.config.retriever
        if retriever == "bm25":
            index = self.store.load_index(doc.doc_id)
            return retrieve.bm25_rank(question, index, self.config.bm25_params, question_id)
        if retriever == "dual_encoder":
            try:
                vectors = self._embed([question] + [p.text for p in doc.passages])
            except BackendError as exc:
                raise StageError("retrieve", f"embedding backend failed: {exc}") from exc
            q_vec, p_list = vectors[0], vectors[1:]
            p_vecs = {p.passage_id: v for p, v in zip(doc.passages, p_list)}
            return retrieve.dual_encoder_rank(q_vec, p_vecs, question_id)
        if retriever == "cross_encoder":
            try:
                return retrieve.cross_encoder_rank(
                    question, doc.passages, self._score, question_id
                )
            except BackendError as exc:
                raise StageError("retrieve", f"scoring backend failed: {exc}") from exc
        raise StageError("retrieve", f"unknown retriever {retriever!r}")

    # -- ask -----------------------------------------------------------------

    def ask(
        self,
        doc_id: str,
        question: str,
        k: int | None = None,
        retriever: str | None = None,
    ) -> AskResponse:
        k = k if k is not None else self.config.k
        retriever = retriever or self.config.retriever
        timings: dict[str, float] = {}

        t0 = time.perf_counter()
        doc = self.store.load_document(doc_id)  # raises DocumentNotFound
        texts = doc.texts_by_id()
        timings["load"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        ranked = self.rank(doc, question, retriever)
        timings["retrieve"] = time.perf_counter() - t0

        t0 = time.perf_counter()
        try:
            candidates = answer_with_contexts(question, ranked, k, self._answerer(), texts)
        except comprehend.ComprehendError as exc:
            raise StageError("comprehend", str(exc)) from exc
        answer = select_answer(candidates)
        timings["comprehend"] = time.perf_counter() - t0

        evidence = [
            {
                "passage_id": pid,
                "score": score,
                "text": texts[pid],
                "category": doc.passage_by_id(pid).category,
                "page_index": doc.passage_by_id(pid).page_index,
            }
            for pid, score in ranked.top(k)
        ]
        return AskResponse(
            doc_id=doc_id,
            question=question,
            retriever=retriever,
            answer=answer,
            candidates=candidates,
            evidence=evidence,
            timings=timings,
        )

    # -- ingestion -----------------------------------------------------------

    def ingest_pdf(
        self,
        pdf_path: str | Path,
        sidecar_path: str | Path | None = None,
        chars_path: str | Path | None = None,
        region_source: str = "auto",
    ) -> str:
        """Extract, register, index, and persist one PDF. Returns the doc_id.

        Region sources: "sidecar" (JSON next to the PDF or given explicitly),
        "detect" (backend), "fallback" (geometric), "auto" (sidecar if
        present, else detect if configured, else fallback).
        """
        pdf_path = Path(pdf_path)
        if not pdf_path.is_file():
            raise IngestError(f"PDF not found: {pdf_path}")

        chars = self._load_chars(pdf_path, chars_path)
        if not chars:
            raise IngestError(f"no characters extracted from {pdf_path}")
        page_bounds = self._page_bounds(chars)

        if sidecar_path is None:
            default_sidecar = pdf_path.with_suffix(".regions.json")
            if default_sidecar.is_file():
                sidecar_path = default_sidecar

        if region_source == "auto":
            if sidecar_path is not None:
                region_source = "sidecar"
            elif self.config.detect_url or self._detector is not None:
                region_source = "detect"
            else:
                region_source = "fallback"

        if region_source == "sidecar":
            if sidecar_path is None:
                raise IngestError("region_source=sidecar but no sidecar file was found")
            regions = extract.load_region_sidecar(sidecar_path, page_bounds)
        elif region_source == "detect":
            try:
                raw = self._detect(pdf_path)
            except BackendError as exc:
                raise StageError("detect", f"detect backend failed: {exc}") from exc
            regions = self._regions_from_payload(raw, page_bounds)
        elif region_source == "fallback":
            regions = extract.fallback_regions(chars)
        else:
            raise IngestError(f"unknown region_source {region_source!r}")

        passages = extract.assemble_passages(regions, chars, keep=self.config.keep_categories)
        if not passages:
            raise IngestError(
                "extraction produced zero passages; retry with region_source='fallback' "
                "or check the sidecar categories"
            )
        doc = register_document(passages, title=pdf_path.stem, source="pdf_extracted")

        first_seen = not self.store.has_document(doc.doc_id)
        self.store.save_document(doc)
        self.store.save_index(retrieve.build_index(doc))
        if first_seen:
            shutil.copyfile(pdf_path, self.store.raw_path(doc.doc_id, ".pdf"))
            extract.write_region_sidecar(regions, self.store.raw_path(doc.doc_id, ".regions.json"))
            extract.write_char_dump(chars, self.store.raw_path(doc.doc_id, ".chars.jsonl"))
        logger.info("ingested %s as %s (%d passages)", pdf_path.name, doc.doc_id, len(passages))
        return doc.doc_id

    def _load_chars(self, pdf_path: Path, chars_path: str | Path | None) -> list[extract.CharBox]:
        if chars_path is not None:
            return extract.load_char_dump(chars_path)
        default_dump = pdf_path.with_suffix(".chars.jsonl")
        if default_dump.is_file():
            return extract.load_char_dump(default_dump)
        command = self.config.char_cmd or DEFAULT_CHAR_COMMAND
        out = pdf_path.with_suffix(".chars.jsonl")
        return run_char_command(pdf_path, out, command)

    @staticmethod
    def _page_bounds(chars: Sequence[extract.CharBox]) -> dict[int, tuple[float, float]]:
        bounds: dict[int, tuple[float, float]] = {}
        for c in chars:
            w, h = bounds.get(c.page_index, (0.0, 0.0))
            bounds[c.page_index] = (max(w, c.x1), max(h, c.y1))
        # Pad to the nearest plausible margin so clamping never clips glyphs.
        return {p: (w + 72.0, h + 72.0) for p, (w, h) in bounds.items()}

    @staticmethod
    def _regions_from_payload(raw: list[dict], page_bounds) -> list[extract.RegionBox]:
        import tempfile

        with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as f:
            json.dump(raw, f)
            tmp = f.name
        try:
            return extract.load_region_sidecar(tmp, page_bounds)
        finally:
            Path(tmp).unlink(missing_ok=True)

    def ingest_dataset(self, path: str | Path, split: str) -> IngestResult:
        """Ingest a QASPER-format split: persists the split files plus every
        document and its index, so ask() works on dataset papers too."""
        result = load_qasper(path, split)
        self.store.save_split(split, result.documents, result.questions)
        for doc in result.documents:
            self.store.save_document(doc)
            self.store.save_index(retrieve.build_index(doc))
        return result

    # -- evaluation ------------------------------------------------------------

    def run_eval(
        self,
        split: str,
        recall_only: bool = False,
        selection: str = "best_of_k",
        ks: Sequence[int] = RECALL_KS,
        out_dir: str | Path | None = None,
    ) -> metrics.EvalReport:
        """Score retrieval recall, Answer-F1, and (cross-encoder) Evidence-F1
        over an ingested split, writing report.json/report.txt when out_dir
        is given. Deterministic for a fixed config and seed."""
        if selection not in ("best_of_k", "confidence"):
            raise ValueError(f"unknown selection mode {selection!r}")
        documents, questions = self.store.load_split(split)
        docs_by_id = {d.doc_id: d for d in documents}

        recall_values: dict[int, list[tuple[str, float]]] = {k: [] for k in ks}
        f1_overall: list[tuple[str, float]] = []
        f1_per_type: dict[str, list[tuple[str, float]]] = {}
        evidence_scores: list[tuple[str, float]] = []
        with_evidence = without_evidence = unresolved_strings = 0
        answerer = None if recall_only else self._answerer()

        for q in questions:
            doc = docs_by_id.get(q.doc_id)
            if doc is None:
                logger.warning("question %s references unknown document %s", q.question_id, q.doc_id)
                continue
            unresolved_strings += len(q.unresolved_evidence)
            ranked = self.rank(doc, q.text, question_id=q.question_id)

            if q.gold_evidence:
                with_evidence += 1
                for k in ks:
                    recall_values[k].append(
                        (q.doc_id, metrics.recall_at_percent(ranked, q.gold_evidence, k))
                    )
                if self.config.retriever == "cross_encoder":
                    predicted = retrieve.classify_evidence(ranked, self.config.threshold)
                    evidence_scores.append(
                        (q.doc_id, metrics.evidence_f1(predicted, q.gold_evidence))
                    )
            else:
                without_evidence += 1

            if recall_only:
                continue
            candidates = answer_with_contexts(
                q.text, ranked, self.config.k, answerer, doc.texts_by_id()
            )
            if selection == "confidence":
                scored = [metrics.answer_f1(select_answer(candidates).text, q.gold_answers)]
            else:
                scored = [metrics.answer_f1(c.text, q.gold_answers) for c in candidates]
            overall, per_type = max(scored, key=lambda pair: pair[0])
            f1_overall.append((q.doc_id, overall))
            for answer_type, value in per_type.items():
                f1_per_type.setdefault(answer_type, []).append((q.doc_id, value))

        report = metrics.EvalReport()
        report.counts[split] = {"documents": len(documents), "questions": len(questions)}
        report.coverage[split] = {
            "questions_with_evidence": with_evidence,
            "questions_without_evidence": without_evidence,
            "unresolved_evidence_strings": unresolved_strings,
        }
        report.config = {
            "retriever": self.config.retriever,
            "answerer": "none" if recall_only else self.config.answerer,
            "k": self.config.k,
            "selection": "none" if recall_only else selection,
            "recall_aggregation": "by_document_then_mean",
        }
        for k in ks:
            if recall_values[k]:
                report.recall_at.setdefault(split, {})[k] = metrics.aggregate(
                    recall_values[k], "by_document_then_mean"
                )
                report.recall_at_flat.setdefault(split, {})[k] = metrics.aggregate(
                    recall_values[k], "flat_mean"
                )
        if evidence_scores:
            report.evidence_f1[split] = metrics.aggregate(evidence_scores, "flat_mean")
        if f1_overall:
            report.overall[split] = metrics.aggregate(f1_overall, "flat_mean")
            for answer_type, values in sorted(f1_per_type.items()):
                report.per_type.setdefault(answer_type, {})[split] = metrics.aggregate(
                    values, "flat_mean"
                )

        if out_dir is not None:
            out_dir = Path(out_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / f"report_{split}.json").write_text(report.to_json() + "\n", encoding="utf-8")
            (out_dir / f"report_{split}.txt").write_text(report.render_text(), encoding="utf-8")
        return report

    # -- training-data emitters -------------------------------------------------

    def emit_training_pairs(
        self,
        split: str,
        out_dir: str | Path,
        cfg: TrainingPairConfig = TrainingPairConfig(),
    ) -> int:
        """Write retriever training pairs (TSV + JSONL mirror) for a split."""
        documents, questions = self.store.load_split(split)
        docs_by_id = {d.doc_id: d for d in documents}
        pairs = []
        for q in questions:
            doc = docs_by_id.get(q.doc_id)
            if doc is None or not q.gold_evidence:
                continue
            index = self.store.load_index(doc.doc_id)
            pairs.extend(
                retrieve.build_training_pairs(
                    q, doc, index, cfg, self.config.bm25_params, seed=self.config.seed
                )
            )
        out_dir = Path(out_dir)
        retrieve.write_training_pairs_tsv(pairs, out_dir / f"pairs_{split}.tsv")
        retrieve.write_training_pairs_jsonl(pairs, out_dir / f"pairs_{split}.jsonl")
        return len(pairs)

    def emit_weak_examples(
        self, split: str, out_path: str | Path, samples_per_question: int = 1
    ) -> int:
        """Write weak-supervision finetuning examples sampled by retrieval score."""
        documents, questions = self.store.load_split(split)
        docs_by_id = {d.doc_id: d for d in documents}
        examples = []
        for i, q in enumerate(questions):
            doc = docs_by_id.get(q.doc_id)
            if doc is None or not q.gold_answers:
                continue
            ranked = self.rank(doc, q.text, question_id=q.question_id)
            examples.extend(
                comprehend.weak_supervision_sampler(
                    q, ranked, samples_per_question, self.config.seed + i, doc.texts_by_id()
                )
            )
        comprehend.write_weak_examples(examples, out_path)
        return len(examples)
