"""Document/passage/question data model and QASPER ingestion.

Everything downstream (extraction, retrieval, answering, metrics) consumes
the types defined here. Corpus objects are immutable after construction and
safe for concurrent reads; ingestion itself is single-threaded per file.

On-disk formats:
  * corpus file: JSON lines, one document object per line;
  * questions file: a single JSON object keyed by question_id.
Both are written with sorted keys so repeated ingestion of the same input is
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

from .text import normalize_tokens

logger = logging.getLogger(__name__)

PASSAGE_CATEGORIES = ("paragraph", "table", "caption", "other")
REGION_CATEGORIES = ("paragraph", "table", "caption", "title", "list", "other")
ANSWER_TYPES = ("extractive", "abstractive", "boolean")
DOCUMENT_SOURCES = ("dataset_text", "pdf_extracted")

# QASPER marks table/figure-caption evidence with this prefix.
_FLOAT_PREFIX = "FLOAT SELECTED: "

# Candidate evidence below this token-F1 against every passage is unresolved.
EVIDENCE_MATCH_THRESHOLD = 0.9


class IngestionError(Exception):
    """Raised when a dataset file cannot be read or parsed."""


@dataclass(frozen=True)
class RegionBox:
    """A layout-detector bounding box, page points, origin top-left."""

    page_index: int
    x0: float
    y0: float
    x1: float
    y1: float
    category: str
    detector_score: float = 1.0

    def __post_init__(self) -> None:
        if self.category not in REGION_CATEGORIES:
            raise ValueError(f"unknown region category: {self.category!r}")
        if not 0.0 <= self.detector_score <= 1.0:
            raise ValueError(f"detector_score outside [0,1]: {self.detector_score}")
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ValueError(f"degenerate region box: {self!r}")

    def to_dict(self) -> dict:
        return {
            "page_index": self.page_index,
            "x0": self.x0,
            "y0": self.y0,
            "x1": self.x1,
            "y1": self.y1,
            "category": self.category,
            "detector_score": self.detector_score,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RegionBox":
        return cls(
            page_index=int(d["page_index"]),
            x0=float(d["x0"]),
            y0=float(d["y0"]),
            x1=float(d["x1"]),
            y1=float(d["y1"]),
            category=d["category"],
            detector_score=float(d.get("detector_score", 1.0)),
        )


@dataclass(frozen=True)
class Passage:
    """A retrievable unit of document text with provenance."""

    passage_id: str
    text: str
    category: str = "paragraph"
    page_index: int | None = None
    region_box: RegionBox | None = None

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("passage text must be non-empty after trimming")
        if self.category not in PASSAGE_CATEGORIES:
            raise ValueError(f"unknown passage category: {self.category!r}")

    def to_dict(self) -> dict:
        return {
            "passage_id": self.passage_id,
            "text": self.text,
            "category": self.category,
            "page_index": self.page_index,
            "region_box": self.region_box.to_dict() if self.region_box else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Passage":
        box = d.get("region_box")
        return cls(
            passage_id=d["passage_id"],
            text=d["text"],
            category=d.get("category", "paragraph"),
            page_index=d.get("page_index"),
            region_box=RegionBox.from_dict(box) if box else None,
        )


@dataclass
class Document:
    """An ingested document: ordered passages plus identity."""

    doc_id: str
    title: str
    passages: list[Passage]
    source: str = "dataset_text"

    def __post_init__(self) -> None:
        if self.source not in DOCUMENT_SOURCES:
            raise ValueError(f"unknown document source: {self.source!r}")
        ids = [p.passage_id for p in self.passages]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate passage ids in document {self.doc_id}")

    def passage_by_id(self, passage_id: str) -> Passage:
        for p in self.passages:
            if p.passage_id == passage_id:
                return p
        raise KeyError(passage_id)

    def texts_by_id(self) -> dict[str, str]:
        return {p.passage_id: p.text for p in self.passages}

    def to_dict(self) -> dict:
        return {
            "doc_id": self.doc_id,
            "title": self.title,
            "source": self.source,
            "passages": [p.to_dict() for p in self.passages],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Document":
        return cls(
            doc_id=d["doc_id"],
            title=d.get("title", ""),
            passages=[Passage.from_dict(p) for p in d["passages"]],
            source=d.get("source", "dataset_text"),
        )


@dataclass(frozen=True)
class GoldAnswer:
    """One annotated reference answer; boolean text is canonical "yes"/"no"."""

    answer_type: str
    text: str

    def __post_init__(self) -> None:
        if self.answer_type not in ANSWER_TYPES:
            raise ValueError(f"unknown answer type: {self.answer_type!r}")
        if self.answer_type == "boolean" and self.text not in ("yes", "no"):
            raise ValueError(f"boolean answer not canonical: {self.text!r}")


@dataclass
class QuestionRecord:
    """A question plus typed gold answers and gold evidence passage ids.

    ``unresolved_evidence`` keeps the gold evidence strings that matched no
    passage; the eval harness reports them as a coverage statistic.
    """

    question_id: str
    doc_id: str
    text: str
    gold_answers: list[GoldAnswer]
    gold_evidence: frozenset[str] = frozenset()
    unresolved_evidence: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "doc_id": self.doc_id,
            "text": self.text,
            "gold_answers": [
                {"answer_type": a.answer_type, "text": a.text} for a in self.gold_answers
            ],
            "gold_evidence": sorted(self.gold_evidence),
            "unresolved_evidence": list(self.unresolved_evidence),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuestionRecord":
        return cls(
            question_id=d["question_id"],
            doc_id=d["doc_id"],
            text=d["text"],
            gold_answers=[GoldAnswer(a["answer_type"], a["text"]) for a in d["gold_answers"]],
            gold_evidence=frozenset(d.get("gold_evidence", ())),
            unresolved_evidence=list(d.get("unresolved_evidence", ())),
        )


@dataclass(frozen=True)
class IngestWarning:
    question_id: str
    kind: str
    detail: str


@dataclass
class IngestResult:
    split: str
    documents: list[Document]
    questions: list[QuestionRecord]
    warnings: list[IngestWarning] = field(default_factory=list)


def register_document(
    passages: list[Passage], title: str, source: str = "pdf_extracted"
) -> Document:
    """Assign content-derived ids to a new document.

    The doc_id is a hash of the passage content, so registering identical
    input twice yields identical ids (and content-addressed storage stays
    duplicate-free).
    """
    if not passages:
        raise ValueError("register_document requires at least one passage")
    h = hashlib.sha256()
    h.update(title.encode("utf-8"))
    h.update(source.encode("utf-8"))
    for p in passages:
        h.update(b"\x00")
        h.update(p.text.encode("utf-8"))
        h.update(p.category.encode("utf-8"))
        h.update(str(p.page_index).encode("ascii"))
        if p.region_box is not None:
            h.update(json.dumps(p.region_box.to_dict(), sort_keys=True).encode("ascii"))
    doc_id = h.hexdigest()[:12]
    renamed = [
        replace(p, passage_id=f"{doc_id}-p{i:04d}") for i, p in enumerate(passages)
    ]
    return Document(doc_id=doc_id, title=title, passages=renamed, source=source)


# ---------------------------------------------------------------------------
# QASPER ingestion
# ---------------------------------------------------------------------------


def _paper_passages(paper_id: str, paper: dict) -> list[Passage]:
    passages: list[Passage] = []

    def add(text: str, category: str) -> None:
        text = text.strip()
        if not text:
            return
        pid = f"{paper_id}-p{len(passages):04d}"
        passages.append(Passage(passage_id=pid, text=text, category=category))

    for section in paper.get("full_text", []) or []:
        for para in section.get("paragraphs", []) or []:
            add(para, "paragraph")
    # Table cells arrive pre-flattened inside the caption text; keep them as
    # caption-category passages.
    for ft in paper.get("figures_and_tables", []) or []:
        add(ft.get("caption", ""), "caption")
    return passages


class _EvidenceMatcher:
    """Resolve gold evidence strings to passage ids within one document."""

    def __init__(self, doc: Document):
        self._exact: dict[str, list[str]] = {}
        self._tokens: list[tuple[str, list[str]]] = []
        for p in doc.passages:
            toks = normalize_tokens(p.text)
            key = " ".join(toks)
            self._exact.setdefault(key, []).append(p.passage_id)
            self._tokens.append((p.passage_id, toks))

    def resolve(self, evidence: str) -> list[str]:
        if evidence.startswith(_FLOAT_PREFIX):
            evidence = evidence[len(_FLOAT_PREFIX):]
        toks = normalize_tokens(evidence)
        exact = self._exact.get(" ".join(toks))
        if exact:
            return list(exact)
        # Fall back to the highest token-F1 passage above the threshold.
        from .metrics import token_prf  # local import: metrics is a sibling leaf

        best_id, best_f1 = None, 0.0
        for pid, ptoks in self._tokens:
            f1 = token_prf(toks, ptoks)[2]
            if f1 > best_f1:
                best_id, best_f1 = pid, f1
        if best_id is not None and best_f1 >= EVIDENCE_MATCH_THRESHOLD:
            return [best_id]
        return []


def _gold_answers_from_annotation(answer: dict) -> GoldAnswer | None:
    """Map one QASPER annotation to a typed gold answer, or None if empty."""
    spans = answer.get("extractive_spans") or []
    free_form = (answer.get("free_form_answer") or "").strip()
    yes_no = answer.get("yes_no")
    if spans:
        return GoldAnswer("extractive", ", ".join(s.strip() for s in spans))
    if free_form:
        return GoldAnswer("abstractive", free_form)
    if yes_no is not None:
        return GoldAnswer("boolean", "yes" if yes_no else "no")
    return None


def load_qasper(path: str | Path, split: str) -> IngestResult:
    """Ingest one QASPER-format JSON file.

    One Document per paper; questions whose every annotation is unanswerable
    are dropped; gold evidence strings that match no passage land in the
    warning list instead of crashing.
    """
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise IngestionError(f"cannot read QASPER file {path}: {exc}") from exc

    documents: list[Document] = []
    questions: list[QuestionRecord] = []
    warnings: list[IngestWarning] = []

    for paper_id in sorted(data):
        paper = data[paper_id]
        passages = _paper_passages(paper_id, paper)
        if not passages:
            warnings.append(IngestWarning("", "empty_document", paper_id))
            continue
        doc = Document(
            doc_id=paper_id,
            title=paper.get("title", ""),
            passages=passages,
            source="dataset_text",
        )
        documents.append(doc)
        matcher = _EvidenceMatcher(doc)

        for qa in paper.get("qas", []) or []:
            qid = qa.get("question_id", "")
            gold_answers: list[GoldAnswer] = []
            evidence_strings: list[str] = []
            for annotation in qa.get("answers", []) or []:
                answer = annotation.get("answer", {}) or {}
                if answer.get("unanswerable"):
                    continue
                gold = _gold_answers_from_annotation(answer)
                if gold is None:
                    warnings.append(IngestWarning(qid, "empty_annotation", paper_id))
                    continue
                gold_answers.append(gold)
                evidence_strings.extend(e for e in answer.get("evidence", []) or [] if e)
            if not gold_answers:
                continue  # fully unanswerable records are removed

            resolved: set[str] = set()
            unresolved: list[str] = []
            for ev in evidence_strings:
                pids = matcher.resolve(ev)
                if pids:
                    resolved.update(pids)
                else:
                    unresolved.append(ev)
                    warnings.append(
                        IngestWarning(qid, "unresolved_evidence", ev[:120])
                    )
            questions.append(
                QuestionRecord(
                    question_id=qid,
                    doc_id=paper_id,
                    text=qa.get("question", ""),
                    gold_answers=gold_answers,
                    gold_evidence=frozenset(resolved),
                    unresolved_evidence=unresolved,
                )
            )

    logger.info(
        "ingested %s: %d documents, %d questions, %d warnings",
        path.name, len(documents), len(questions), len(warnings),
    )
    return IngestResult(split=split, documents=documents, questions=questions, warnings=warnings)


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def write_corpus(documents: Iterable[Document], path: str | Path) -> None:
    """One JSON object per line, one line per document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for doc in documents:
            f.write(_dumps(doc.to_dict()))
            f.write("\n")


def read_corpus(path: str | Path) -> list[Document]:
    docs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                docs.append(Document.from_dict(json.loads(line)))
    return docs


def write_questions(questions: Iterable[QuestionRecord], path: str | Path) -> None:
    """A single JSON object keyed by question_id."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {q.question_id: q.to_dict() for q in questions}
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps(payload, sort_keys=True, indent=1, ensure_ascii=False))
        f.write("\n")


def read_questions(path: str | Path) -> list[QuestionRecord]:
    with open(path, encoding="utf-8") as f:
        payload = json.load(f)
    return [QuestionRecord.from_dict(payload[qid]) for qid in sorted(payload)]
