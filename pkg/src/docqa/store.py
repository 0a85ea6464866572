"""Content-addressed document persistence.

Layout under the data directory:
    docs/<doc_id>.json        document record
    indexes/<doc_id>.json     BM25 index snapshot
    raw/<doc_id>.pdf          uploaded PDF (when ingested from one)
    raw/<doc_id>.regions.json region sidecar used at ingest time
    raw/<doc_id>.chars.jsonl  char dump used at ingest time
    splits/                   corpus/questions files per dataset split

Writes are atomic (tempfile + rename) and documents are immutable once
written, so concurrent readers never see partial state and re-ingesting the
same content is a no-op.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

from .corpus import (
    Document,
    QuestionRecord,
    read_corpus,
    read_questions,
    write_corpus,
    write_questions,
)
from .retrieve import InvertedIndex, build_index


class DocumentNotFound(KeyError):
    pass


class SplitNotFound(FileNotFoundError):
    pass


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class DocumentStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.docs_dir = self.data_dir / "docs"
        self.index_dir = self.data_dir / "indexes"
        self.raw_dir = self.data_dir / "raw"
        self.splits_dir = self.data_dir / "splits"
        self._doc_cache: dict[str, Document] = {}
        self._index_cache: dict[str, InvertedIndex] = {}

    # -- documents ---------------------------------------------------------

    def save_document(self, doc: Document) -> None:
        path = self.docs_dir / f"{doc.doc_id}.json"
        if not path.exists():  # content-addressed: same id means same content
            _atomic_write(path, json.dumps(doc.to_dict(), sort_keys=True, ensure_ascii=False))
        self._doc_cache[doc.doc_id] = doc

    def has_document(self, doc_id: str) -> bool:
        return doc_id in self._doc_cache or (self.docs_dir / f"{doc_id}.json").exists()

    def load_document(self, doc_id: str) -> Document:
        if doc_id in self._doc_cache:
            return self._doc_cache[doc_id]
        path = self.docs_dir / f"{doc_id}.json"
        if not path.exists():
            raise DocumentNotFound(doc_id)
        with open(path, encoding="utf-8") as f:
            doc = Document.from_dict(json.load(f))
        self._doc_cache[doc_id] = doc
        return doc

    def list_documents(self) -> list[dict]:
        entries = []
        seen = set()
        if self.docs_dir.is_dir():
            seen.update(p.stem for p in self.docs_dir.glob("*.json"))
        seen.update(self._doc_cache)
        for doc_id in sorted(seen):
            doc = self.load_document(doc_id)
            entries.append(
                {
                    "doc_id": doc.doc_id,
                    "title": doc.title,
                    "n_passages": len(doc.passages),
                    "source": doc.source,
                }
            )
        return entries

    # -- indexes -----------------------------------------------------------

    def save_index(self, index: InvertedIndex) -> None:
        path = self.index_dir / f"{index.doc_id}.json"
        if not path.exists():
            _atomic_write(path, json.dumps(index.to_dict(), sort_keys=True, ensure_ascii=False))
        self._index_cache[index.doc_id] = index

    def load_index(self, doc_id: str) -> InvertedIndex:
        """Load the snapshot, rebuilding (and persisting) it when missing."""
        if doc_id in self._index_cache:
            return self._index_cache[doc_id]
        path = self.index_dir / f"{doc_id}.json"
        if path.exists():
            with open(path, encoding="utf-8") as f:
                index = InvertedIndex.from_dict(json.load(f))
        else:
            index = build_index(self.load_document(doc_id))
            self.save_index(index)
        self._index_cache[doc_id] = index
        return index

    # -- raw ingestion artifacts --------------------------------------------

    def raw_path(self, doc_id: str, suffix: str) -> Path:
        self.raw_dir.mkdir(parents=True, exist_ok=True)
        return self.raw_dir / f"{doc_id}{suffix}"

    # -- dataset splits ------------------------------------------------------

    def corpus_path(self, split: str) -> Path:
        return self.splits_dir / f"corpus_{split}.jsonl"

    def questions_path(self, split: str) -> Path:
        return self.splits_dir / f"questions_{split}.json"

    def save_split(self, split: str, documents: list[Document], questions: list[QuestionRecord]) -> None:
        self.splits_dir.mkdir(parents=True, exist_ok=True)
        write_corpus(documents, self.corpus_path(split))
        write_questions(questions, self.questions_path(split))

    def load_split(self, split: str) -> tuple[list[Document], list[QuestionRecord]]:
        corpus_path = self.corpus_path(split)
        questions_path = self.questions_path(split)
        if not corpus_path.exists() or not questions_path.exists():
            raise SplitNotFound(
                f"split '{split}' not ingested under {self.splits_dir} "
                f"(expected {corpus_path.name} and {questions_path.name})"
            )
        return read_corpus(corpus_path), read_questions(questions_path)
