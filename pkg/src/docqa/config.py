"""Pipeline configuration: stage selection switches and backend endpoints.

The config file is flat JSON; every key mirrors a field here and a CLI flag.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from urllib.parse import urlparse

from .retrieve import RETRIEVERS, Bm25Params

ANSWERERS = ("reference", "backend")
_URL_FIELDS = ("detect_url", "embed_url", "score_url", "generate_url")


@dataclass(frozen=True)
class PipelineConfig:
    retriever: str = "bm25"
    k1: float = 0.9
    b: float = 0.4
    k: int = 3
    threshold: float = 0.5
    answerer: str = "reference"
    detect_url: str | None = None
    embed_url: str | None = None
    score_url: str | None = None
    generate_url: str | None = None
    data_dir: str = "data"
    seed: int = 0
    char_cmd: str | None = None
    keep_categories: tuple[str, ...] = ("paragraph", "table", "caption")

    def __post_init__(self) -> None:
        if self.retriever not in RETRIEVERS:
            raise ValueError(f"unknown retriever: {self.retriever!r}")
        if self.answerer not in ANSWERERS:
            raise ValueError(f"unknown answerer: {self.answerer!r}")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0,1]")
        Bm25Params(self.k1, self.b)  # range checks
        for name in _URL_FIELDS:
            url = getattr(self, name)
            if url is not None:
                parsed = urlparse(url)
                if parsed.scheme not in ("http", "https") or not parsed.netloc:
                    raise ValueError(f"{name} is not a well-formed URL: {url!r}")

    @property
    def bm25_params(self) -> Bm25Params:
        return Bm25Params(k1=self.k1, b=self.b)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["keep_categories"] = list(self.keep_categories)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "keep_categories" in d:
            d = dict(d, keep_categories=tuple(d["keep_categories"]))
        return cls(**d)

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def override(self, **kwargs) -> "PipelineConfig":
        updates = {k: v for k, v in kwargs.items() if v is not None}
        return replace(self, **updates) if updates else self
