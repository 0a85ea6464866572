"""Token and sentence normalization shared by ingestion, extraction scoring, and metrics.

The token rule is the SQuAD one: lowercase, strip ASCII punctuation, drop the
English articles a/an/the, split on whitespace. Every token-level metric in
this package goes through :func:`normalize_tokens` so their numbers are
mutually comparable.
"""

from __future__ import annotations

import re
import string

_ARTICLE_RE = re.compile(r"\b(a|an|the)\b")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


def normalize_tokens(text: str) -> list[str]:
    """Normalize ``text`` to a list of comparison tokens.

    Deterministic and idempotent: ``normalize_tokens(" ".join(normalize_tokens(x)))``
    equals ``normalize_tokens(x)``.
    """
    text = text.lower().translate(_PUNCT_TABLE)
    text = _ARTICLE_RE.sub(" ", text)
    return text.split()


def split_sentences(text: str) -> list[str]:
    """Split on sentence-final punctuation followed by whitespace.

    Lightweight on purpose; good enough for picking a best-matching sentence
    out of a paragraph.
    """
    parts = _SENTENCE_RE.split(text.strip())
    return [p.strip() for p in parts if p.strip()]
