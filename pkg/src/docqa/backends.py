"""HTTP clients for the optional inference backends.

Wire contracts (JSON over POST):
  /embed    {"texts": [...]}                -> {"vectors": [[...], ...]}
  /score    {"pairs": [[q, p], ...]}        -> {"scores": [...]}
  /generate {"question": q, "context": c}   -> {"answer": str, "confidence"?: float}
  /detect   {"pdf_b64": str, "filename": s} -> {"regions": [{page, bbox, category, score}]}

Transport problems (connection refused, timeouts, HTTP error statuses) raise
BackendTransportError and are safe to retry; malformed payloads raise
BackendProtocolError and are not.
"""

from __future__ import annotations

import base64
import logging
from pathlib import Path
from typing import Sequence

import requests

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 30.0


class BackendError(Exception):
    """Base class for backend failures."""


class BackendTransportError(BackendError):
    """The backend could not be reached or returned an error status; retryable."""


class BackendProtocolError(BackendError):
    """The backend answered with a payload that violates the contract."""


class HttpBackend:
    def __init__(self, base_url: str, timeout: float = DEFAULT_TIMEOUT, retries: int = 0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self._session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        url = f"{self.base_url}{path}"
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._session.post(url, json=payload, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                logger.warning("backend %s unreachable (attempt %d): %s", url, attempt + 1, exc)
                continue
            if resp.status_code >= 400:
                last_exc = BackendTransportError(
                    f"backend {url} returned HTTP {resp.status_code}: {resp.text[:200]}"
                )
                continue
            try:
                return resp.json()
            except ValueError as exc:
                raise BackendProtocolError(f"backend {url} returned non-JSON body") from exc
        raise BackendTransportError(f"backend {url} failed after {self.retries + 1} attempt(s): {last_exc}")


class EmbeddingBackend(HttpBackend):
    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        data = self._post("/embed", {"texts": list(texts)})
        vectors = data.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise BackendProtocolError(
                f"/embed returned {len(vectors) if isinstance(vectors, list) else 'no'} "
                f"vectors for {len(texts)} texts"
            )
        return [[float(x) for x in v] for v in vectors]


class ScoringBackend(HttpBackend):
    def score_pairs(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        data = self._post("/score", {"pairs": [[q, p] for q, p in pairs]})
        scores = data.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            raise BackendProtocolError(
                f"/score returned {len(scores) if isinstance(scores, list) else 'no'} "
                f"scores for {len(pairs)} pairs"
            )
        return [float(s) for s in scores]


class GeneratorBackend(HttpBackend):
    def generate(self, question: str, context: str) -> tuple[str, float | None]:
        data = self._post("/generate", {"question": question, "context": context})
        if "answer" not in data:
            raise BackendProtocolError("/generate response missing 'answer'")
        confidence = data.get("confidence")
        if confidence is not None:
            confidence = float(confidence)
            if not 0.0 <= confidence <= 1.0:
                raise BackendProtocolError(f"/generate confidence outside [0,1]: {confidence}")
        return str(data["answer"]), confidence


class DetectBackend(HttpBackend):
    def detect(self, pdf_path: str | Path) -> list[dict]:
        pdf_path = Path(pdf_path)
        payload = {
            "pdf_b64": base64.b64encode(pdf_path.read_bytes()).decode("ascii"),
            "filename": pdf_path.name,
        }
        data = self._post("/detect", payload)
        regions = data.get("regions")
        if not isinstance(regions, list):
            raise BackendProtocolError("/detect response missing 'regions' list")
        return regions
