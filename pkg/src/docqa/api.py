"""HTTP API over the pipeline, serving the browser console.

Endpoints:
  GET  /healthz
  GET  /documents
  GET  /documents/{doc_id}/passages
  POST /documents                      multipart: file (PDF), sidecar?, chars?
  POST /documents/{doc_id}/ask         {"question", "k"?, "retriever"?}
"""

from __future__ import annotations

import logging
import tempfile
from pathlib import Path

from fastapi import FastAPI, File, HTTPException, UploadFile
from fastapi.responses import HTMLResponse
from pydantic import BaseModel, Field

from .pipeline import IngestError, Pipeline, StageError
from .retrieve import RETRIEVERS
from .store import DocumentNotFound

logger = logging.getLogger(__name__)


class AskRequest(BaseModel):
    question: str = Field(min_length=1)
    k: int | None = Field(default=None, ge=1, le=50)
    retriever: str | None = None


def create_app(pipeline: Pipeline, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="docqa", version="0.1.0")

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.get("/documents")
    def list_documents() -> dict:
        return {"documents": pipeline.store.list_documents()}

    @app.get("/documents/{doc_id}/passages")
    def passages(doc_id: str) -> dict:
        try:
            doc = pipeline.store.load_document(doc_id)
        except DocumentNotFound:
            raise HTTPException(status_code=404, detail=f"unknown document: {doc_id}")
        return {
            "doc_id": doc.doc_id,
            "title": doc.title,
            "passages": [p.to_dict() for p in doc.passages],
        }

    @app.post("/documents")
    async def upload(
        file: UploadFile = File(...),
        sidecar: UploadFile | None = File(default=None),
        chars: UploadFile | None = File(default=None),
    ) -> dict:
        with tempfile.TemporaryDirectory(prefix="docqa-upload-") as tmp:
            tmp_dir = Path(tmp)
            pdf_path = tmp_dir / (file.filename or "upload.pdf")
            pdf_path.write_bytes(await file.read())
            sidecar_path = chars_path = None
            if sidecar is not None:
                sidecar_path = tmp_dir / "regions.json"
                sidecar_path.write_bytes(await sidecar.read())
            if chars is not None:
                chars_path = tmp_dir / "chars.jsonl"
                chars_path.write_bytes(await chars.read())
            try:
                doc_id = pipeline.ingest_pdf(pdf_path, sidecar_path, chars_path)
            except (IngestError, StageError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            except Exception as exc:  # malformed sidecars, bad dumps, ...
                logger.exception("ingestion failed")
                raise HTTPException(status_code=400, detail=str(exc))
        return {"doc_id": doc_id}

    @app.post("/documents/{doc_id}/ask")
    def ask(doc_id: str, req: AskRequest) -> dict:
        if req.retriever is not None and req.retriever not in RETRIEVERS:
            raise HTTPException(status_code=422, detail=f"unknown retriever: {req.retriever}")
        try:
            resp = pipeline.ask(doc_id, req.question, k=req.k, retriever=req.retriever)
        except DocumentNotFound:
            raise HTTPException(status_code=404, detail=f"unknown document: {doc_id}")
        except StageError as exc:
            raise HTTPException(status_code=502, detail=str(exc))
        return resp.to_dict()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

        @app.get("/", response_class=HTMLResponse, include_in_schema=False)
        def root() -> HTMLResponse:
            return HTMLResponse('<meta http-equiv="refresh" content="0; url=/ui/">')

    return app
