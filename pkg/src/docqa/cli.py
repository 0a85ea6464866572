"""Command-line interface.

Global flags (--config, --data-dir, --seed) apply to every subcommand; a
config file is flat JSON whose keys mirror PipelineConfig.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .config import PipelineConfig
from .corpus import IngestionError
from .extract import assemble_passages, fallback_regions, load_char_dump, load_region_sidecar
from .pipeline import Pipeline, PipelineError
from .retrieve import RETRIEVERS, TrainingPairConfig
from .store import DocumentNotFound, SplitNotFound


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Flat JSON config file.")
@click.option("--data-dir", type=click.Path(file_okay=False), default=None,
              help="Override the data directory.")
@click.option("--seed", type=int, default=None, help="Override the pipeline seed.")
@click.option("-v", "--verbose", is_flag=True, help="Debug logging.")
@click.pass_context
def main(ctx, config_path, data_dir, seed, verbose):
    """Document question answering: detect, retrieve, comprehend."""
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    config = PipelineConfig.from_file(config_path) if config_path else PipelineConfig()
    config = config.override(data_dir=data_dir, seed=seed)
    ctx.obj = config


def _pipeline(config: PipelineConfig) -> Pipeline:
    return Pipeline(config)


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--split", default="validation", show_default=True,
              help="Split name for dataset files.")
@click.option("--format", "fmt", type=click.Choice(["auto", "qasper", "pdf"]), default="auto",
              show_default=True)
@click.option("--sidecar", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Region sidecar (PDF ingestion).")
@click.option("--chars", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Pre-extracted char dump (PDF ingestion).")
@click.option("--regions", "region_source",
              type=click.Choice(["auto", "sidecar", "detect", "fallback"]), default="auto",
              show_default=True)
@click.pass_obj
def ingest(config, path, split, fmt, sidecar, chars, region_source):
    """Ingest a QASPER JSON split or a single PDF."""
    pipeline = _pipeline(config)
    if fmt == "auto":
        fmt = "pdf" if path.lower().endswith(".pdf") else "qasper"
    try:
        if fmt == "pdf":
            doc_id = pipeline.ingest_pdf(path, sidecar, chars, region_source)
            click.echo(json.dumps({"doc_id": doc_id}))
        else:
            result = pipeline.ingest_dataset(path, split)
            click.echo(json.dumps({
                "split": split,
                "documents": len(result.documents),
                "questions": len(result.questions),
                "warnings": len(result.warnings),
            }))
    except (IngestionError, PipelineError) as exc:
        raise click.ClickException(str(exc))


@main.command("extract")
@click.argument("chars_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--sidecar", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Region sidecar; omitted means geometric fallback regions.")
@click.option("--keep", default="paragraph,table,caption", show_default=True,
              help="Comma-separated region categories to keep.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write passages JSON here instead of stdout.")
def extract_cmd(chars_path, sidecar, keep, out):
    """Assemble passages from a char dump (extraction stage only)."""
    chars = load_char_dump(chars_path)
    regions = load_region_sidecar(sidecar) if sidecar else fallback_regions(chars)
    passages = assemble_passages(regions, chars, keep=keep.split(","))
    payload = json.dumps([p.to_dict() for p in passages], indent=1, ensure_ascii=False)
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
        click.echo(f"wrote {len(passages)} passages to {out}")
    else:
        click.echo(payload)


@main.command()
@click.argument("doc_id", required=False)
@click.pass_obj
def index(config, doc_id):
    """(Re)build the BM25 index snapshot for one or all stored documents."""
    pipeline = _pipeline(config)
    store = pipeline.store
    doc_ids = [doc_id] if doc_id else [d["doc_id"] for d in store.list_documents()]
    if not doc_ids:
        raise click.ClickException("no documents in the store")
    from .retrieve import build_index

    for did in doc_ids:
        try:
            store.save_index(build_index(store.load_document(did)))
        except DocumentNotFound:
            raise click.ClickException(f"unknown document: {did}")
        click.echo(f"indexed {did}")


@main.command()
@click.argument("doc_id")
@click.argument("question")
@click.option("-k", type=int, default=None, help="Contexts to answer over.")
@click.option("--retriever", type=click.Choice(RETRIEVERS), default=None)
@click.option("--no-timings", is_flag=True, help="Emit the canonical (deterministic) payload.")
@click.pass_obj
def ask(config, doc_id, question, k, retriever, no_timings):
    """Answer a question against one ingested document."""
    pipeline = _pipeline(config)
    try:
        resp = pipeline.ask(doc_id, question, k=k, retriever=retriever)
    except DocumentNotFound:
        raise click.ClickException(f"unknown document: {doc_id}")
    except PipelineError as exc:
        raise click.ClickException(str(exc))
    if no_timings:
        sys.stdout.buffer.write(resp.canonical_json() + b"\n")
    else:
        click.echo(json.dumps(resp.to_dict(), sort_keys=True, ensure_ascii=False, indent=1))


@main.command()
@click.option("--split", default="validation", show_default=True)
@click.option("--recall-only", is_flag=True, help="Skip the answerer; retrieval metrics only.")
@click.option("--selection", type=click.Choice(["best_of_k", "confidence"]),
              default="best_of_k", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Directory for report_{split}.json/.txt.")
@click.pass_obj
def eval(config, split, recall_only, selection, out_dir):
    """Evaluate retrieval recall, Answer-F1, and Evidence-F1 over a split."""
    pipeline = _pipeline(config)
    try:
        report = pipeline.run_eval(split, recall_only=recall_only, selection=selection,
                                   out_dir=out_dir)
    except SplitNotFound as exc:
        raise click.ClickException(str(exc))
    click.echo(report.render_text())


@main.command()
@click.option("--split", default="train", show_default=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--ratio", type=int, default=4, show_default=True,
              help="Negatives per positive.")
@click.option("--negatives", type=click.Choice(["bm25_top", "random"]), default="bm25_top",
              show_default=True)
@click.pass_obj
def pairs(config, split, out_dir, ratio, negatives):
    """Emit retriever training pairs (TSV + JSONL with full texts)."""
    pipeline = _pipeline(config)
    cfg = TrainingPairConfig(negatives_per_positive=ratio, hard_negative_source=negatives)
    try:
        n = pipeline.emit_training_pairs(split, out_dir, cfg)
    except SplitNotFound as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {n} pairs to {out_dir}")


@main.command()
@click.option("--split", default="train", show_default=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--samples", type=int, default=1, show_default=True,
              help="Sampled contexts per question.")
@click.pass_obj
def weak(config, split, out_path, samples):
    """Emit weak-supervision finetuning examples (JSONL)."""
    pipeline = _pipeline(config)
    try:
        n = pipeline.emit_weak_examples(split, out_path, samples_per_question=samples)
    except SplitNotFound as exc:
        raise click.ClickException(str(exc))
    click.echo(f"wrote {n} examples to {out_path}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--ui-dir", type=click.Path(file_okay=False), default=None,
              help="Serve a built UI bundle at /ui.")
@click.pass_obj
def serve(config, host, port, ui_dir):
    """Run the HTTP API."""
    import uvicorn

    from .api import create_app

    app = create_app(_pipeline(config), ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
