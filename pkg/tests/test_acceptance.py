"""Acceptance criteria, one test per criterion.

A terminal-summary hook in conftest prints one PASS/FAIL line per criterion
at the end of the run. The QASPER reproduction criterion is dataset-gated:
it runs when the dataset files are present (DOCQA_QASPER_DIR, or
./data/qasper) and reports SKIPPED otherwise.
"""

from __future__ import annotations

import os
import random
import time
from collections import Counter
from dataclasses import replace
from pathlib import Path

import pytest

from docqa.comprehend import weak_supervision_sampler
from docqa.config import PipelineConfig
from docqa.corpus import GoldAnswer, QuestionRecord, RegionBox
from docqa.extract import assemble_passages, clip_text_to_region
from docqa.metrics import answer_f1, evidence_f1, recall_at_percent
from docqa.pipeline import Pipeline
from docqa.retrieve import Bm25Params, RankedList, bm25_rank, build_index
from docqa.text import normalize_tokens

from conftest import PageBuilder
from reference_impls import naive_bm25_scores
from test_extract import _random_page
from test_retrieve import make_doc


def ranked(ids):
    n = len(ids)
    return RankedList("q", [(pid, float(n - i)) for i, pid in enumerate(ids)], "bm25")


def test_bm25_oracle_equivalence():
    """200 randomized corpora: every score within 1e-9 of the naive scorer,
    in under 5 seconds."""
    rng = random.Random(20240501)
    vocab = ["seed", "lexicon", "model", "event", "score", "polarity",
             "data", "graph", "node", "query", "token", "rank", "page", "table"]
    start = time.perf_counter()
    for case in range(200):
        texts = [" ".join(rng.choices(vocab, k=rng.randint(1, 8)))
                 for _ in range(rng.randint(1, 10))]
        doc = make_doc(texts, doc_id=f"acc-{case}")
        params = Bm25Params(k1=rng.uniform(0.1, 2.0), b=rng.uniform(0.0, 1.0))
        query = " ".join(rng.choices(vocab, k=rng.randint(1, 5)))
        index = build_index(doc)
        ranked_list = bm25_rank(query, index, params)
        oracle = naive_bm25_scores(
            normalize_tokens(query),
            {p.passage_id: normalize_tokens(p.text) for p in doc.passages},
            k1=params.k1, b=params.b,
        )
        for pid, score in ranked_list.entries:
            assert abs(score - oracle[pid]) < 1e-9
    assert time.perf_counter() - start < 5.0


def test_metric_oracles():
    """answer_f1 identity/disjoint/0.8 cases; evidence_f1 0.5 case; recall
    M=max(1, ceil) hand cases."""
    assert answer_f1("seed lexicon", [GoldAnswer("extractive", "seed lexicon")])[0] == 1.0
    assert answer_f1("alpha beta", [GoldAnswer("extractive", "gamma delta")])[0] == 0.0
    overall, _ = answer_f1(
        "positive and negative predicates",
        [GoldAnswer("abstractive", "a vocabulary of positive and negative predicates")],
    )
    assert overall == pytest.approx(0.8)

    assert evidence_f1({"p1", "p2"}, {"p2", "p3"}) == pytest.approx(0.5)

    # N=40, K=5 -> M=2; gold at rank 2 -> 1.0.
    ids = [f"p{i}" for i in range(40)]
    ids[1] = "gold"
    assert recall_at_percent(ranked(ids), {"gold"}, 5) == 1.0
    # K=100 with gold a subset -> 1.0.
    ids = [f"p{i}" for i in range(7)]
    assert recall_at_percent(ranked(ids), {"p3", "p6"}, 100) == 1.0
    # N=10, K=1 -> M=1 by the max rule; one of two gold at rank 1 -> 0.5.
    ids = [f"p{i}" for i in range(10)]
    assert recall_at_percent(ranked(ids), {"p0", "p9"}, 1) == pytest.approx(0.5)


def test_recall_monotonicity():
    """100 random ranked lists: non-decreasing over K in {1,5,10,20,100} and
    exactly 1.0 at K=100 when gold is a subset of the passages."""
    rng = random.Random(31337)
    for _ in range(100):
        n = rng.randint(1, 80)
        ids = [f"p{i}" for i in range(n)]
        rng.shuffle(ids)
        gold = set(rng.sample(ids, rng.randint(1, min(6, n))))
        rl = ranked(ids)
        previous = -1.0
        for k in (1, 5, 10, 20, 100):
            value = recall_at_percent(rl, gold, k)
            assert value >= previous
            previous = value
        assert previous == 1.0


def test_extraction_clipping_suite():
    """Synthetic-page suite bit-exactly, plus the partition property on 50
    random pages."""
    # Exact region.
    page = PageBuilder()
    region = page.write_block(50, 100, ["seed lexicon"])
    assert clip_text_to_region(page.chars, region) == "seed lexicon"

    # Empty region.
    empty = RegionBox(0, 400, 400, 500, 450, "paragraph")
    assert clip_text_to_region(page.chars, empty) == ""

    # Dehyphenation.
    page = PageBuilder()
    region = page.write_block(50, 100, ["the seed lexi-", "con helps"])
    assert clip_text_to_region(page.chars, region) == "the seed lexicon helps"

    # Two-column ordering.
    page = PageBuilder()
    right = page.write_block(320, 100, ["right column text"])
    left = page.write_block(50, 100, ["left column text"])
    out = assemble_passages([right, left], page.chars, keep={"paragraph"})
    assert [p.text for p in out] == ["left column text", "right column text"]

    # Duplicate-region dedup.
    page = PageBuilder()
    region = page.write_block(50, 100, ["duplicated paragraph"])
    shifted = replace(region, x1=region.x1 + 2, detector_score=0.4)
    assert len(assemble_passages([region, shifted], page.chars, keep={"paragraph"})) == 1

    # Partition property over 50 random synthetic pages.
    rng = random.Random(99)
    for _ in range(50):
        page, lines = _random_page(rng)
        whole = page.whole_page_region()
        page_tokens = Counter(normalize_tokens(clip_text_to_region(page.chars, whole)))
        regions = []
        for i in range(len(lines)):
            top = 90.0 + i * 14.0 - 7.0
            regions.append(RegionBox(0, whole.x0 - 5, top, whole.x1 + 5, top + 14.0, "paragraph"))
        combined: Counter = Counter()
        for region in regions:
            combined.update(normalize_tokens(clip_text_to_region(page.chars, region)))
        assert combined == page_tokens


def test_weak_supervision_sampler():
    """10,000 draws over scores [0.9, 0.09, 0.01]: frequencies within +-0.02
    of the normalized scores; a fixed seed reproduces draws exactly."""
    rl = RankedList("q", [("p1", 0.9), ("p2", 0.09), ("p3", 0.01)], "cross_encoder")
    q = QuestionRecord(
        question_id="q", doc_id="d", text="what?",
        gold_answers=[GoldAnswer("abstractive", "an answer")],
        gold_evidence=frozenset({"p1"}),
    )
    passages = {"p1": "a", "p2": "b", "p3": "c"}
    examples = weak_supervision_sampler(q, rl, 10_000, seed=4242, passages=passages)
    counts = Counter(ex.sampled_rank for ex in examples)
    for rank, p in ((1, 0.9), (2, 0.09), (3, 0.01)):
        assert abs(counts[rank] / 10_000 - p) <= 0.02
    again = weak_supervision_sampler(q, rl, 10_000, seed=4242, passages=passages)
    assert examples == again


def test_end_to_end_determinism(tmp_path, lexicon_doc):
    """ask() with BM25 + reference answerer over the lexicon fixture returns
    the seed-lexicon passage in evidence, byte-identically across runs."""
    config = PipelineConfig(data_dir=str(tmp_path / "data"))
    Pipeline(config).store.save_document(lexicon_doc)

    payloads = []
    for _ in range(2):
        pipeline = Pipeline(config)  # fresh instance, fresh caches
        resp = pipeline.ask("lex", "What is the seed lexicon?", k=3)
        assert "lex-p0000" in [e["passage_id"] for e in resp.evidence]
        payloads.append(resp.canonical_json())
    assert payloads[0] == payloads[1]


# ---------------------------------------------------------------------------
# Dataset-gated criterion
# ---------------------------------------------------------------------------

PUBLISHED_BM25_RECALL = {  # split -> {K%: value}
    "validation": {5: 33.00, 20: 61.95},
    "test": {5: 31.81, 20: 60.38},
}
TOLERANCE_POINTS = 3.0


def _find_qasper_file(directory: Path, names: tuple[str, ...]) -> Path | None:
    for pattern in names:
        hits = sorted(directory.glob(pattern))
        if hits:
            return hits[0]
    return None


def _qasper_dir() -> Path:
    return Path(os.environ.get("DOCQA_QASPER_DIR", "data/qasper"))


@pytest.mark.parametrize("split,patterns", [
    ("validation", ("*dev*.json", "*validation*.json", "*val*.json")),
    ("test", ("*test*.json",)),
])
def test_qasper_bm25_topk_recall(split, patterns, tmp_path):
    """Zero-shot BM25 top-5% and top-20% recall within +-3.0 points of the
    published 33.00/61.95 (validation) and 31.81/60.38 (test), in under
    10 minutes. Requires the QASPER split files on disk."""
    directory = _qasper_dir()
    source = _find_qasper_file(directory, patterns) if directory.is_dir() else None
    if source is None:
        pytest.skip(
            f"QASPER {split} split not found under {directory} "
            "(set DOCQA_QASPER_DIR to enable this criterion)"
        )
    start = time.perf_counter()
    pipeline = Pipeline(PipelineConfig(data_dir=str(tmp_path / "data")))
    pipeline.ingest_dataset(source, split)
    report = pipeline.run_eval(split, recall_only=True)
    elapsed = time.perf_counter() - start
    for k, published in PUBLISHED_BM25_RECALL[split].items():
        measured = report.recall_at[split][k] * 100
        assert abs(measured - published) <= TOLERANCE_POINTS, (
            f"top-{k}% recall {measured:.2f} vs published {published:.2f}"
        )
    assert elapsed < 600, f"evaluation took {elapsed:.0f}s"
