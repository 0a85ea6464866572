"""Shared fixtures: synthetic pages, a small ranking corpus, and a
QASPER-format fixture file."""

from __future__ import annotations

import json

import pytest

from docqa.corpus import Document, Passage, RegionBox
from docqa.extract import CharBox

CHAR_W = 6.0
GLYPH_W = 0.9 * CHAR_W
GLYPH_ASCENT = 8.0
GLYPH_DESCENT = 2.0
LEADING = 14.0


class PageBuilder:
    """Lay out fixed-pitch glyph boxes on a synthetic page.

    Spaces advance the pen without emitting a glyph, so word gaps come out
    of geometry exactly like a real extractor's output.
    """

    def __init__(self, page_index: int = 0):
        self.page_index = page_index
        self.chars: list[CharBox] = []

    def write_line(self, x: float, baseline: float, text: str) -> None:
        for i, ch in enumerate(text):
            if ch == " ":
                continue
            x0 = x + i * CHAR_W
            self.chars.append(
                CharBox(
                    ch=ch,
                    x0=x0,
                    y0=baseline - GLYPH_ASCENT,
                    x1=x0 + GLYPH_W,
                    y1=baseline + GLYPH_DESCENT,
                    page_index=self.page_index,
                    baseline_y=baseline,
                )
            )

    def write_block(self, x: float, y_top: float, lines: list[str]) -> RegionBox:
        """Write lines at LEADING spacing and return a region covering them."""
        baseline = y_top + GLYPH_ASCENT
        for line in lines:
            self.write_line(x, baseline, line)
            baseline += LEADING
        width = max(len(line) for line in lines) * CHAR_W
        return RegionBox(
            page_index=self.page_index,
            x0=x,
            y0=y_top,
            x1=x + width,
            y1=baseline - LEADING + GLYPH_DESCENT,
            category="paragraph",
            detector_score=1.0,
        )

    def whole_page_region(self, category: str = "paragraph") -> RegionBox:
        return RegionBox(
            page_index=self.page_index,
            x0=min(c.x0 for c in self.chars),
            y0=min(c.y0 for c in self.chars),
            x1=max(c.x1 for c in self.chars),
            y1=max(c.y1 for c in self.chars),
            category=category,
            detector_score=1.0,
        )


@pytest.fixture
def page_builder():
    return PageBuilder


SEED_LEXICON_TEXT = (
    "The seed lexicon consists of positive and negative predicates. "
    "If the predicate of an extracted event is in the seed lexicon and does not "
    "involve complex phenomena like negation, we assign the corresponding polarity "
    "score to the event. We expect the model to automatically learn complex "
    "phenomena through label propagation."
)
CONCESSION_TEXT = (
    "CO (CONCESSION Pairs) The seed lexicon matches neither the former nor the "
    "latter event, and their discourse relation type is CONCESSION. We assume the "
    "two events have the reversed polarities."
)
CAUSE_TEXT = (
    "CA (CAUSE Pairs) The seed lexicon matches neither the former nor the latter "
    "event, and their discourse relation type is CAUSE. We assume the two events "
    "have the same polarities."
)
EVAL_TEXT = "We evaluate our model on the dataset and report accuracy on the test split."


@pytest.fixture
def lexicon_doc() -> Document:
    """Four-passage document whose first passage answers the lexicon question."""
    texts = [SEED_LEXICON_TEXT, CONCESSION_TEXT, CAUSE_TEXT, EVAL_TEXT]
    passages = [
        Passage(passage_id=f"lex-p{i:04d}", text=t, category="paragraph")
        for i, t in enumerate(texts)
    ]
    return Document(doc_id="lex", title="Synthetic lexicon paper", passages=passages)


def make_qasper_fixture() -> dict:
    """Two papers, three questions; one question is fully unanswerable."""
    paper_a = {
        "title": "Paper A",
        "abstract": "We study polarity propagation.",
        "full_text": [
            {
                "section_name": "Introduction",
                "paragraphs": [
                    SEED_LEXICON_TEXT,
                    "We propose a model that learns polarity scores from discourse relations.",
                ],
            },
            {"section_name": "Experiments", "paragraphs": [EVAL_TEXT]},
        ],
        "figures_and_tables": [
            {"file": "tab1.png", "caption": "Table 1: Accuracy of the model on the dataset."}
        ],
        "qas": [
            {
                "question": "What is the seed lexicon?",
                "question_id": "qa-1",
                "answers": [
                    {
                        "answer": {
                            "unanswerable": False,
                            "extractive_spans": ["positive and negative predicates"],
                            "yes_no": None,
                            "free_form_answer": "",
                            "evidence": [SEED_LEXICON_TEXT],
                        }
                    },
                    {
                        "answer": {
                            "unanswerable": False,
                            "extractive_spans": [],
                            "yes_no": None,
                            "free_form_answer": "a vocabulary of positive and negative predicates",
                            "evidence": [SEED_LEXICON_TEXT, "This evidence matches no passage at all."],
                        }
                    },
                ],
            },
            {
                "question": "What hyperparameters were used?",
                "question_id": "qa-2",
                "answers": [
                    {
                        "answer": {
                            "unanswerable": True,
                            "extractive_spans": [],
                            "yes_no": None,
                            "free_form_answer": "",
                            "evidence": [],
                        }
                    }
                ],
            },
        ],
    }
    paper_b = {
        "title": "Paper B",
        "abstract": "",
        "full_text": [
            {
                "section_name": "Method",
                "paragraphs": [
                    "Our encoder is finetuned on the training split of the corpus.",
                    "Results are reported in Table 2 of the appendix.",
                ],
            }
        ],
        "figures_and_tables": [
            {"file": "tab2.png", "caption": "Table 2: Scores per configuration."}
        ],
        "qas": [
            {
                "question": "Is the encoder finetuned?",
                "question_id": "qb-1",
                "answers": [
                    {
                        "answer": {
                            "unanswerable": False,
                            "extractive_spans": [],
                            "yes_no": True,
                            "free_form_answer": "",
                            "evidence": [
                                "Our encoder is finetuned on the training split of the corpus.",
                                "FLOAT SELECTED: Table 2: Scores per configuration.",
                            ],
                        }
                    }
                ],
            }
        ],
    }
    return {"paper-a": paper_a, "paper-b": paper_b}


@pytest.fixture
def qasper_file(tmp_path):
    path = tmp_path / "qasper-fixture.json"
    path.write_text(json.dumps(make_qasper_fixture()), encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL/SKIPPED line per acceptance criterion."""
    lines = {}
    for outcome in ("passed", "failed", "skipped"):
        for report in terminalreporter.stats.get(outcome, []):
            if getattr(report, "when", "call") != "call" and outcome != "skipped":
                continue
            if "test_acceptance.py" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                lines[name] = outcome.upper()
    if lines:
        terminalreporter.section("acceptance criteria")
        for name in sorted(lines):
            terminalreporter.write_line(f"{lines[name]:>7}  {name}")
