"""Candidate generation, answer selection, the reference answerer, and the
weak-supervision sampler."""

from __future__ import annotations

import random
from collections import Counter

import pytest

from docqa.backends import BackendTransportError
from docqa.comprehend import (
    AnswerCandidate,
    ComprehendError,
    answer_with_contexts,
    classify_generated,
    make_backend_answerer,
    no_answer,
    reference_answerer,
    sampling_probabilities,
    select_answer,
    weak_supervision_sampler,
)
from docqa.corpus import GoldAnswer, QuestionRecord
from docqa.retrieve import RankedList


def ranked_list(scores, retriever="cross_encoder"):
    entries = sorted(
        [(f"p{i + 1}", float(s)) for i, s in enumerate(scores)], key=lambda kv: -kv[1]
    )
    return RankedList(question_id="q", entries=entries, retriever=retriever)


PASSAGES = {
    "p1": "The seed lexicon consists of positive and negative predicates.",
    "p2": "We assume the two events have the reversed polarities.",
    "p3": "Unrelated filler text about nothing in particular.",
}


class TestAnswerWithContexts:
    def test_three_candidates_with_a_no_answer(self):
        """K=3 over mixed contexts yields 3 candidates, one 'no answer'."""

        def answerer(question, context):
            if "seed" in context:
                return AnswerCandidate("positive and negative predicates", "extractive", 0.93)
            if "polarities" in context:
                return AnswerCandidate("matches neither event", "abstractive", 0.10)
            return no_answer()

        ranked = ranked_list([0.93, 0.10, 0.07])
        candidates = answer_with_contexts("What is the seed lexicon?", ranked, 3, answerer, PASSAGES)
        assert len(candidates) == 3
        assert [c.rank_of_context for c in candidates] == [1, 2, 3]
        assert [c.passage_id for c in candidates] == ["p1", "p2", "p3"]
        assert sum(c.answer_type == "no_answer" for c in candidates) == 1

    def test_k_one(self):
        ranked = ranked_list([0.9, 0.5, 0.1])
        candidates = answer_with_contexts("q", ranked, 1, reference_answerer, PASSAGES)
        assert len(candidates) == 1
        assert candidates[0].passage_id == "p1"

    def test_k_larger_than_passage_count(self):
        ranked = ranked_list([0.9, 0.5, 0.1])
        candidates = answer_with_contexts("q", ranked, 10, reference_answerer, PASSAGES)
        assert len(candidates) == 3

    def test_single_backend_failure_becomes_no_answer(self):
        calls = []

        def flaky(question, context):
            calls.append(context)
            if len(calls) == 2:
                raise BackendTransportError("boom")
            return AnswerCandidate("something", "abstractive", 0.4)

        candidates = answer_with_contexts("q", ranked_list([0.9, 0.5, 0.1]), 3, flaky, PASSAGES)
        assert len(candidates) == 3
        assert candidates[1].answer_type == "no_answer"
        assert candidates[1].confidence == 0.0

    def test_total_failure_raises(self):
        def dead(question, context):
            raise BackendTransportError("down")

        with pytest.raises(ComprehendError):
            answer_with_contexts("q", ranked_list([0.9, 0.5]), 2, dead, PASSAGES)

    def test_k_must_be_positive(self):
        with pytest.raises(ValueError):
            answer_with_contexts("q", ranked_list([0.9]), 0, reference_answerer, PASSAGES)


class TestSelectAnswer:
    def _cand(self, conf, rank, answer_type="abstractive", text="x"):
        if answer_type == "no_answer":
            text = ""
        return AnswerCandidate(text, answer_type, conf, passage_id="p", rank_of_context=rank)

    def test_argmax_confidence(self):
        cands = [self._cand(0.2, 1), self._cand(0.9, 2), self._cand(0.4, 3)]
        assert select_answer(cands) is cands[1]

    def test_all_no_answer_returns_rank_one(self):
        cands = [self._cand(0.0, 2, "no_answer"), self._cand(0.0, 1, "no_answer")]
        assert select_answer(cands).rank_of_context == 1

    def test_tie_broken_by_rank(self):
        cands = [self._cand(0.7, 3), self._cand(0.7, 1)]
        assert select_answer(cands).rank_of_context == 1

    def test_no_answer_never_beats_answerable(self):
        cands = [self._cand(0.9, 1, "no_answer"), self._cand(0.1, 2)]
        assert select_answer(cands).answer_type == "abstractive"

    def test_permutation_invariant(self):
        rng = random.Random(31)
        cands = [
            self._cand(rng.choice([0.1, 0.5, 0.9]), rank + 1,
                       rng.choice(["abstractive", "no_answer"]))
            for rank in range(6)
        ]
        baseline = select_answer(cands)
        for _ in range(20):
            shuffled = cands[:]
            rng.shuffle(shuffled)
            assert select_answer(shuffled) == baseline

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            select_answer([])


class TestReferenceAnswerer:
    def test_boolean_yes(self):
        cand = reference_answerer("Is the model finetuned?", "the model is finetuned on the corpus")
        assert (cand.answer_type, cand.text) == ("boolean", "yes")
        assert cand.confidence == pytest.approx(1.0)

    def test_boolean_half_overlap_is_yes(self):
        cand = reference_answerer("Is the model finetuned?", "our model works well")
        assert cand.text == "yes"
        assert cand.confidence == pytest.approx(0.5)

    def test_boolean_no(self):
        cand = reference_answerer("Is the model finetuned?", "completely unrelated words here")
        assert (cand.answer_type, cand.text) == ("boolean", "no")
        assert cand.confidence == 0.0

    def test_empty_context_no_answer(self):
        cand = reference_answerer("Is the model finetuned?", "   ")
        assert cand.answer_type == "no_answer"
        assert cand.confidence == 0.0

    def test_best_sentence_extracted(self):
        # Sentence 2 shares 4 content tokens vs 1; hand token-F1: 0.25 vs 0.8.
        question = "How does the polarity model learn scores?"
        context = (
            "The dataset has polarity labels. "
            "The model can learn polarity scores quickly."
        )
        cand = reference_answerer(question, context)
        assert cand.text == "The model can learn polarity scores quickly."
        assert cand.answer_type == "extractive"
        assert cand.confidence == pytest.approx(0.8)

    def test_deterministic_and_total(self):
        inputs = [
            ("", ""),
            ("?", "some context."),
            ("did it work", "it did work."),
            ("what is this", "no overlap at all."),
        ]
        for question, context in inputs:
            a = reference_answerer(question, context)
            b = reference_answerer(question, context)
            assert a == b


class TestBackendAnswerer:
    def test_confidence_default_flagged(self):
        answerer = make_backend_answerer(lambda q, c: ("some answer", None))
        cand = answerer("q", "context")
        assert cand.confidence == 0.5
        assert cand.confidence_defaulted

    def test_classification(self):
        assert classify_generated("", "ctx") == ("", "no_answer")
        assert classify_generated("no answer", "ctx") == ("", "no_answer")
        assert classify_generated("Yes", "ctx") == ("yes", "boolean")
        assert classify_generated("No.", "ctx") == ("no", "boolean")
        assert classify_generated("verbatim span", "has a verbatim span inside") == (
            "verbatim span", "extractive")
        assert classify_generated("novel wording", "different text") == (
            "novel wording", "abstractive")


class TestWeakSampler:
    def _question(self, n_answers=1):
        answers = [GoldAnswer("abstractive", f"answer {i}") for i in range(n_answers)]
        return QuestionRecord(
            question_id="q", doc_id="d", text="what is sampled?",
            gold_answers=answers, gold_evidence=frozenset({"p1"}),
        )

    def test_probabilities_normalized(self):
        probs = sampling_probabilities(ranked_list([0.8, 0.2]))
        assert abs(sum(probs) - 1.0) < 1e-12
        assert probs[0] == pytest.approx(0.8, abs=1e-5)
        assert probs[1] == pytest.approx(0.2, abs=1e-5)

    def test_uniform_for_equal_scores(self):
        probs = sampling_probabilities(ranked_list([1.0, 1.0, 1.0]))
        assert probs == pytest.approx([1 / 3] * 3)

    def test_all_zero_scores_uniform(self):
        probs = sampling_probabilities(ranked_list([0.0, 0.0, 0.0, 0.0]))
        assert probs == pytest.approx([0.25] * 4)

    def test_negative_scores_rejected(self):
        ranked = RankedList("q", [("p1", 1.0), ("p2", -0.5)], "dual_encoder")
        with pytest.raises(ValueError):
            sampling_probabilities(ranked)

    def test_monte_carlo_frequencies(self):
        """10k draws over [0.9, 0.09, 0.01] land within +-0.02 of p."""
        ranked = ranked_list([0.9, 0.09, 0.01])
        examples = weak_supervision_sampler(self._question(), ranked, 10_000, seed=1234,
                                            passages={"p1": "a", "p2": "b", "p3": "c"})
        counts = Counter(ex.sampled_rank for ex in examples)
        for rank, expected in ((1, 0.9), (2, 0.09), (3, 0.01)):
            assert abs(counts[rank] / 10_000 - expected) <= 0.02
        # Empirical ordering matches the score ordering.
        assert counts[1] > counts[2] > counts[3]

    def test_seed_reproducible(self):
        ranked = ranked_list([0.5, 0.3, 0.2])
        passages = {"p1": "a", "p2": "b", "p3": "c"}
        a = weak_supervision_sampler(self._question(), ranked, 50, 7, passages)
        b = weak_supervision_sampler(self._question(), ranked, 50, 7, passages)
        assert a == b
        c = weak_supervision_sampler(self._question(), ranked, 50, 8, passages)
        assert a != c

    def test_gold_answers_cycled(self):
        ranked = ranked_list([1.0])
        q = self._question(n_answers=2)
        examples = weak_supervision_sampler(q, ranked, 4, 0, passages={"p1": "ctx"})
        assert [ex.target for ex in examples] == ["answer 0", "answer 1", "answer 0", "answer 1"]

    def test_sample_prob_matches_rank(self):
        ranked = ranked_list([0.7, 0.3])
        probs = sampling_probabilities(ranked)
        examples = weak_supervision_sampler(self._question(), ranked, 100, 3,
                                            passages={"p1": "a", "p2": "b"})
        for ex in examples:
            assert ex.sample_prob == probs[ex.sampled_rank - 1]
