"""Tests for ROUGE scoring."""

from __future__ import annotations

import random
import re
from functools import cache

import pytest

from prom.rouge import VARIANTS, lcs_length, rouge_f1, rouge_scores, rouge_tokens

WORDS = ["a", "b", "c", "d", "e", "Fox", "g,", "h.", "--"]


def oracle_tokens(text: str) -> list[str]:
    return re.findall(r"[a-z0-9]+", text.lower())


def clipped_hits(pred: list[str], ref: list[str], n: int) -> int:
    """Match each predicted n-gram against a not-yet-used reference n-gram."""
    remaining = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    hits = 0
    for i in range(len(pred) - n + 1):
        gram = tuple(pred[i : i + n])
        if gram in remaining:
            remaining.remove(gram)
            hits += 1
    return hits


def oracle_lcs(a: list[str], b: list[str]) -> int:
    @cache
    def best(i: int, j: int) -> int:
        if i == len(a) or j == len(b):
            return 0
        if a[i] == b[j]:
            return 1 + best(i + 1, j + 1)
        return max(best(i + 1, j), best(i, j + 1))

    return best(0, 0)


def oracle_score(hits: int, pred_total: int, ref_total: int) -> tuple[float, float, float]:
    precision = hits / pred_total if pred_total else 0.0
    recall = hits / ref_total if ref_total else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def random_text(rng: random.Random) -> str:
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(0, 12)))


class TestRouge:
    """Test ROUGE variants."""

    def test_identical_texts(self) -> None:
        """Identical texts score 1 in every variant."""
        text = "The cat sat on the mat.\nIt was warm."
        for variant, score in rouge_scores(text, text).items():
            assert score.f1 == pytest.approx(1.0), variant
        assert set(rouge_scores(text, text)) == set(VARIANTS)

    def test_tokens(self) -> None:
        """Punctuation-only tokens are dropped and case is folded."""
        assert rouge_tokens("Hello, World -- again!") == ["hello", "world", "again"]

    def test_ngram_oracle(self) -> None:
        """rouge1 and rouge2 match clipped multiset counting."""
        rng = random.Random(21)
        for _ in range(500):
            pred, ref = random_text(rng), random_text(rng)
            pred_tokens, ref_tokens = oracle_tokens(pred), oracle_tokens(ref)
            for n, variant in ((1, "rouge1"), (2, "rouge2")):
                expected = oracle_score(
                    clipped_hits(pred_tokens, ref_tokens, n),
                    max(0, len(pred_tokens) - n + 1),
                    max(0, len(ref_tokens) - n + 1),
                )
                score = rouge_f1(pred, ref, variant)
                assert (score.precision, score.recall, score.f1) == pytest.approx(expected, abs=1e-9)

    def test_lcs_oracle(self) -> None:
        """rougeL matches a recursive LCS."""
        rng = random.Random(22)
        for _ in range(500):
            pred, ref = random_text(rng), random_text(rng)
            pred_tokens, ref_tokens = oracle_tokens(pred), oracle_tokens(ref)
            lcs = oracle_lcs(ref_tokens, pred_tokens)
            assert lcs_length(ref_tokens, pred_tokens) == lcs
            score = rouge_f1(pred, ref, "rougeL")
            expected = oracle_score(lcs, len(pred_tokens), len(ref_tokens))
            assert (score.precision, score.recall, score.f1) == pytest.approx(expected, abs=1e-9)

    def test_single_line_lsum_equals_l(self) -> None:
        """Without newlines rougeLsum equals rougeL."""
        rng = random.Random(23)
        for _ in range(200):
            pred, ref = random_text(rng), random_text(rng)
            assert rouge_f1(pred, ref, "rougeLsum").f1 == pytest.approx(rouge_f1(pred, ref, "rougeL").f1)

    def test_lsum_uses_newlines(self) -> None:
        """Reordered sentences keep full rougeLsum but halve rougeL."""
        ref, pred = "a b\nc d", "c d\na b"
        assert rouge_f1(pred, ref, "rougeLsum").f1 == pytest.approx(1.0)
        assert rouge_f1(pred, ref, "rougeL").f1 == pytest.approx(0.5)

    def test_empty_prediction(self) -> None:
        """An empty prediction scores 0."""
        assert rouge_f1("", "a b", "rouge1").f1 == 0.0
        assert rouge_f1("", "a b", "rougeLsum").f1 == 0.0

    def test_unknown_variant(self) -> None:
        """Unknown variants are rejected."""
        with pytest.raises(ValueError, match="Unknown ROUGE variant"):
            rouge_f1("a", "a", "rouge3")  # type: ignore[arg-type]
