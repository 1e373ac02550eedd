"""Tests for copy labeling."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from prom.copylabel import LabelReport, label_copy_tokens, label_corpus, matched_windows
from prom.corpus import JsonlLine, read_jsonl
from prom.textcore import TokenSeq, tokenize

FIXTURES = Path(__file__).parent / "fixtures"

ARTICLE = (
    "Hollywood actor John Cusack is the latest supporter to visit WikiLeaks founder Julian Assange "
    "in his continued stay at the Ecuadorian Embassy..."
)
SUMMARY = "Hollywood actor is latest supporter to visit WikiLeaks founder Assange."


def brute_force_labels(src: list[str], tgt: list[str], n: int) -> tuple[int, ...]:
    """Label i when some source window covering i equals some target window."""
    labels = []
    for i in range(len(src)):
        hit = False
        for start in range(max(0, i - n + 1), i + 1):
            if start + n > len(src):
                continue
            for t in range(len(tgt) - n + 1):
                if src[start : start + n] == tgt[t : t + n]:
                    hit = True
        labels.append(1 if hit else 0)
    return tuple(labels)


class TestLabelCopyTokens:
    """Test per-token copy labels."""

    def test_worked_example(self) -> None:
        """Bigram labels of the actor/WikiLeaks example."""
        src = tokenize(ARTICLE)
        mask = label_copy_tokens(src, tokenize(SUMMARY), 2)
        labeled = {src.tokens[i] for i in mask.positions}
        assert labeled == {"hollywood", "actor", "latest", "supporter", "to", "visit", "wikileaks", "founder"}
        for word in ("john", "cusack", "julian", "assange"):
            assert mask.labels[src.tokens.index(word)] == 0
        assert len(mask) == len(src)
        assert mask.n == 2

    def test_disjoint_vocabularies(self) -> None:
        """No shared n-gram means no labels."""
        mask = label_copy_tokens(TokenSeq.from_tokens("a b c".split()), TokenSeq.from_tokens("x y z".split()), 2)
        assert mask.labels == (0, 0, 0)
        assert mask.positions == []

    def test_source_shorter_than_n(self) -> None:
        """A source shorter than n is all zeros."""
        mask = label_copy_tokens(TokenSeq.from_tokens(["a"]), TokenSeq.from_tokens(["a"]), 2)
        assert mask.labels == (0,)

    def test_zero_order_rejected(self) -> None:
        """n must be at least 1."""
        with pytest.raises(ValueError, match="order"):
            label_copy_tokens(TokenSeq.from_tokens(["a"]), TokenSeq.from_tokens(["a"]), 0)

    def test_self_labels_everything(self) -> None:
        """Labeling a sequence against itself marks every token."""
        x = TokenSeq.from_tokens("a b a c d".split())
        for n in range(1, 6):
            assert label_copy_tokens(x, x, n).labels == (1,) * 5

    def test_target_ngram_licenses_several_windows(self) -> None:
        """A target n-gram seen once still labels every matching source window."""
        mask = label_copy_tokens(TokenSeq.from_tokens("a b x a b".split()), TokenSeq.from_tokens("a b".split()), 2)
        assert mask.labels == (1, 1, 0, 1, 1)
        assert matched_windows(TokenSeq.from_tokens("a b x a b".split()), TokenSeq.from_tokens("a b".split()), 2) == [
            0,
            3,
        ]

    def test_brute_force_oracle(self) -> None:
        """Random instances agree with the window-pair oracle."""
        rng = random.Random(1)
        for _ in range(1000):
            src = [rng.choice("abcdef") for _ in range(rng.randint(0, 60))]
            tgt = [rng.choice("abcdef") for _ in range(rng.randint(0, 25))]
            n = rng.choice((1, 2, 3))
            mask = label_copy_tokens(TokenSeq.from_tokens(src), TokenSeq.from_tokens(tgt), n)
            assert mask.labels == brute_force_labels(src, tgt, n)

    def test_monotone_in_order(self) -> None:
        """Positions labeled at order n + 1 are labeled at order n."""
        rng = random.Random(2)
        for _ in range(200):
            src = TokenSeq.from_tokens(rng.choice("abcd") for _ in range(40))
            tgt = TokenSeq.from_tokens(rng.choice("abcd") for _ in range(15))
            for n in (1, 2, 3):
                wider = set(label_copy_tokens(src, tgt, n + 1).positions)
                assert wider <= set(label_copy_tokens(src, tgt, n).positions)

    def test_runs_are_window_unions(self) -> None:
        """Every labeled run is at least n tokens long."""
        rng = random.Random(4)
        for _ in range(200):
            src = TokenSeq.from_tokens(rng.choice("abc") for _ in range(30))
            tgt = TokenSeq.from_tokens(rng.choice("abc") for _ in range(10))
            labels = label_copy_tokens(src, tgt, 3).labels
            runs = "".join(map(str, labels)).split("0")
            assert all(len(run) >= 3 for run in runs if run)


def fixture_lines() -> list[JsonlLine]:
    with (FIXTURES / "records.jsonl").open(encoding="utf-8") as handle:
        return list(read_jsonl(handle))


class TestLabelCorpus:
    """Test streaming corpus labeling."""

    def test_empty_stream(self) -> None:
        """An empty stream yields nothing and counts nothing."""
        report = LabelReport()
        assert list(label_corpus([], 2, report=report)) == []
        assert (report.labeled, report.skipped) == (0, 0)

    def test_fixture_records(self) -> None:
        """Each record gains the labels a direct call gives."""
        report = LabelReport()
        records = list(label_corpus(fixture_lines(), 2, report=report))
        assert [record["id"] for record in records] == ["r1", "r2", "r3"]
        assert report.labeled == 3
        for record in records:
            mask = label_copy_tokens(tokenize(record["document"]), tokenize(record["summary"]), 2)
            assert record["copy_labels"] == list(mask.labels)
            assert record["copy_label_n"] == 2
            assert "prediction" in record

    def test_byte_stable_across_thread_counts(self) -> None:
        """Serialized output is identical for any thread count."""
        lines = [
            JsonlLine(i + 1, {"id": f"d{i}", "document": f"w{i} a b c d e", "summary": f"a b w{i}"}) for i in range(50)
        ]
        single = [json.dumps(record) for record in label_corpus(lines, 2, threads=1)]
        pooled = [json.dumps(record) for record in label_corpus(lines, 2, threads=4)]
        assert single == pooled
        assert single == [json.dumps(record) for record in label_corpus(lines, 2, threads=1)]

    def test_malformed_records_skipped(self) -> None:
        """Invalid JSON and schema violations are counted with their line numbers."""
        lines = [
            JsonlLine(1, {"id": "ok", "document": "a b c", "summary": "a b"}),
            JsonlLine(2, None, "invalid JSON"),
            JsonlLine(3, {"id": "no-summary", "document": "a b"}),
        ]
        report = LabelReport()
        records = list(label_corpus(lines, 2, report=report))
        assert [record["id"] for record in records] == ["ok"]
        assert records[0]["copy_labels"] == [1, 1, 0]
        assert report.skipped == 2
        assert [line for line, _ in report.failures] == [2, 3]

    def test_extra_fields_preserved(self) -> None:
        """Unknown keys pass through."""
        lines = [JsonlLine(1, {"id": "x", "document": "a b", "summary": "a b", "source": "wire"})]
        assert next(iter(label_corpus(lines, 1)))["source"] == "wire"

    def test_zero_order_rejected(self) -> None:
        """The order is checked before any record is read."""
        with pytest.raises(ValueError, match="order"):
            list(label_corpus([], 0))
