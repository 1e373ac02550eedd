"""Tests for textcore module."""

from __future__ import annotations

import random
import string
from collections import Counter
from pathlib import Path

import pytest

from prom.textcore import (
    Fragment,
    NGram,
    SentenceSpan,
    TokenSeq,
    WordTokenizer,
    distinct_ngrams,
    extract_fragments,
    extract_ngrams,
    load_word_list,
    ngram_windows,
    sentence_texts,
    split_sentences,
    tokenize,
)

WORD_CHARS = set(string.ascii_letters + string.digits + "_")


def reference_scan(text: str) -> list[str]:
    """Character-level scanner: word runs, each other non-space char on its own."""
    tokens: list[str] = []
    word = ""
    for char in text:
        if char in WORD_CHARS:
            word += char
            continue
        if word:
            tokens.append(word)
            word = ""
        if not char.isspace():
            tokens.append(char)
    if word:
        tokens.append(word)
    return tokens


def seq(text: str) -> TokenSeq:
    return TokenSeq.from_tokens(text.split())


class TestTokenize:
    """Test tokenization and offsets."""

    def test_empty_text(self) -> None:
        """Empty text gives an empty sequence."""
        tokens = tokenize("")
        assert len(tokens) == 0
        assert tokens.tokens == ()

    def test_case_folding(self) -> None:
        """Tokens are case-folded by default."""
        assert tokenize("Hollywood actor John Cusack").tokens == ("hollywood", "actor", "john", "cusack")
        assert tokenize("Hollywood actor", fold_case=False).tokens == ("Hollywood", "actor")

    def test_full_case_folding_keeps_offsets(self) -> None:
        """Case folding expands characters in the token while offsets stay on the original text."""
        tokens = tokenize("Straße")
        assert tokens.tokens == ("strasse",)
        assert tokens.offsets == ((0, 6),)
        assert tokens.surface(0) == "Straße"

    def test_offsets_reproduce_tokens(self) -> None:
        """Slicing the text by offsets gives back each token before folding."""
        text = "Mr. Smith's dog (aged 3) barked!  Loudly."
        tokens = tokenize(text)
        for index, token in enumerate(tokens.tokens):
            start, end = tokens.offsets[index]
            assert text[start:end].casefold() == token
            assert tokens.surface(index) == text[start:end]

    def test_matches_reference_scanner(self) -> None:
        """Random mixed strings tokenize like an independent scanner."""
        rng = random.Random(7)
        alphabet = "abXY09_ .,!?'-()\"\n"
        for _ in range(200):
            text = "".join(rng.choice(alphabet) for _ in range(50))
            assert list(tokenize(text, fold_case=False).tokens) == reference_scan(text)

    def test_round_trip(self) -> None:
        """Re-tokenizing the space-joined tokens gives the same tokens."""
        text = "It's 9:30, said Dr. O'Neil -- (really)!"
        tokens = tokenize(text).tokens
        assert tokenize(" ".join(tokens)).tokens == tokens

    def test_word_tokenizer(self) -> None:
        """WordTokenizer wraps tokenize."""
        assert WordTokenizer()("A b").tokens == ("a", "b")
        assert WordTokenizer(fold_case=False)("A b").tokens == ("A", "b")


class TestTokenSeq:
    """Test TokenSeq invariants and helpers."""

    def test_length_mismatch_rejected(self) -> None:
        """Tokens and offsets must have equal length."""
        with pytest.raises(ValueError, match="differ in length"):
            TokenSeq(("a",), ((0, 1), (2, 3)))

    def test_overlapping_offsets_rejected(self) -> None:
        """Offsets must not overlap."""
        with pytest.raises(ValueError, match="increasing"):
            TokenSeq(("ab", "b"), ((0, 2), (1, 2)))

    def test_from_tokens(self) -> None:
        """Ready-made tokens are laid out as if space-joined."""
        tokens = TokenSeq.from_tokens(["A", "bc"])
        assert tokens.text == "A bc"
        assert tokens.offsets == ((0, 1), (2, 4))
        assert tokens.tokens == ("A", "bc")
        assert TokenSeq.from_tokens(["A"], fold_case=True).tokens == ("a",)

    def test_slice_and_take(self) -> None:
        """Slices and concatenated ranges keep their offsets."""
        tokens = seq("a b c d e")
        assert tokens.slice(1, 3).tokens == ("b", "c")
        taken = tokens.take([(0, 1), (3, 5)])
        assert taken.tokens == ("a", "d", "e")
        assert taken.surface(1) == "d"


class TestSplitSentences:
    """Test rule-based sentence splitting."""

    def test_two_periods_without_guard(self) -> None:
        """'A. B.' splits in two when the guard is off."""
        assert split_sentences("A. B.", abbreviations=()) == [SentenceSpan(0, 2), SentenceSpan(2, 4)]

    def test_no_terminal_punctuation(self) -> None:
        """Text without terminal punctuation is one sentence."""
        assert split_sentences("hello world and more") == [SentenceSpan(0, 4)]

    def test_empty_text(self) -> None:
        """Empty text has no sentences."""
        assert split_sentences("") == []

    def test_abbreviation_guard(self) -> None:
        """A guarded abbreviation does not end a sentence."""
        text = "Dr. Smith arrived. He sat down."
        assert split_sentences(text) == [SentenceSpan(0, 5), SentenceSpan(5, 9)]
        assert len(split_sentences(text, abbreviations=())) == 3

    def test_closing_quote_stays_with_sentence(self) -> None:
        """Closing quotes attached to the terminal mark belong to the sentence."""
        assert split_sentences('He said "Stop." Then left.') == [SentenceSpan(0, 6), SentenceSpan(6, 9)]

    def test_lowercase_continuation(self) -> None:
        """A lower-case word after a period does not start a sentence."""
        assert split_sentences("It rained. then it stopped.") == [SentenceSpan(0, 7)]

    def test_fixture_paragraph(self) -> None:
        """A ten-sentence paragraph splits at the hand-annotated boundaries."""
        expected = [
            "The storm hit at dawn.",
            "Roads were closed!",
            "Did anyone expect it?",
            "Officials said nothing.",
            "Mr. Lee disagreed.",
            "He had warned them.",
            'He wrote: "Prepare now."',
            "Nobody listened.",
            "Power failed at noon.",
            "Repairs began the next day.",
        ]
        text = " ".join(expected)
        spans = split_sentences(text)
        assert [part.strip() for part in sentence_texts(text, spans)] == expected

    def test_spans_partition_tokens(self) -> None:
        """Spans are contiguous, non-empty and cover every token."""
        rng = random.Random(3)
        words = ["Alpha", "beta", "Gamma", "delta", ".", "!", "?", "Mr", '"']
        for _ in range(100):
            text = " ".join(rng.choice(words) for _ in range(30)).replace(" .", ".")
            spans = split_sentences(text)
            assert spans[0].start_token == 0
            assert spans[-1].end_token == len(tokenize(text))
            for before, after in zip(spans, spans[1:], strict=False):
                assert before.end_token == after.start_token
            assert all(span.start_token < span.end_token for span in spans)

    def test_sentence_texts_tile_text(self) -> None:
        """Sentence slices concatenate back to the original text."""
        text = "  First one. Second one!  Third? "
        spans = split_sentences(text)
        assert len(spans) == 3
        assert "".join(sentence_texts(text, spans)) == text

    def test_custom_word_list(self, tmp_path: Path) -> None:
        """Word lists skip comments and blank lines and are case-folded."""
        path = tmp_path / "abbrev.txt"
        path.write_text("# comment\n\nProf\nVs\n", encoding="utf-8")
        assert load_word_list(path) == frozenset({"prof", "vs"})


class TestNGrams:
    """Test n-gram extraction."""

    def test_bigrams(self) -> None:
        """Bigrams of a b c."""
        assert extract_ngrams(seq("a b c"), 2) == Counter({NGram(2, ("a", "b")): 1, NGram(2, ("b", "c")): 1})

    def test_too_short(self) -> None:
        """Sequences shorter than n have no n-grams."""
        assert extract_ngrams(seq("a b"), 3) == Counter()

    def test_zero_order_rejected(self) -> None:
        """n must be at least 1."""
        with pytest.raises(ValueError, match="order"):
            extract_ngrams(seq("a b"), 0)
        with pytest.raises(ValueError, match="order"):
            ngram_windows(["a"], 0)

    def test_brute_force_oracle(self) -> None:
        """Counts equal a double-loop enumeration and sum to len - n + 1."""
        rng = random.Random(11)
        for _ in range(50):
            tokens = [rng.choice("abcd") for _ in range(30)]
            expected: Counter[NGram] = Counter()
            for start in range(len(tokens) - 2):
                expected[NGram(3, tuple(tokens[start + k] for k in range(3)))] += 1
            counts = extract_ngrams(TokenSeq.from_tokens(tokens), 3)
            assert counts == expected
            assert counts.total() == 28

    def test_distinct(self) -> None:
        """Distinct n-grams drop repeats."""
        assert distinct_ngrams(["a", "b", "a", "b"], 2) == {("a", "b"), ("b", "a")}


def exhaustive_fragments(x: list[str], y: list[str]) -> list[Fragment]:
    """Longest-first search over every substring of y starting at each scan position."""
    fragments: list[Fragment] = []
    j = 0
    while j < len(y):
        found = None
        for length in range(len(y) - j, 0, -1):
            piece = y[j : j + length]
            for i in range(len(x) - length + 1):
                if x[i : i + length] == piece:
                    found = Fragment(i, j, length)
                    break
            if found:
                break
        if found:
            fragments.append(found)
            j += found.length
        else:
            j += 1
    return fragments


class TestExtractFragments:
    """Test greedy shared-fragment extraction."""

    def test_identical(self) -> None:
        """Identical sequences form one fragment."""
        fragments = extract_fragments(seq("a b c d"), seq("a b c d"))
        assert fragments.fragments == (Fragment(0, 0, 4),)
        assert fragments.lengths == [4]

    def test_disjoint(self) -> None:
        """Disjoint vocabularies share nothing."""
        assert extract_fragments(seq("a b"), seq("c d")).fragments == ()

    def test_leftmost_on_ties(self) -> None:
        """Equal-length matches take the leftmost source position."""
        fragments = extract_fragments(seq("x a b y a b"), seq("a b"))
        assert fragments.fragments == (Fragment(1, 0, 2),)

    def test_exhaustive_oracle(self) -> None:
        """Random short pairs over a 5-symbol alphabet match the exhaustive search."""
        rng = random.Random(5)
        for _ in range(500):
            x = [rng.choice("abcde") for _ in range(rng.randint(0, 20))]
            y = [rng.choice("abcde") for _ in range(rng.randint(0, 20))]
            result = extract_fragments(TokenSeq.from_tokens(x), TokenSeq.from_tokens(y))
            assert list(result.fragments) == exhaustive_fragments(x, y)
            for fragment in result.fragments:
                start, length = fragment.src_start, fragment.length
                assert x[start : start + length] == y[fragment.tgt_start : fragment.tgt_start + length]
            starts = [fragment.tgt_start for fragment in result.fragments]
            assert starts == sorted(set(starts))
