"""Tokenization, sentence splitting, n-grams and shared-fragment extraction.

Every other module works on `TokenSeq` values produced here. All functions are
pure, so they can be called from any number of workers at once.
"""

import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cache
from importlib import resources
from typing import TYPE_CHECKING, Final, NamedTuple, Protocol

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence
    from pathlib import Path

TOKEN_PATTERN: Final[re.Pattern[str]] = re.compile(r"\w+|[^\w\s]")
TERMINAL_PUNCTUATION: Final[frozenset[str]] = frozenset({".", "!", "?"})
CLOSING_PUNCTUATION: Final[frozenset[str]] = frozenset({'"', "'", ")", "]", "}", "”", "’"})


@dataclass(frozen=True)
class TokenSeq:
    """Tokenized text with character offsets into the original string.

    Attributes:
        tokens: Token strings (case-folded when `fold_case` is set)
        offsets: Per-token (start, end) character spans into `text`
        fold_case: Whether case folding was applied to `tokens`
        text: The original text the offsets refer to
    """

    tokens: tuple[str, ...]
    offsets: tuple[tuple[int, int], ...]
    fold_case: bool = True
    text: str = ""

    def __post_init__(self) -> None:
        """Check the offset invariants."""
        if len(self.tokens) != len(self.offsets):
            msg = f"tokens ({len(self.tokens)}) and offsets ({len(self.offsets)}) differ in length"
            raise ValueError(msg)
        previous_end = -1
        for start, end in self.offsets:
            if start < previous_end or end <= start:
                msg = f"offsets must be increasing and non-overlapping, got ({start}, {end})"
                raise ValueError(msg)
            previous_end = end

    def __len__(self) -> int:
        """Return the number of tokens."""
        return len(self.tokens)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], *, fold_case: bool = False) -> TokenSeq:
        """Build a sequence from ready-made tokens, as if they were joined by single spaces.

        Args:
            tokens: Token strings
            fold_case: Case-fold the tokens

        Returns:
            TokenSeq whose `text` is the space-joined tokens
        """
        items = [str(token) for token in tokens]
        offsets: list[tuple[int, int]] = []
        cursor = 0
        for item in items:
            offsets.append((cursor, cursor + len(item)))
            cursor += len(item) + 1
        folded = tuple(item.casefold() for item in items) if fold_case else tuple(items)
        return cls(tokens=folded, offsets=tuple(offsets), fold_case=fold_case, text=" ".join(items))

    def surface(self, index: int) -> str:
        """Return token `index` as it appears in the original text (before case folding)."""
        start, end = self.offsets[index]
        return self.text[start:end]

    def slice(self, start: int, end: int) -> TokenSeq:
        """Return tokens `start..end` (exclusive) as a new sequence over the same text."""
        return TokenSeq(self.tokens[start:end], self.offsets[start:end], self.fold_case, self.text)

    def take(self, ranges: Iterable[tuple[int, int]]) -> TokenSeq:
        """Concatenate several token ranges, which must be given in increasing order.

        Args:
            ranges: (start, end) token ranges

        Returns:
            TokenSeq over the same text holding the selected tokens
        """
        tokens: list[str] = []
        offsets: list[tuple[int, int]] = []
        for start, end in ranges:
            tokens.extend(self.tokens[start:end])
            offsets.extend(self.offsets[start:end])
        return TokenSeq(tuple(tokens), tuple(offsets), self.fold_case, self.text)


class Tokenizer(Protocol):
    """Anything that turns raw text into a `TokenSeq` (a sub-word tokenizer can be slotted in here)."""

    def __call__(self, text: str) -> TokenSeq:
        """Tokenize `text`."""
        ...


@dataclass(frozen=True)
class WordTokenizer:
    """Default word-level tokenizer: runs of word characters, each punctuation mark on its own."""

    fold_case: bool = True

    def __call__(self, text: str) -> TokenSeq:
        """Tokenize `text`."""
        return tokenize(text, fold_case=self.fold_case)


class SentenceSpan(NamedTuple):
    """Token range [start_token, end_token) of one sentence."""

    start_token: int
    end_token: int


class NGram(NamedTuple):
    """An n-gram of token strings."""

    n: int
    items: tuple[str, ...]


@dataclass(frozen=True)
class Fragment:
    """A run of tokens shared verbatim by x (at `src_start`) and y (at `tgt_start`)."""

    src_start: int
    tgt_start: int
    length: int


@dataclass(frozen=True)
class FragmentSet:
    """Greedy shared-fragment decomposition of y against x.

    Attributes:
        fragments: Fragments ordered by position in y, disjoint in y
        x_len: Token count of x
        y_len: Token count of y
    """

    fragments: tuple[Fragment, ...]
    x_len: int
    y_len: int

    @property
    def lengths(self) -> list[int]:
        """Fragment lengths in y order."""
        return [fragment.length for fragment in self.fragments]


def tokenize(text: str, *, fold_case: bool = True) -> TokenSeq:
    """Split text into word and punctuation tokens with exact character offsets.

    Args:
        text: Raw text
        fold_case: Case-fold the token strings (offsets always refer to the original text)

    Returns:
        TokenSeq over `text`
    """
    tokens: list[str] = []
    offsets: list[tuple[int, int]] = []
    for match in TOKEN_PATTERN.finditer(text):
        token = match.group()
        tokens.append(token.casefold() if fold_case else token)
        offsets.append(match.span())
    return TokenSeq(tuple(tokens), tuple(offsets), fold_case, text)


def load_word_list(path: Path | None = None, *, resource: str = "abbreviations.txt") -> frozenset[str]:
    """Load a one-entry-per-line UTF-8 word list, case-folded.

    Args:
        path: File to read; the bundled `resource` is used when None
        resource: Name of the bundled data file

    Returns:
        Set of entries; blank lines and `#` comments are skipped
    """
    if path is None:
        content = resources.files("prom.data").joinpath(resource).read_text(encoding="utf-8")
    else:
        content = path.read_text(encoding="utf-8")
    entries = (line.strip() for line in content.splitlines())
    return frozenset(entry.casefold() for entry in entries if entry and not entry.startswith("#"))


@cache
def default_abbreviations() -> frozenset[str]:
    """Return the bundled abbreviation guard list."""
    return load_word_list()


def split_sentences(text: str, *, abbreviations: Iterable[str] | None = None) -> list[SentenceSpan]:
    """Split text into sentences over its tokenization.

    A boundary follows a run of terminal punctuation (plus any closing quotes or
    brackets attached to it) when whitespace and then an upper-case letter come
    next. A single period attached to a guarded abbreviation is not a boundary.

    Args:
        text: Raw text
        abbreviations: Abbreviation guard list; None uses the bundled list, an
            empty collection turns the guard off

    Returns:
        Sentence spans partitioning the tokens of `text` in order
    """
    guard = default_abbreviations() if abbreviations is None else frozenset(a.casefold() for a in abbreviations)
    seq = tokenize(text, fold_case=False)
    count = len(seq)
    if count == 0:
        return []

    spans: list[SentenceSpan] = []
    start = 0
    index = 0
    while index < count:
        if seq.tokens[index] not in TERMINAL_PUNCTUATION:
            index += 1
            continue
        run_end = index
        while run_end + 1 < count and _attached(seq, run_end) and (
            seq.tokens[run_end + 1] in TERMINAL_PUNCTUATION or seq.tokens[run_end + 1] in CLOSING_PUNCTUATION
        ):
            run_end += 1
        following = run_end + 1
        if following < count and _opens_sentence(seq, run_end) and not _is_abbreviation(seq, index, run_end, guard):
            spans.append(SentenceSpan(start, following))
            start = following
        index = following
    spans.append(SentenceSpan(start, count))
    return spans


def _attached(seq: TokenSeq, index: int) -> bool:
    return seq.offsets[index][1] == seq.offsets[index + 1][0]


def _opens_sentence(seq: TokenSeq, run_end: int) -> bool:
    gap = seq.text[seq.offsets[run_end][1] : seq.offsets[run_end + 1][0]]
    return bool(gap) and gap.isspace() and seq.tokens[run_end + 1][0].isupper()


def _is_abbreviation(seq: TokenSeq, index: int, run_end: int, guard: frozenset[str]) -> bool:
    if run_end != index or seq.tokens[index] != "." or index == 0:
        return False
    if seq.offsets[index - 1][1] != seq.offsets[index][0]:
        return False
    return seq.tokens[index - 1].casefold() in guard


def sentence_texts(text: str, spans: Sequence[SentenceSpan]) -> list[str]:
    """Slice the raw text of each sentence so that the slices tile `text` exactly.

    Each slice runs from its first token to the first token of the next sentence;
    the first slice also holds any leading whitespace and the last one runs to the
    end of the text, so `"".join(sentence_texts(t, spans)) == t`.

    Args:
        text: Raw text the spans were computed on
        spans: Sentence spans from `split_sentences`

    Returns:
        One raw string per sentence
    """
    if not spans:
        return []
    seq = tokenize(text, fold_case=False)
    starts = [0] + [seq.offsets[span.start_token][0] for span in spans[1:]]
    ends = starts[1:] + [len(text)]
    return [text[begin:end] for begin, end in zip(starts, ends, strict=True)]


def ngram_windows(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    """Return every length-n window of `tokens` in order.

    Raises:
        ValueError: If n < 1
    """
    if n < 1:
        msg = f"n-gram order must be >= 1, got {n}"
        raise ValueError(msg)
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def extract_ngrams(seq: TokenSeq, n: int) -> Counter[NGram]:
    """Return the multiset of n-grams of `seq`.

    Args:
        seq: Token sequence
        n: Order, at least 1

    Returns:
        Counter with max(0, len - n + 1) n-grams in total

    Raises:
        ValueError: If n < 1
    """
    return Counter(NGram(n, window) for window in ngram_windows(seq.tokens, n))


def distinct_ngrams(tokens: Sequence[str], n: int) -> set[tuple[str, ...]]:
    """Return the set of distinct n-gram tuples of `tokens`."""
    return set(ngram_windows(tokens, n))


def extract_fragments(x: TokenSeq, y: TokenSeq) -> FragmentSet:
    """Greedy shared-fragment decomposition of y against x.

    Scans y left to right. At each position the longest run that occurs anywhere
    in x is taken (the leftmost occurrence in x on ties), emitted, and skipped
    over; a token with no match advances the scan by one.

    Args:
        x: Source sequence
        y: Target sequence

    Returns:
        FragmentSet ordered by position in y
    """
    positions: defaultdict[str, list[int]] = defaultdict(list)
    for index, token in enumerate(x.tokens):
        positions[token].append(index)

    fragments: list[Fragment] = []
    x_tokens, y_tokens = x.tokens, y.tokens
    x_len, y_len = len(x_tokens), len(y_tokens)
    j = 0
    while j < y_len:
        best_start, best_length = -1, 0
        for i in positions.get(y_tokens[j], ()):
            length = 0
            while i + length < x_len and j + length < y_len and x_tokens[i + length] == y_tokens[j + length]:
                length += 1
            if length > best_length:
                best_start, best_length = i, length
        if best_length:
            fragments.append(Fragment(best_start, j, best_length))
            j += best_length
        else:
            j += 1
    return FragmentSet(tuple(fragments), x_len, y_len)
