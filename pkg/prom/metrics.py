"""Extractiveness and copy metrics.

Fragment metrics (density, coverage, copy length) follow the greedy fragment
decomposition of `prom.textcore.extract_fragments`. Set-valued metrics (novelty,
copied n-gram F1, entity coverage) work on distinct n-grams / entities.
Corpus-level aggregation goes through accumulators whose `merge` is associative
and commutative, so partial results from parallel workers combine
deterministically.
"""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, NamedTuple

from prom.copylabel import matched_windows
from prom.textcore import distinct_ngrams, extract_fragments

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping, Sequence

    from prom.entities import EntityRecognizer
    from prom.textcore import SentenceSpan, TokenSeq

Normalization = Literal["source", "summary"]
PositionStatistic = Literal["start", "midpoint"]


class PRF(NamedTuple):
    """Precision, recall and F1."""

    precision: float
    recall: float
    f1: float


def harmonic_f1(precision: float, recall: float) -> float:
    """Return 2pr/(p+r), or 0 when p + r = 0."""
    total = precision + recall
    return 2 * precision * recall / total if total > 0 else 0.0


def set_prf(ought: set, actual: set) -> PRF:
    """Compare a predicted set against a reference set.

    Conventions: precision is 0 when `actual` is empty, recall is 0 when `ought`
    is empty, F1 is 0 when both are 0.
    """
    hits = len(ought & actual)
    precision = hits / len(actual) if actual else 0.0
    recall = hits / len(ought) if ought else 0.0
    return PRF(precision, recall, harmonic_f1(precision, recall))


def efd(x: TokenSeq, y: TokenSeq, *, normalize: Normalization = "source") -> float:
    """Extractive fragments density: sum of squared fragment lengths over |x|.

    Args:
        x: Sequence the fragments are drawn from
        y: Sequence scanned for fragments
        normalize: "source" divides by |x|; "summary" divides by |y| for
            comparability with tools that normalize by summary length

    Returns:
        Density, >= 0

    Raises:
        ValueError: If the normalizing sequence is empty
    """
    denominator = len(x) if normalize == "source" else len(y)
    if denominator == 0:
        msg = f"EFD is undefined for an empty {'x' if normalize == 'source' else 'y'}"
        raise ValueError(msg)
    fragments = extract_fragments(x, y)
    return sum(length * length for length in fragments.lengths) / denominator


def gsg_score(seq: TokenSeq, sentences: Sequence[SentenceSpan], i: int) -> float:
    """Importance of sentence i: EFD of the sentence against the rest of the passage.

    Args:
        seq: Tokens of the whole passage
        sentences: Sentence spans over `seq`
        i: Index of the sentence to score

    Returns:
        EFD(d_i, D without d_i), the rest kept in original order

    Raises:
        ValueError: If the passage has fewer than 2 sentences or i is out of range
    """
    if len(sentences) < 2:  # noqa: PLR2004
        msg = "sentence importance needs at least 2 sentences"
        raise ValueError(msg)
    if not 0 <= i < len(sentences):
        msg = f"sentence index {i} out of range for {len(sentences)} sentences"
        raise ValueError(msg)
    sentence = seq.slice(*sentences[i])
    rest = seq.take(span for index, span in enumerate(sentences) if index != i)
    return efd(sentence, rest)


def copy_length(x: TokenSeq, y: TokenSeq) -> float:
    """Mean length of the fragments shared by x and y (0 when there are none)."""
    lengths = extract_fragments(x, y).lengths
    return sum(lengths) / len(lengths) if lengths else 0.0


def coverage(x: TokenSeq, y: TokenSeq) -> float:
    """Fraction of y tokens that lie inside a shared fragment (0 for an empty y)."""
    if not len(y):
        return 0.0
    return sum(extract_fragments(x, y).lengths) / len(y)


def ngram_novelty(x: TokenSeq, y: TokenSeq, n: int) -> float:
    """Share of distinct summary n-grams that never occur in the source.

    Args:
        x: Source tokens
        y: Summary tokens
        n: n-gram order

    Returns:
        Ratio in [0, 1]

    Raises:
        ValueError: If y has fewer than n tokens or n < 1
    """
    if len(y) < n:
        msg = f"summary has {len(y)} tokens, fewer than n={n}"
        raise ValueError(msg)
    summary_ngrams = distinct_ngrams(y.tokens, n)
    novel = summary_ngrams - distinct_ngrams(x.tokens, n)
    return len(novel) / len(summary_ngrams)


def copied_ngram_f1(src: TokenSeq, ref: TokenSeq, pred: TokenSeq, n: int) -> PRF:
    """F1 between n-grams that ought to be copied and n-grams actually copied.

    ought = distinct n-grams shared by source and reference; actual = distinct
    n-grams shared by source and prediction.

    Raises:
        ValueError: If n < 1
    """
    source = distinct_ngrams(src.tokens, n)
    ought = source & distinct_ngrams(ref.tokens, n)
    actual = source & distinct_ngrams(pred.tokens, n)
    return set_prf(ought, actual)


def entity_prf(ref: TokenSeq, pred: TokenSeq, recognizer: EntityRecognizer) -> PRF:
    """Entity coverage of a prediction against its reference.

    p = |NE(ref) & NE(pred)| / |NE(pred)|, r = |NE(ref) & NE(pred)| / |NE(ref)|.
    """
    return set_prf(set(recognizer(ref).entities), set(recognizer(pred).entities))


@dataclass(frozen=True)
class ExtractivenessReport:
    """Extractiveness of one document/summary pair.

    Attributes:
        efd: Extractive fragments density
        copy_length: Mean shared-fragment length
        novelty: n-gram order -> share of novel summary n-grams
        coverage: Fraction of summary tokens inside shared fragments
    """

    efd: float
    copy_length: float
    novelty: Mapping[int, float]
    coverage: float = 0.0


def extractiveness_report(
    x: TokenSeq,
    y: TokenSeq,
    orders: Iterable[int] = (1, 2, 3, 4),
    *,
    normalize: Normalization = "source",
) -> ExtractivenessReport:
    """Compute every extractiveness metric of one pair.

    Novelty is only reported for orders the summary is long enough for.
    """
    lengths = extract_fragments(x, y).lengths
    denominator = len(x) if normalize == "source" else len(y)
    density = sum(length * length for length in lengths) / denominator if denominator else 0.0
    return ExtractivenessReport(
        efd=density,
        copy_length=sum(lengths) / len(lengths) if lengths else 0.0,
        novelty={n: ngram_novelty(x, y, n) for n in orders if len(y) >= n},
        coverage=sum(lengths) / len(y) if len(y) else 0.0,
    )


@dataclass
class ExtractivenessAccumulator:
    """Running sums for corpus-mean extractiveness."""

    pairs: int = 0
    efd_sum: float = 0.0
    copy_length_sum: float = 0.0
    coverage_sum: float = 0.0
    novelty_sum: dict[int, float] = field(default_factory=dict)
    novelty_count: dict[int, int] = field(default_factory=dict)

    def add(self, report: ExtractivenessReport) -> None:
        """Add one pair's report."""
        self.pairs += 1
        self.efd_sum += report.efd
        self.copy_length_sum += report.copy_length
        self.coverage_sum += report.coverage
        for n, value in report.novelty.items():
            self.novelty_sum[n] = self.novelty_sum.get(n, 0.0) + value
            self.novelty_count[n] = self.novelty_count.get(n, 0) + 1

    def merge(self, other: ExtractivenessAccumulator) -> ExtractivenessAccumulator:
        """Fold `other` into this accumulator and return it."""
        self.pairs += other.pairs
        self.efd_sum += other.efd_sum
        self.copy_length_sum += other.copy_length_sum
        self.coverage_sum += other.coverage_sum
        for n, value in other.novelty_sum.items():
            self.novelty_sum[n] = self.novelty_sum.get(n, 0.0) + value
            self.novelty_count[n] = self.novelty_count.get(n, 0) + other.novelty_count[n]
        return self

    def mean(self) -> ExtractivenessReport:
        """Corpus means (all zero for an empty corpus)."""
        if not self.pairs:
            return ExtractivenessReport(0.0, 0.0, {}, 0.0)
        return ExtractivenessReport(
            efd=self.efd_sum / self.pairs,
            copy_length=self.copy_length_sum / self.pairs,
            novelty={n: self.novelty_sum[n] / self.novelty_count[n] for n in sorted(self.novelty_sum)},
            coverage=self.coverage_sum / self.pairs,
        )


@dataclass(frozen=True)
class PositionHistogram:
    """Distribution of overlap positions over normalized source position [0, 1].

    Attributes:
        bins: Number of equal-width buckets
        mass: Per-bucket share; sums to 1, or is all zero when nothing overlapped
        total: Number of overlaps counted
    """

    bins: int
    mass: tuple[float, ...]
    total: int = 0


@dataclass
class HistogramAccumulator:
    """Unnormalized overlap counts per bucket."""

    bins: int = 20
    counts: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Validate the bucket count and allocate the counts."""
        if self.bins < 2:  # noqa: PLR2004
            msg = f"histogram needs at least 2 bins, got {self.bins}"
            raise ValueError(msg)
        if not self.counts:
            self.counts = [0] * self.bins

    def add_position(self, position: float) -> None:
        """Count one overlap at normalized position `position` in [0, 1]."""
        bucket = min(int(position * self.bins), self.bins - 1)
        self.counts[bucket] += 1

    def add_pair(self, src: TokenSeq, tgt: TokenSeq, n: int, position: PositionStatistic = "start") -> None:
        """Count every source n-gram window of `src` that also occurs in `tgt`."""
        last = len(src) - 1
        for start in matched_windows(src, tgt, n):
            anchor = start if position == "start" else start + (n - 1) / 2
            self.add_position(anchor / last if last > 0 else 0.0)

    def merge(self, other: HistogramAccumulator) -> HistogramAccumulator:
        """Add the counts of `other` (same bucket count) and return self."""
        if other.bins != self.bins:
            msg = f"cannot merge histograms with {self.bins} and {other.bins} bins"
            raise ValueError(msg)
        self.counts = [mine + theirs for mine, theirs in zip(self.counts, other.counts, strict=True)]
        return self

    def histogram(self) -> PositionHistogram:
        """Normalize the counts into a `PositionHistogram`."""
        total = sum(self.counts)
        if not total:
            return PositionHistogram(self.bins, tuple(0.0 for _ in self.counts), 0)
        return PositionHistogram(self.bins, tuple(count / total for count in self.counts), total)


def overlap_position_histogram(
    pairs: Iterable[tuple[TokenSeq, TokenSeq]],
    n: int = 2,
    bins: int = 20,
    *,
    position: PositionStatistic = "start",
) -> PositionHistogram:
    """Histogram of where matched source n-gram windows sit in their documents.

    Each matched window contributes mass at window_start / (|x| - 1) (0 for a
    one-token source), or at its midpoint with `position="midpoint"`.

    Raises:
        ValueError: If bins < 2 or n < 1
    """
    accumulator = HistogramAccumulator(bins)
    for src, tgt in pairs:
        accumulator.add_pair(src, tgt, n, position)
    return accumulator.histogram()


def mean_prf(scores: Iterable[PRF]) -> PRF:
    """Macro-average a stream of PRF values (zeros for an empty stream)."""
    count = 0
    sums = [0.0, 0.0, 0.0]
    for score in scores:
        count += 1
        sums = [total + value for total, value in zip(sums, score, strict=True)]
    if not count:
        return PRF(0.0, 0.0, 0.0)
    return PRF(*(total / count for total in sums))
