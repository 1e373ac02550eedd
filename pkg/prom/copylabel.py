"""Phrase-level copy labels.

A source token is labeled 1 when it lies inside some source n-gram window whose
n-gram also occurs in the target. These labels supervise the copy indicator.
"""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any

from pydantic import ValidationError

from prom.corpus import ordered_map
from prom.models.records import SummaryRecord
from prom.textcore import WordTokenizer, distinct_ngrams, ngram_windows

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator

    from prom.corpus import JsonlLine
    from prom.textcore import TokenSeq, Tokenizer

logger = logging.getLogger(__name__)

LABELS_FIELD = "copy_labels"
ORDER_FIELD = "copy_label_n"


@dataclass(frozen=True)
class CopyLabelMask:
    """Binary copy labels, one per source token.

    Attributes:
        labels: 0/1 per source token
        n: The n-gram order used
    """

    labels: tuple[int, ...]
    n: int

    def __len__(self) -> int:
        """Return the number of source tokens."""
        return len(self.labels)

    @property
    def positions(self) -> list[int]:
        """Indices labeled 1."""
        return [index for index, label in enumerate(self.labels) if label]


def matched_windows(src: TokenSeq, tgt: TokenSeq, n: int) -> list[int]:
    """Return the start index of every source n-gram window that also occurs in the target.

    Raises:
        ValueError: If n < 1
    """
    target = distinct_ngrams(tgt.tokens, n)
    return [start for start, window in enumerate(ngram_windows(src.tokens, n)) if window in target]


def label_copy_tokens(src: TokenSeq, tgt: TokenSeq, n: int) -> CopyLabelMask:
    """Label the source tokens covered by n-grams shared with the target.

    Target n-grams are a set: a target n-gram may license several source windows.
    Windows are free to span sentence boundaries.

    Args:
        src: Source tokens
        tgt: Target tokens
        n: n-gram order, at least 1

    Returns:
        CopyLabelMask with one label per source token (all zero when src is shorter than n)

    Raises:
        ValueError: If n < 1
    """
    coverage = [0] * (len(src) + 1)
    for start in matched_windows(src, tgt, n):
        coverage[start] += 1
        coverage[start + n] -= 1

    labels: list[int] = []
    running = 0
    for delta in coverage[:-1]:
        running += delta
        labels.append(1 if running > 0 else 0)
    return CopyLabelMask(tuple(labels), n)


@dataclass
class LabelReport:
    """Outcome counts of a labeling run.

    Attributes:
        labeled: Records that were labeled and emitted
        skipped: Records that could not be parsed or validated
        failures: (line number, reason) of each skipped record
    """

    labeled: int = 0
    skipped: int = 0
    failures: list[tuple[int, str]] = field(default_factory=list)


def _label_line(line: JsonlLine, n: int, tokenizer: Tokenizer) -> tuple[int, dict[str, Any] | None, str | None]:
    if line.error is not None:
        return line.line_number, None, line.error
    try:
        record = SummaryRecord.model_validate(line.value)
    except ValidationError as e:
        return line.line_number, None, f"{e.error_count()} validation error(s): {e.errors()[0]['msg']}"
    mask = label_copy_tokens(tokenizer(record.document), tokenizer(record.summary), n)
    augmented = record.model_dump(exclude_none=True)
    augmented[LABELS_FIELD] = list(mask.labels)
    augmented[ORDER_FIELD] = n
    return line.line_number, augmented, None


def label_corpus(
    lines: Iterable[JsonlLine],
    n: int,
    *,
    tokenizer: Tokenizer | None = None,
    threads: int = 1,
    report: LabelReport | None = None,
) -> Iterator[dict[str, Any]]:
    """Attach copy labels to a stream of document/summary records.

    Output order equals input order for any thread count. Malformed records are
    logged with their line number, counted in `report`, and skipped.

    Args:
        lines: Parsed JSONL lines (see `prom.corpus.read_jsonl`)
        n: n-gram order, at least 1
        tokenizer: Tokenizer for documents and summaries (case-folded words by default)
        threads: Worker count
        report: Receives the labeled/skipped counts

    Yields:
        Each valid record with `copy_labels` and `copy_label_n` added

    Raises:
        ValueError: If n < 1
    """
    if n < 1:
        msg = f"n-gram order must be >= 1, got {n}"
        raise ValueError(msg)
    tokenizer = tokenizer or WordTokenizer()
    report = report if report is not None else LabelReport()

    for line_number, augmented, error in ordered_map(lambda line: _label_line(line, n, tokenizer), lines, threads):
        if augmented is None:
            logger.warning("Skipping record on line %(line)d: %(error)s", {"line": line_number, "error": error})
            report.skipped += 1
            report.failures.append((line_number, str(error)))
            continue
        report.labeled += 1
        yield augmented

    logger.info(
        "Labeled %(labeled)d records, skipped %(skipped)d",
        {"labeled": report.labeled, "skipped": report.skipped},
    )
