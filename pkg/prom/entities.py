"""Entity sets for entity-coverage scoring.

The default recognizer is deliberately simple: maximal runs of capitalized
tokens, minus sentence-initial function words standing alone, plus any phrase
listed in an optional gazetteer.
"""

import logging
import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Final, Protocol

from prom.textcore import TERMINAL_PUNCTUATION, load_word_list, tokenize

if TYPE_CHECKING:
    from collections.abc import Iterable
    from pathlib import Path

    from prom.textcore import TokenSeq

logger = logging.getLogger(__name__)

WHITESPACE: Final[re.Pattern[str]] = re.compile(r"\s+")


def normalize_entity(text: str) -> str:
    """Case-fold and collapse whitespace."""
    return WHITESPACE.sub(" ", text).strip().casefold()


@dataclass(frozen=True)
class EntitySet:
    """Normalized entity strings (non-empty, case-folded, single-spaced)."""

    entities: frozenset[str] = frozenset()

    @classmethod
    def of(cls, items: Iterable[str]) -> EntitySet:
        """Normalize `items` and drop empty entries."""
        return cls(frozenset(entity for entity in map(normalize_entity, items) if entity))

    def __len__(self) -> int:
        """Return the number of entities."""
        return len(self.entities)


class EntityRecognizer(Protocol):
    """Deterministic mapping from a token sequence to its entity set."""

    def __call__(self, seq: TokenSeq) -> EntitySet:
        """Recognize the entities in `seq`."""
        ...


@dataclass(frozen=True)
class CapitalizedRunRecognizer:
    """Maximal capitalized-token runs plus gazetteer phrases.

    Attributes:
        stopwords: Case-folded words that do not count as an entity when they
            stand alone at the start of a sentence
        gazetteer: Case-folded entity phrases, matched as token sequences
    """

    stopwords: frozenset[str] = field(default_factory=lambda: load_word_list(resource="entity_stopwords.txt"))
    gazetteer: frozenset[tuple[str, ...]] = frozenset()

    @classmethod
    def from_gazetteer(cls, path: Path | None) -> CapitalizedRunRecognizer:
        """Build a recognizer, loading gazetteer phrases (one per line) from `path`."""
        if path is None:
            return cls()
        phrases = frozenset(tokenize(entry).tokens for entry in load_word_list(path))
        logger.info("Loaded %(count)d gazetteer entries from %(path)s", {"count": len(phrases), "path": path})
        return cls(gazetteer=frozenset(phrase for phrase in phrases if phrase))

    def __call__(self, seq: TokenSeq) -> EntitySet:
        """Recognize the entities in `seq` (capitalization is read from its original text)."""
        found: list[str] = []
        run: list[int] = []
        for index in range(len(seq) + 1):
            if index < len(seq) and _capitalized(seq.surface(index)):
                run.append(index)
                continue
            if run:
                if not self._lone_sentence_opener(seq, run):
                    found.append(" ".join(seq.surface(i) for i in run))
                run = []
        found.extend(" ".join(phrase) for phrase in self._gazetteer_hits(seq))
        return EntitySet.of(found)

    def _lone_sentence_opener(self, seq: TokenSeq, run: list[int]) -> bool:
        if len(run) != 1:
            return False
        first = run[0]
        at_sentence_start = first == 0 or seq.tokens[first - 1] in TERMINAL_PUNCTUATION
        return at_sentence_start and seq.surface(first).casefold() in self.stopwords

    def _gazetteer_hits(self, seq: TokenSeq) -> Iterable[tuple[str, ...]]:
        if not self.gazetteer:
            return []
        folded = [token.casefold() for token in seq.tokens]
        lengths = sorted({len(phrase) for phrase in self.gazetteer})
        hits: list[tuple[str, ...]] = []
        for length in lengths:
            for start in range(len(folded) - length + 1):
                window = tuple(folded[start : start + length])
                if window in self.gazetteer:
                    hits.append(window)
        return hits


def _capitalized(token: str) -> bool:
    return token[:1].isupper()
