"""Tests for entity recognition and entity coverage."""

from __future__ import annotations

from typing import TYPE_CHECKING

import pytest

from prom.entities import CapitalizedRunRecognizer, EntitySet, normalize_entity
from prom.metrics import entity_prf
from prom.textcore import tokenize

if TYPE_CHECKING:
    from pathlib import Path


@pytest.fixture
def recognizer() -> CapitalizedRunRecognizer:
    return CapitalizedRunRecognizer()


def test_normalize_entity() -> None:
    """Entities are case-folded and single-spaced."""
    assert normalize_entity("  Julian \n Assange ") == "julian assange"
    assert EntitySet.of(["", "  ", "London"]).entities == frozenset({"london"})


def test_capitalized_runs(recognizer: CapitalizedRunRecognizer) -> None:
    """Maximal capitalized runs are entities."""
    found = recognizer(tokenize("Julian Assange met John Cusack in London."))
    assert found.entities == frozenset({"julian assange", "john cusack", "london"})


def test_sentence_opener_stopword(recognizer: CapitalizedRunRecognizer) -> None:
    """A lone function word opening a sentence is not an entity."""
    found = recognizer(tokenize("The report was late. It came from Paris."))
    assert found.entities == frozenset({"paris"})


def test_gazetteer(tmp_path: Path) -> None:
    """Gazetteer phrases are found regardless of case."""
    path = tmp_path / "gazetteer.txt"
    path.write_text("# places\necuadorian embassy\n", encoding="utf-8")
    recognizer = CapitalizedRunRecognizer.from_gazetteer(path)
    found = recognizer(tokenize("he stayed at the ecuadorian embassy"))
    assert found.entities == frozenset({"ecuadorian embassy"})


def test_entity_prf(recognizer: CapitalizedRunRecognizer) -> None:
    """Precision over predicted entities, recall over reference entities."""
    score = entity_prf(
        tokenize("Julian Assange met John Cusack in London."),
        tokenize("John Cusack visited London."),
        recognizer,
    )
    assert score.precision == pytest.approx(1.0)
    assert score.recall == pytest.approx(2 / 3)
    assert score.f1 == pytest.approx(0.8)


def test_entity_prf_without_entities(recognizer: CapitalizedRunRecognizer) -> None:
    """No predicted entities gives zero precision."""
    score = entity_prf(tokenize("Paris is big."), tokenize("it is big."), recognizer)
    assert tuple(score) == (0.0, 0.0, 0.0)
