"""Tests for corpus I/O and the ordered worker pool."""

from __future__ import annotations

import io
import threading
import time
from typing import TYPE_CHECKING

import pytest

from prom.corpus import (
    DataError,
    JsonlLine,
    open_input,
    open_output,
    ordered_map,
    read_jsonl,
    read_passages,
    write_jsonl,
)

if TYPE_CHECKING:
    from pathlib import Path


class TestJsonl:
    """Test JSONL reading and writing."""

    def test_read_with_bad_lines(self) -> None:
        """Blank lines are skipped, invalid lines keep their line number."""
        lines = list(read_jsonl(io.StringIO('{"a": 1}\n\nnot json\n{"b": 2}\n')))
        assert [(line.line_number, line.value) for line in lines] == [(1, {"a": 1}), (3, None), (4, {"b": 2})]
        assert lines[0].error is None
        assert lines[1].error

    def test_read_empty(self) -> None:
        """An empty stream yields nothing."""
        assert list(read_jsonl(io.StringIO(""))) == []

    def test_write_is_compact_and_sorted(self) -> None:
        """Records are written one per line with sorted keys."""
        handle = io.StringIO()
        count = write_jsonl(handle, [{"b": "é", "a": 1}, {"c": [1, 2]}])
        assert count == 2
        assert handle.getvalue() == '{"a":1,"b":"é"}\n{"c":[1,2]}\n'

    def test_jsonl_line_defaults(self) -> None:
        """Parsed lines carry no error."""
        assert JsonlLine(5, {"x": 1}).error is None


class TestPassages:
    """Test blank-line separated passages."""

    def test_split_on_blank_lines(self) -> None:
        """Runs of blank lines separate passages."""
        handle = io.StringIO("First line.\nSecond line.\n\n\n  \nThird passage.\n")
        assert list(read_passages(handle)) == ["First line.\nSecond line.", "Third passage."]

    def test_no_trailing_newline(self) -> None:
        """The last passage needs no terminator."""
        assert list(read_passages(io.StringIO("only one"))) == ["only one"]


class TestFiles:
    """Test opening inputs and outputs."""

    def test_missing_input(self, tmp_path: Path) -> None:
        """A missing input is a data error."""
        with pytest.raises(DataError, match="Cannot read input"), open_input(tmp_path / "missing.jsonl"):
            pass

    def test_output_creates_parents(self, tmp_path: Path) -> None:
        """Outputs are written under freshly created directories."""
        target = tmp_path / "nested" / "out.jsonl"
        with open_output(target) as handle:
            handle.write("x\n")
        with open_input(target) as handle:
            assert handle.read() == "x\n"


class TestOrderedMap:
    """Test the order-preserving worker pool."""

    def test_inline(self) -> None:
        """One thread maps inline."""
        assert list(ordered_map(lambda x: x * 2, range(5))) == [0, 2, 4, 6, 8]

    def test_order_is_kept(self) -> None:
        """Results come back in input order even when later items finish first."""

        def slow_first(x: int) -> int:
            time.sleep(0.02 if x % 3 == 0 else 0.0)
            return x

        assert list(ordered_map(slow_first, range(40), threads=4)) == list(range(40))

    def test_uses_workers(self) -> None:
        """Several threads do the work."""
        names: set[str] = set()
        lock = threading.Lock()

        def record(x: int) -> int:
            with lock:
                names.add(threading.current_thread().name)
            time.sleep(0.01)
            return x

        list(ordered_map(record, range(20), threads=3))
        assert all(name.startswith("prom") for name in names)

    def test_bad_thread_count(self) -> None:
        """At least one worker is required."""
        with pytest.raises(ValueError, match="thread count"):
            list(ordered_map(str, [1], threads=0))
