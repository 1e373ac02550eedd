"""Streaming corpus I/O and the order-preserving worker pool."""

import json
import logging
import sys
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from pathlib import Path
from typing import IO, TYPE_CHECKING, Any, NamedTuple

import jsonlines

if TYPE_CHECKING:
    from collections.abc import Callable, Iterable, Iterator

logger = logging.getLogger(__name__)

STDIO_PATH = "-"


class DataError(Exception):
    """Raised when input data cannot be read or used."""


class JsonlLine(NamedTuple):
    """One line of a JSONL stream.

    Attributes:
        line_number: 1-based line number in the input
        value: Parsed JSON value (None when `error` is set)
        error: Parse error message, if the line is not valid JSON
    """

    line_number: int
    value: Any
    error: str | None = None


@contextmanager
def open_input(path: str | Path) -> Iterator[IO[str]]:
    """Open a UTF-8 text input, `-` meaning standard input.

    Raises:
        DataError: If the file cannot be opened
    """
    if str(path) == STDIO_PATH:
        yield sys.stdin
        return
    try:
        handle = Path(path).open(encoding="utf-8")  # noqa: SIM115
    except OSError as e:
        msg = f"Cannot read input {path}: {e}"
        raise DataError(msg) from e
    with handle:
        yield handle


@contextmanager
def open_output(path: str | Path) -> Iterator[IO[str]]:
    """Open a UTF-8 text output, `-` meaning standard output."""
    if str(path) == STDIO_PATH:
        yield sys.stdout
        sys.stdout.flush()
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="\n") as handle:
        yield handle


def read_jsonl(handle: IO[str]) -> Iterator[JsonlLine]:
    """Yield every non-empty line of a JSONL stream, parse failures included.

    Args:
        handle: Open text stream

    Yields:
        JsonlLine per non-empty input line, in order

    Raises:
        DataError: If the stream itself cannot be read
    """
    line_number = 0

    def numbered() -> Iterator[str]:
        nonlocal line_number
        for line_number, line in enumerate(handle, 1):  # noqa: B007
            yield line

    reader = jsonlines.Reader(numbered())
    try:
        while True:
            try:
                value = reader.read(skip_empty=True)
            except EOFError:
                return
            except jsonlines.InvalidLineError as e:
                logger.debug("Invalid JSON on line %(line)d", {"line": line_number})
                yield JsonlLine(line_number, None, str(e))
                continue
            yield JsonlLine(line_number, value)
    except (OSError, UnicodeDecodeError) as e:
        msg = f"Cannot read JSONL input: {e}"
        raise DataError(msg) from e


def read_passages(handle: IO[str]) -> Iterator[str]:
    """Yield plain-text passages separated by blank lines.

    Raises:
        DataError: If the stream cannot be read
    """
    lines: list[str] = []
    try:
        for line in handle:
            if line.strip():
                lines.append(line.rstrip("\n"))
            elif lines:
                yield "\n".join(lines)
                lines = []
    except (OSError, UnicodeDecodeError) as e:
        msg = f"Cannot read text input: {e}"
        raise DataError(msg) from e
    if lines:
        yield "\n".join(lines)


def dumps(value: object) -> str:
    """Serialize one record compactly with stable key order."""
    return json.dumps(value, ensure_ascii=False, separators=(",", ":"), sort_keys=True)


def write_jsonl(handle: IO[str], records: Iterable[object]) -> int:
    """Write records as JSON lines.

    Returns:
        Number of records written
    """
    count = 0
    with jsonlines.Writer(handle, dumps=dumps, flush=False) as writer:
        for record in records:
            writer.write(record)
            count += 1
    return count


def ordered_map[T, R](fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> Iterator[R]:
    """Map `fn` over `items` on a thread pool, yielding results in input order.

    At most `threads * 4` items are in flight, so the input is consumed as a
    stream. With `threads == 1` everything runs inline.

    Args:
        fn: Function applied to each item
        items: Input stream
        threads: Worker count, at least 1

    Yields:
        fn(item) for each item, in input order

    Raises:
        ValueError: If threads < 1
    """
    if threads < 1:
        msg = f"thread count must be >= 1, got {threads}"
        raise ValueError(msg)
    if threads == 1:
        yield from map(fn, items)
        return

    window = threads * 4
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="prom") as pool:
        pending: deque = deque()
        for item in items:
            pending.append(pool.submit(fn, item))
            if len(pending) >= window:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()
