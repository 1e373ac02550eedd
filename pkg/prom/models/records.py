"""JSONL record models.

These are the on-disk shapes read and written by the CLI. Unknown keys are kept
so that records pass through a pipeline stage without losing fields.
"""

from typing import Literal, Self

from pydantic import BaseModel, Field, model_validator


class SummaryRecord(BaseModel):
    """A document/summary pair, optionally with a system prediction and copy labels."""

    id: str
    document: str
    summary: str
    prediction: str | None = None
    copy_labels: list[Literal[0, 1]] | None = None
    copy_label_n: int | None = Field(default=None, ge=1)

    model_config = {"extra": "allow"}


class DocumentRecord(BaseModel):
    """A raw passage for pseudo-data construction."""

    id: str
    text: str
    genre: str | None = None

    model_config = {"extra": "allow"}


class PseudoPairRecord(BaseModel):
    """A constructed pseudo document/summary pair."""

    id: str
    document_text: str = Field(min_length=1)
    summary_text: str = Field(min_length=1)
    provenance: Literal["nat", "chunk", "lead"]
    efd: float = Field(ge=0)
    selected_indices: list[int]
    sentence_offset: int = Field(default=0, ge=0)
    genre: str | None = None


class TripleRecord(BaseModel):
    """One copy-task sample: source ids, target ids and the source copy labels."""

    id: str
    src: list[int] = Field(min_length=1)
    tgt: list[int] = Field(min_length=1)
    copy_labels: list[Literal[0, 1]]

    model_config = {"extra": "allow"}


class BuildManifest(BaseModel):
    """Counts gathered while building a pseudo corpus.

    Merging two manifests adds every count, so partial manifests from parallel
    workers combine to the same totals in any order.
    """

    documents_read: int = 0
    documents_failed: int = 0
    pairs_built: dict[str, int] = Field(default_factory=dict)
    skipped: dict[str, dict[str, int]] = Field(default_factory=dict)
    dropped_by_filter: int = 0
    emitted: int = 0

    def record_pair(self, mode: str, count: int = 1) -> None:
        """Count pairs built by `mode`."""
        self.pairs_built[mode] = self.pairs_built.get(mode, 0) + count

    def record_skip(self, mode: str, reason: str) -> None:
        """Count one skip of `mode` for `reason`."""
        reasons = self.skipped.setdefault(mode, {})
        reasons[reason] = reasons.get(reason, 0) + 1

    def merge(self, other: BuildManifest) -> BuildManifest:
        """Add the counts of `other` into this manifest and return it."""
        self.documents_read += other.documents_read
        self.documents_failed += other.documents_failed
        self.dropped_by_filter += other.dropped_by_filter
        self.emitted += other.emitted
        for mode, count in other.pairs_built.items():
            self.record_pair(mode, count)
        for mode, reasons in other.skipped.items():
            mine = self.skipped.setdefault(mode, {})
            for reason, count in reasons.items():
                mine[reason] = mine.get(reason, 0) + count
        return self


class SourceRecord(BaseModel):
    """Decoder input: source ids, with the reference target when known."""

    id: str
    src: list[int] = Field(min_length=1)
    tgt: list[int] | None = None

    model_config = {"extra": "allow"}


class PredictionRecord(BaseModel):
    """A system output scored against a reference; `summary` stands in when there is no `prediction`."""

    id: str
    prediction: str | None = None
    summary: str | None = None

    model_config = {"extra": "allow"}

    @model_validator(mode="after")
    def _check_text(self) -> Self:
        if self.prediction is None and self.summary is None:
            msg = "record needs a prediction or a summary"
            raise ValueError(msg)
        return self

    @property
    def text(self) -> str:
        """The prediction, or the summary when there is none."""
        return self.prediction if self.prediction is not None else str(self.summary)
