"""Parameter blocks.

Each block is validated before any work starts. Defaults are the values used for
the reference pre-training data and fine-tuning runs (n = 2, lambda = 1, beam 4,
chunks of 4 to 8 sentences, min EFD 3, 25% selection, 3 lead sentences).
"""

from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Orientation = Literal["selected-document", "gsg"]
BuildMode = Literal["nat", "chunk", "lead"]
Strategy = Literal["multi-task", "two-stage"]
RougeVariant = Literal["rouge1", "rouge2", "rougeL", "rougeLsum"]

ORIENTATION_ALIASES = {"paper-literal": "selected-document"}


class BuildConfig(BaseModel):
    """Pseudo-data construction parameters.

    Attributes:
        select_ratio: Fraction of sentences selected by importance (m%)
        max_sents: Chunk ceiling in sentences
        min_sents: Chunk floor in sentences
        min_efd: Minimum EFD a nat/chunk pair needs to survive the filter
        lead_k: Number of leading sentences used as the lead-bias summary
        orientation: "selected-document" (alias "paper-literal") puts the selected sentences on the document
            side, "gsg" puts them on the summary side
        modes: Builders to run
    """

    model_config = ConfigDict(frozen=True)

    select_ratio: float = Field(default=0.25, gt=0, lt=1)
    max_sents: int = Field(default=8, ge=1)
    min_sents: int = Field(default=4, ge=1)
    min_efd: float = Field(default=3.0, ge=0)
    lead_k: int = Field(default=3, ge=1)
    orientation: Orientation = "selected-document"
    modes: tuple[BuildMode, ...] = ("nat", "chunk")

    @field_validator("orientation", mode="before")
    @classmethod
    def _resolve_orientation_alias(cls, value: object) -> object:
        return ORIENTATION_ALIASES.get(value, value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def _check_bounds(self) -> Self:
        if self.min_sents > self.max_sents:
            msg = f"min_sents ({self.min_sents}) must not exceed max_sents ({self.max_sents})"
            raise ValueError(msg)
        if not self.modes:
            msg = "at least one build mode is required"
            raise ValueError(msg)
        return self


class ModelConfig(BaseModel):
    """Shape and objective of the copy-enhanced encoder-decoder.

    `copy_indicator=False` removes the indicator from the copy fusion, which with
    `lambda_=0` gives the plain pointer-generator baseline.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    vocab_size: int = Field(default=200, ge=4)
    model_dim: int = Field(default=32, ge=1)
    head_count: int = Field(default=2, ge=1)
    encoder_layers: int = Field(default=1, ge=1)
    decoder_layers: int = Field(default=1, ge=1)
    feedforward_dim: int = Field(default=64, ge=1)
    max_src_len: int = Field(default=32, ge=1)
    max_tgt_len: int = Field(default=24, ge=2)
    n: int = Field(default=2, ge=1)
    lambda_: float = Field(default=1.0, ge=0, alias="lambda")
    copy_indicator: bool = True
    seed: int = 0

    @model_validator(mode="after")
    def _check_heads(self) -> Self:
        if self.model_dim % self.head_count:
            msg = f"model_dim ({self.model_dim}) must be divisible by head_count ({self.head_count})"
            raise ValueError(msg)
        return self


class TrainConfig(BaseModel):
    """Optimization schedule.

    For the two-stage strategy the first `warmup_steps` steps optimize the
    indicator loss alone; the default warmup is 10% of `total_steps`.
    """

    model_config = ConfigDict(frozen=True)

    strategy: Strategy = "multi-task"
    warmup_steps: int | None = Field(default=None, ge=0)
    total_steps: int = Field(default=2000, ge=0)
    batch_size: int = Field(default=8, ge=1)
    learning_rate: float = Field(default=0.1, gt=0)
    beam_size: int = Field(default=4, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check_warmup(self) -> Self:
        if self.warmup_steps is not None and self.warmup_steps > self.total_steps:
            msg = f"warmup_steps ({self.warmup_steps}) must not exceed total_steps ({self.total_steps})"
            raise ValueError(msg)
        return self

    @property
    def effective_warmup(self) -> int:
        """Indicator-only steps actually run (0 for multi-task)."""
        if self.strategy != "two-stage":
            return 0
        if self.warmup_steps is None:
            return self.total_steps // 10
        return self.warmup_steps


class MetricOptions(BaseModel):
    """Options shared by the scoring subcommands."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(default=2, ge=1)
    orders: tuple[int, ...] = (1, 2, 3, 4)
    bins: int = Field(default=20, ge=2)
    position: Literal["start", "midpoint"] = "start"
    efd_normalization: Literal["source", "summary"] = "source"
    rouge_variants: tuple[RougeVariant, ...] = ("rouge1", "rouge2", "rougeL", "rougeLsum")

    @model_validator(mode="after")
    def _check_orders(self) -> Self:
        if not self.orders or min(self.orders) < 1:
            msg = f"n-gram orders must be >= 1, got {self.orders}"
            raise ValueError(msg)
        return self
