"""Pydantic models for records and parameter blocks."""

from prom.models.configs import BuildConfig, MetricOptions, ModelConfig, TrainConfig
from prom.models.records import (
    BuildManifest,
    DocumentRecord,
    PredictionRecord,
    PseudoPairRecord,
    SourceRecord,
    SummaryRecord,
    TripleRecord,
)

__all__ = [
    "BuildConfig",
    "BuildManifest",
    "DocumentRecord",
    "MetricOptions",
    "ModelConfig",
    "PredictionRecord",
    "PseudoPairRecord",
    "SourceRecord",
    "SummaryRecord",
    "TrainConfig",
    "TripleRecord",
]
