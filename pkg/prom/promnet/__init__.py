"""Numeric core: the copy-enhanced encoder-decoder, its training and decoding."""

from prom.promnet.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from prom.promnet.decoding import Hypothesis, beam_decode, evaluate_copying, greedy_decode, sequence_score
from prom.promnet.gradcheck import GradCheckReport, gradient_check
from prom.promnet.model import (
    BOS,
    EOS,
    PAD,
    CopyIndicator,
    EncoderStates,
    ForwardTrace,
    LossBreakdown,
    NonFiniteError,
    Params,
    PromNet,
    init_model,
    loss_breakdown,
)
from prom.promnet.synthetic import CopySample, make_synthetic_task
from prom.promnet.training import NonFiniteLossError, StepLog, TrainResult, train

__all__ = [
    "BOS",
    "EOS",
    "PAD",
    "CheckpointError",
    "CopyIndicator",
    "CopySample",
    "EncoderStates",
    "ForwardTrace",
    "GradCheckReport",
    "Hypothesis",
    "LossBreakdown",
    "NonFiniteError",
    "NonFiniteLossError",
    "Params",
    "PromNet",
    "StepLog",
    "TrainResult",
    "beam_decode",
    "evaluate_copying",
    "gradient_check",
    "greedy_decode",
    "init_model",
    "load_checkpoint",
    "loss_breakdown",
    "make_synthetic_task",
    "save_checkpoint",
    "sequence_score",
    "train",
]
