"""Plain SGD training with the multi-task and two-stage strategies."""

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Literal

import numpy as np

from prom.promnet.model import LossBreakdown, PromNet

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import ArrayLike

    from prom.models.configs import ModelConfig, TrainConfig
    from prom.promnet.model import Params

    type Example = tuple[ArrayLike, ArrayLike, ArrayLike]

logger = logging.getLogger(__name__)

Stage = Literal["copy-only", "joint"]
LOG_EVERY = 100


class NonFiniteLossError(Exception):
    """Raised when the training loss stops being finite."""

    def __init__(self, step: int, loss: float) -> None:
        """Record the failing step."""
        super().__init__(f"Non-finite loss {loss} at step {step}")
        self.step = step
        self.loss = loss


@dataclass(frozen=True)
class StepLog:
    """Loss breakdown of one optimization step."""

    step: int
    stage: Stage
    loss: LossBreakdown

    def to_record(self) -> dict[str, Any]:
        """JSONL training-log form."""
        return {"step": self.step, "stage": self.stage, **self.loss.to_dict()}


@dataclass
class TrainResult:
    """Trained parameters and the per-step log."""

    params: Params
    log: list[StepLog] = field(default_factory=list)

    def smoothed_loss(self, window: int = 50, *, head: bool = False) -> float:
        """Mean loss_total over the first (`head`) or last `window` steps."""
        if not self.log:
            return math.nan
        entries = self.log[:window] if head else self.log[-window:]
        return sum(entry.loss.loss_total for entry in entries) / len(entries)


class BatchSampler:
    """Deterministic epoch-shuffled minibatches."""

    def __init__(self, examples: Sequence[Example], batch_size: int, seed: int) -> None:
        """Prepare sampling over `examples`."""
        self.examples = examples
        self.batch_size = batch_size
        self.rng = np.random.default_rng(seed)
        self._order: list[int] = []

    def next_batch(self) -> list[Example]:
        """Return the next batch, reshuffling whenever the epoch runs out."""
        batch: list[Example] = []
        while len(batch) < self.batch_size:
            if not self._order:
                self._order = self.rng.permutation(len(self.examples)).tolist()
            batch.append(self.examples[self._order.pop()])
        return batch


def train(
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    examples: Sequence[Example],
    *,
    params: Params | None = None,
    on_step: Callable[[StepLog], None] | None = None,
) -> TrainResult:
    """Train with plain SGD at a fixed learning rate.

    Multi-task optimizes L = L_summ + lambda * L_copy from step 0. Two-stage
    optimizes L_copy alone for the warmup steps, then L; the first stage only
    restricts the loss, so every parameter L_copy reaches moves.

    Args:
        model_cfg: Model shape and objective
        train_cfg: Schedule
        examples: (src, tgt, copy_labels) triples
        params: Starting parameters (seeded initialization when None)
        on_step: Called with every step's log entry

    Returns:
        TrainResult with the final parameters and the per-step log (losses
        before each update; loss_total is always the full objective)

    Raises:
        ValueError: If there is no data
        NonFiniteLossError: If the loss becomes NaN or infinite
    """
    if not examples:
        msg = "training needs at least one example"
        raise ValueError(msg)
    net = PromNet(model_cfg, {name: array.copy() for name, array in params.items()} if params else None)
    sampler = BatchSampler(examples, train_cfg.batch_size, train_cfg.seed)
    warmup = train_cfg.effective_warmup
    result = TrainResult(net.params)
    logger.info(
        "Training %(steps)d steps (%(strategy)s, warmup %(warmup)d, batch %(batch)d, lr %(lr)s)",
        {
            "steps": train_cfg.total_steps,
            "strategy": train_cfg.strategy,
            "warmup": warmup,
            "batch": train_cfg.batch_size,
            "lr": train_cfg.learning_rate,
        },
    )

    for step in range(train_cfg.total_steps):
        stage: Stage = "copy-only" if step < warmup else "joint"
        grads, breakdown = net.grad(sampler.next_batch(), copy_only=stage == "copy-only")
        optimized = breakdown.loss_copy if stage == "copy-only" else breakdown.loss_total
        if not math.isfinite(optimized):
            raise NonFiniteLossError(step, optimized)
        for name, grad in grads.items():
            net.params[name] -= train_cfg.learning_rate * grad

        entry = StepLog(step, stage, breakdown)
        result.log.append(entry)
        if on_step is not None:
            on_step(entry)
        if step % LOG_EVERY == 0 or step == train_cfg.total_steps - 1:
            logger.info(
                "step %(step)d [%(stage)s] total %(total).4f summ %(summ).4f copy %(copy).4f",
                {
                    "step": step,
                    "stage": stage,
                    "total": breakdown.loss_total,
                    "summ": breakdown.loss_summ,
                    "copy": breakdown.loss_copy,
                },
            )
    return result
