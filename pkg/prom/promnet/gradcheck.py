"""Central finite-difference verification of the analytic gradients."""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from prom.copylabel import label_copy_tokens
from prom.promnet.model import SPECIAL_TOKENS
from prom.textcore import TokenSeq

if TYPE_CHECKING:
    from collections.abc import Sequence

    from numpy.typing import ArrayLike

    from prom.models.configs import ModelConfig
    from prom.promnet.model import PromNet

logger = logging.getLogger(__name__)

RELATIVE_FLOOR = 1e-5


def relative_error(analytic: float, numeric: float) -> float:
    """|a - n| / max(|a|, |n|, 1e-5)."""
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), RELATIVE_FLOOR)


@dataclass(frozen=True)
class Coordinate:
    """One checked parameter entry."""

    name: str
    index: tuple[int, ...]
    analytic: float
    numeric: float

    @property
    def error(self) -> float:
        """Relative error of the analytic gradient."""
        return relative_error(self.analytic, self.numeric)


@dataclass
class GradCheckReport:
    """Outcome of a gradient check."""

    tolerance: float
    coordinates: list[Coordinate] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        """Largest relative error seen (0 when nothing was checked)."""
        return max((coordinate.error for coordinate in self.coordinates), default=0.0)

    @property
    def failures(self) -> list[Coordinate]:
        """Coordinates above the tolerance."""
        return [coordinate for coordinate in self.coordinates if coordinate.error > self.tolerance]

    @property
    def passed(self) -> bool:
        """True when no coordinate exceeds the tolerance."""
        return not self.failures


def _batch_loss(net: PromNet, batch: Sequence[tuple[ArrayLike, ArrayLike, ArrayLike]], *, copy_only: bool) -> float:
    leaves = net.leaves()
    total = 0.0
    for src, tgt, labels in batch:
        loss, _ = net.loss_graph(leaves, src, tgt, labels, copy_only=copy_only)
        total += float(loss.data)
    return total / len(batch)


def gradient_check(
    net: PromNet,
    batch: Sequence[tuple[ArrayLike, ArrayLike, ArrayLike]],
    *,
    samples: int = 200,
    h: float = 1e-5,
    tolerance: float = 1e-4,
    seed: int = 0,
    copy_only: bool = False,
) -> GradCheckReport:
    """Compare `PromNet.grad` against central differences on sampled coordinates.

    Coordinates are drawn uniformly over all parameter entries. Each one is
    perturbed in place by +h and -h and restored afterwards.

    Args:
        net: Model whose parameters are perturbed
        batch: (src, tgt, copy_labels) examples
        samples: Number of coordinates
        h: Finite-difference step
        tolerance: Maximum accepted relative error
        seed: Coordinate sampling seed
        copy_only: Check the indicator-only objective

    Returns:
        GradCheckReport
    """
    analytic, _ = net.grad(batch, copy_only=copy_only)
    names = sorted(net.params)
    sizes = np.array([net.params[name].size for name in names])
    offsets = np.cumsum(sizes)
    rng = np.random.default_rng(seed)
    report = GradCheckReport(tolerance)

    for flat in rng.choice(int(offsets[-1]), size=min(samples, int(offsets[-1])), replace=False):
        slot = int(np.searchsorted(offsets, flat, side="right"))
        name = names[slot]
        array = net.params[name]
        index = tuple(int(i) for i in np.unravel_index(int(flat - (offsets[slot] - sizes[slot])), array.shape))
        original = array[index]
        array[index] = original + h
        plus = _batch_loss(net, batch, copy_only=copy_only)
        array[index] = original - h
        minus = _batch_loss(net, batch, copy_only=copy_only)
        array[index] = original
        coordinate = Coordinate(name, index, float(analytic[name][index]), (plus - minus) / (2 * h))
        report.coordinates.append(coordinate)
        if coordinate.error > tolerance:
            logger.warning(
                "Gradient mismatch at %(name)s%(index)s: analytic %(a).6e, numeric %(n).6e",
                {"name": name, "index": list(index), "a": coordinate.analytic, "n": coordinate.numeric},
            )
    logger.info(
        "Checked %(count)d coordinates, max relative error %(error).3e",
        {"count": len(report.coordinates), "error": report.max_error},
    )
    return report


def random_examples(
    cfg: ModelConfig,
    count: int,
    seed: int = 0,
) -> list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]]:
    """Random (src, tgt, copy_labels) triples that fit `cfg`.

    Sources use the full length limit. Every target starts with a copy of a
    source span of up to three tokens, so n <= 3 always labels some tokens.
    """
    rng = np.random.default_rng(seed)
    tgt_len = max(1, cfg.max_tgt_len - 1)
    examples = []
    for _ in range(count):
        src = rng.integers(SPECIAL_TOKENS, cfg.vocab_size, size=cfg.max_src_len).tolist()
        tgt = rng.integers(SPECIAL_TOKENS, cfg.vocab_size, size=tgt_len).tolist()
        span = min(3, len(src), tgt_len)
        start = int(rng.integers(0, len(src) - span + 1))
        tgt[:span] = src[start : start + span]
        mask = label_copy_tokens(TokenSeq.from_tokens(map(str, src)), TokenSeq.from_tokens(map(str, tgt)), cfg.n)
        examples.append((tuple(src), tuple(tgt), mask.labels))
    return examples
