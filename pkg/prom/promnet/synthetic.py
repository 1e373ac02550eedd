"""Synthetic copy task.

Every source is filler text with one to three phrases of rare tokens planted in
it; the target is a fixed template with the source's phrases copied in order.
Vocabulary layout: the special ids, then template tokens, then filler tokens,
then the phrase bank (the last `phrase_bank_size` ids). The three token groups
are disjoint, so the only n-grams a source shares with its target lie inside
the planted phrases.
"""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any

import numpy as np

from prom.copylabel import CopyLabelMask, label_copy_tokens
from prom.promnet.model import SPECIAL_TOKENS
from prom.textcore import TokenSeq

if TYPE_CHECKING:
    from collections.abc import Sequence

logger = logging.getLogger(__name__)

MAX_PHRASES = 3
PHRASE_LENGTHS = (2, 4)
FILLER_LENGTHS = (1, 3)
MAX_TEMPLATE_TOKENS = 8


@dataclass(frozen=True)
class CopySample:
    """One (src, tgt, copy_mask) triple."""

    id: str
    src: tuple[int, ...]
    tgt: tuple[int, ...]
    copy_mask: CopyLabelMask

    def as_example(self) -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
        """(src, tgt, labels) as consumed by `PromNet.grad`."""
        return self.src, self.tgt, self.copy_mask.labels

    def to_record(self) -> dict[str, Any]:
        """JSONL triple form."""
        return {"id": self.id, "src": list(self.src), "tgt": list(self.tgt), "copy_labels": list(self.copy_mask.labels)}


@dataclass(frozen=True)
class VocabularyLayout:
    """Id ranges of the synthetic vocabulary."""

    template: tuple[int, ...]
    filler: tuple[int, ...]
    bank: tuple[int, ...]

    @classmethod
    def split(cls, vocab_size: int, phrase_bank_size: int) -> VocabularyLayout:
        """Carve the vocabulary into template, filler and phrase-bank ids.

        Raises:
            ValueError: If the bank is too small for three phrases or leaves
                fewer than two ids for template and filler tokens
        """
        if phrase_bank_size >= vocab_size:
            msg = f"phrase_bank_size ({phrase_bank_size}) must be smaller than vocab_size ({vocab_size})"
            raise ValueError(msg)
        if phrase_bank_size < MAX_PHRASES * PHRASE_LENGTHS[1]:
            msg = f"phrase_bank_size must be at least {MAX_PHRASES * PHRASE_LENGTHS[1]}, got {phrase_bank_size}"
            raise ValueError(msg)
        shared = vocab_size - SPECIAL_TOKENS - phrase_bank_size
        if shared < 2:  # noqa: PLR2004
            msg = f"vocab_size {vocab_size} leaves no room for template and filler tokens"
            raise ValueError(msg)
        template_count = max(1, min(MAX_TEMPLATE_TOKENS, shared // 4))
        first_filler = SPECIAL_TOKENS + template_count
        first_bank = vocab_size - phrase_bank_size
        return cls(
            template=tuple(range(SPECIAL_TOKENS, first_filler)),
            filler=tuple(range(first_filler, first_bank)),
            bank=tuple(range(first_bank, vocab_size)),
        )


def compose_sample(
    sample_id: str,
    phrases: Sequence[Sequence[int]],
    fillers: Sequence[Sequence[int]],
    template: Sequence[int],
    n: int = 2,
) -> CopySample:
    """Assemble a sample from its parts.

    Args:
        sample_id: Identifier
        phrases: Phrases planted in the source and copied into the target
        fillers: len(phrases) + 1 filler runs surrounding the phrases
        template: Template ids; the target is t0 p0 t1 p1 ... with template ids
            used cyclically
        n: Copy-label n-gram order

    Returns:
        CopySample labeled with `label_copy_tokens`

    Raises:
        ValueError: If the filler count does not match the phrase count
    """
    if len(fillers) != len(phrases) + 1:
        msg = f"{len(phrases)} phrases need {len(phrases) + 1} filler runs, got {len(fillers)}"
        raise ValueError(msg)
    src: list[int] = list(fillers[0])
    tgt: list[int] = []
    for index, phrase in enumerate(phrases):
        src.extend(phrase)
        src.extend(fillers[index + 1])
        tgt.append(template[index % len(template)])
        tgt.extend(phrase)
    tgt.append(template[len(phrases) % len(template)])
    mask = label_copy_tokens(TokenSeq.from_tokens(map(str, src)), TokenSeq.from_tokens(map(str, tgt)), n)
    return CopySample(sample_id, tuple(src), tuple(tgt), mask)


def max_lengths() -> tuple[int, int]:
    """Longest possible (source, target) lengths."""
    src = FILLER_LENGTHS[1] * (MAX_PHRASES + 1) + PHRASE_LENGTHS[1] * MAX_PHRASES
    tgt = (PHRASE_LENGTHS[1] + 1) * MAX_PHRASES + 1
    return src, tgt


def make_synthetic_task(
    vocab_size: int,
    phrase_bank_size: int,
    sample_count: int,
    seed: int,
    *,
    n: int = 2,
) -> list[CopySample]:
    """Generate the copy task.

    Args:
        vocab_size: Vocabulary size (ids 0..2 are PAD, BOS, EOS)
        phrase_bank_size: Number of rare ids phrases are drawn from
        sample_count: Number of samples
        seed: Random seed
        n: Copy-label n-gram order

    Returns:
        Samples "synth-0", "synth-1", ...

    Raises:
        ValueError: If the vocabulary cannot be laid out
    """
    layout = VocabularyLayout.split(vocab_size, phrase_bank_size)
    rng = np.random.default_rng(seed)
    samples: list[CopySample] = []
    for index in range(sample_count):
        phrase_count = int(rng.integers(1, MAX_PHRASES + 1))
        lengths = rng.integers(PHRASE_LENGTHS[0], PHRASE_LENGTHS[1] + 1, size=phrase_count)
        drawn = rng.choice(layout.bank, size=int(lengths.sum()), replace=False).tolist()
        bounds = np.cumsum(lengths)[:-1]
        phrases = [part.tolist() for part in np.split(np.asarray(drawn), bounds)]
        fillers = [
            rng.choice(layout.filler, size=int(rng.integers(FILLER_LENGTHS[0], FILLER_LENGTHS[1] + 1))).tolist()
            for _ in range(phrase_count + 1)
        ]
        samples.append(compose_sample(f"synth-{index}", phrases, fillers, layout.template, n))
    logger.debug(
        "Generated %(count)d synthetic samples over a bank of %(bank)d ids",
        {"count": sample_count, "bank": phrase_bank_size},
    )
    return samples
