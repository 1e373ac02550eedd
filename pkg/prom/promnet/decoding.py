"""Greedy and beam-search decoding over the mixed distribution."""

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from prom.metrics import PRF, copied_ngram_f1, mean_prf
from prom.promnet.model import BOS, EOS, PAD
from prom.textcore import TokenSeq

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

    from numpy.typing import ArrayLike, NDArray

    from prom.promnet.model import CopyIndicator, EncoderStates, PromNet

logger = logging.getLogger(__name__)

NEVER_EMITTED = (PAD, BOS)


@dataclass(frozen=True)
class Hypothesis:
    """A decoded sequence.

    Attributes:
        tokens: Generated ids (BOS excluded, EOS included when the sequence ended)
        log_prob: Sum of per-step log probabilities
    """

    tokens: tuple[int, ...] = ()
    log_prob: float = 0.0

    @property
    def finished(self) -> bool:
        """Whether the sequence emitted EOS."""
        return bool(self.tokens) and self.tokens[-1] == EOS

    @property
    def score(self) -> float:
        """Length-normalized log probability (EOS counts as a token)."""
        return self.log_prob / len(self.tokens) if self.tokens else 0.0

    @property
    def output(self) -> tuple[int, ...]:
        """Generated ids without EOS."""
        return self.tokens[:-1] if self.finished else self.tokens

    def extend(self, token: int, log_prob: float) -> Hypothesis:
        """Append one token."""
        return Hypothesis((*self.tokens, token), self.log_prob + log_prob)


def _step_log_probs(net: PromNet, enc: EncoderStates, indicator: CopyIndicator, tokens: Sequence[int]) -> NDArray:
    trace = net.decode_step(enc, indicator, (BOS, *tokens))
    with np.errstate(divide="ignore"):
        log_probs = np.log(trace.p_final[0])
    log_probs[list(NEVER_EMITTED)] = -np.inf
    return log_probs


def _length_limit(net: PromNet, max_len: int | None) -> int:
    limit = net.config.max_tgt_len
    return limit if max_len is None else min(max_len, limit)


def greedy_decode(net: PromNet, src: ArrayLike, max_len: int | None = None) -> Hypothesis:
    """Pick the most probable token at every step (lower id on ties).

    Args:
        net: Model
        src: Source ids
        max_len: Generated-token limit (capped at max_tgt_len)

    Returns:
        The decoded hypothesis, ended by EOS or truncated at the limit
    """
    enc = net.encode(src)
    indicator = net.indicator(enc)
    hypothesis = Hypothesis()
    for _ in range(_length_limit(net, max_len)):
        log_probs = _step_log_probs(net, enc, indicator, hypothesis.tokens)
        token = int(np.argmax(log_probs))
        hypothesis = hypothesis.extend(token, float(log_probs[token]))
        if token == EOS:
            break
    return hypothesis


def beam_decode(net: PromNet, src: ArrayLike, beam_size: int = 4, max_len: int | None = None) -> Hypothesis:
    """Length-normalized beam search.

    Every live hypothesis is expanded with its `beam_size` most probable
    tokens and the `beam_size` candidates with the highest cumulative log
    probability survive; candidates with equal probability keep beam order,
    then lower token id first. A surviving candidate that ends with EOS leaves
    the beam. The result maximizes the length-normalized score over finished
    hypotheses and the beams still live at the length limit, so `beam_size=1`
    walks the greedy path.

    Args:
        net: Model
        src: Source ids
        beam_size: Number of live hypotheses, at least 1
        max_len: Generated-token limit (capped at max_tgt_len)

    Returns:
        The best hypothesis

    Raises:
        ValueError: If beam_size < 1
    """
    if beam_size < 1:
        msg = f"beam_size must be >= 1, got {beam_size}"
        raise ValueError(msg)

    enc = net.encode(src)
    indicator = net.indicator(enc)
    beams = [Hypothesis()]
    finished: list[Hypothesis] = []
    for _ in range(_length_limit(net, max_len)):
        candidates: list[Hypothesis] = []
        for hypothesis in beams:
            log_probs = _step_log_probs(net, enc, indicator, hypothesis.tokens)
            for token in np.argsort(-log_probs, kind="stable")[:beam_size]:
                if np.isfinite(log_probs[token]):
                    candidates.append(hypothesis.extend(int(token), float(log_probs[token])))
        candidates.sort(key=lambda candidate: -candidate.log_prob)
        beams = []
        for candidate in candidates[:beam_size]:
            (finished if candidate.finished else beams).append(candidate)
        if not beams:
            break
    pool = [*finished, *beams]
    best = max(pool, key=lambda hypothesis: hypothesis.score)
    logger.debug(
        "Beam %(beam)d: %(count)d hypotheses, best score %(best).4f",
        {"beam": beam_size, "count": len(pool), "best": best.score},
    )
    return best


def sequence_score(net: PromNet, src: ArrayLike, tokens: Sequence[int]) -> float:
    """Length-normalized log probability of `tokens` under teacher forcing.

    Args:
        net: Model
        src: Source ids
        tokens: Generated ids as in `Hypothesis.tokens`

    Returns:
        Mean per-token log probability (0 for an empty sequence)
    """
    if not tokens:
        return 0.0
    trace = net.forward(src, (BOS, *tokens[:-1]))
    picked = trace.p_final[np.arange(len(tokens)), np.asarray(tokens)]
    with np.errstate(divide="ignore"):
        return float(np.log(picked).sum() / len(tokens))


def decode(net: PromNet, src: ArrayLike, beam_size: int = 4, max_len: int | None = None) -> tuple[int, ...]:
    """Decoded ids without EOS (greedy when beam_size is 1)."""
    return beam_decode(net, src, beam_size, max_len).output


def evaluate_copying(
    net: PromNet,
    samples: Iterable[tuple[Sequence[int], Sequence[int]]],
    *,
    n: int = 2,
    beam_size: int = 1,
) -> PRF:
    """Mean copied n-gram precision/recall/F1 of decodes against reference targets.

    Args:
        net: Model
        samples: (src, reference tgt) id sequences
        n: n-gram order
        beam_size: Beam width used for decoding

    Returns:
        Macro-averaged PRF
    """

    def score(src: Sequence[int], ref: Sequence[int]) -> PRF:
        prediction = decode(net, src, beam_size)
        return copied_ngram_f1(
            TokenSeq.from_tokens(map(str, src)),
            TokenSeq.from_tokens(map(str, ref)),
            TokenSeq.from_tokens(map(str, prediction)),
            n,
        )

    return mean_prf(score(src, ref) for src, ref in samples)
