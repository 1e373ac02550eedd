"""Copy-enhanced transformer encoder-decoder.

The backbone is a post-norm transformer with learned positions and one token
embedding shared by encoder, decoder and the generation gate. On top of it:

- an indicator layer gives every source position a copy probability
  H_C = sigmoid(H_En w_ind + b_ind);
- the final decoder layer's cross-attention, averaged over heads, is fused with
  H_C per source position, a_C = sigmoid(w_a a + w_c H_C + b), normalized over
  positions and summed per token type into the copy distribution;
- a gate p_gen = sigmoid([context; H_De; emb(y_prev)] w_gate + b) mixes the
  vocabulary and copy distributions.

With `copy_indicator=False` the copy distribution over positions is the plain
cross-attention, which is the pointer-generator mixture.
"""

import logging
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING, Any

import numpy as np

from prom.promnet.autograd import (
    Tensor,
    concat,
    gelu,
    lift,
    log,
    normalize,
    parameter,
    sigmoid,
    softmax,
    softplus,
    stable_sigmoid,
)

if TYPE_CHECKING:
    from collections.abc import Mapping, Sequence

    from numpy.typing import ArrayLike, NDArray

    from prom.models.configs import ModelConfig

logger = logging.getLogger(__name__)

PAD = 0
BOS = 1
EOS = 2
SPECIAL_TOKENS = 3
MASKED = -1e9

type Params = dict[str, NDArray[np.float64]]


class NonFiniteError(Exception):
    """Raised when an array or probability holds NaN or infinity."""

    def __init__(self, name: str) -> None:
        """Record the offending array name."""
        super().__init__(f"Non-finite values in {name}")
        self.name = name


def _attention_shapes(prefix: str, dim: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for proj in ("q", "k", "v", "o"):
        shapes[f"{prefix}.w{proj}"] = (dim, dim)
        shapes[f"{prefix}.b{proj}"] = (dim,)
    return shapes


def _block_shapes(prefix: str, dim: int, hidden: int) -> dict[str, tuple[int, ...]]:
    return {
        f"{prefix}.w1": (dim, hidden),
        f"{prefix}.b1": (hidden,),
        f"{prefix}.w2": (hidden, dim),
        f"{prefix}.b2": (dim,),
    }


def _norm_shapes(prefix: str, dim: int) -> dict[str, tuple[int, ...]]:
    return {f"{prefix}.gain": (dim,), f"{prefix}.bias": (dim,)}


def param_shapes(cfg: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name and shape of every parameter array, in initialization order."""
    dim, hidden = cfg.model_dim, cfg.feedforward_dim
    shapes: dict[str, tuple[int, ...]] = {
        "embed.tokens": (cfg.vocab_size, dim),
        "embed.src_pos": (cfg.max_src_len, dim),
        "embed.tgt_pos": (cfg.max_tgt_len, dim),
    }
    for layer in range(cfg.encoder_layers):
        prefix = f"enc.{layer}"
        shapes |= _attention_shapes(f"{prefix}.attn", dim)
        shapes |= _norm_shapes(f"{prefix}.ln1", dim)
        shapes |= _block_shapes(f"{prefix}.ff", dim, hidden)
        shapes |= _norm_shapes(f"{prefix}.ln2", dim)
    for layer in range(cfg.decoder_layers):
        prefix = f"dec.{layer}"
        shapes |= _attention_shapes(f"{prefix}.self", dim)
        shapes |= _norm_shapes(f"{prefix}.ln1", dim)
        shapes |= _attention_shapes(f"{prefix}.cross", dim)
        shapes |= _norm_shapes(f"{prefix}.ln2", dim)
        shapes |= _block_shapes(f"{prefix}.ff", dim, hidden)
        shapes |= _norm_shapes(f"{prefix}.ln3", dim)
    shapes |= {
        "lm.w": (dim, cfg.vocab_size),
        "lm.b": (cfg.vocab_size,),
        "ind.w": (dim, 1),
        "ind.b": (1,),
        "fuse.w": (2, 1),
        "fuse.b": (1,),
        "gate.w": (3 * dim, 1),
        "gate.b": (1,),
    }
    return shapes


def init_model(cfg: ModelConfig) -> Params:
    """Seeded initialization.

    Matrices are drawn from N(0, 1/fan_in) (fan_in = model_dim for embedding
    tables), layer-norm gains are 1 and every bias is 0.

    Args:
        cfg: Model shape

    Returns:
        Parameter arrays keyed by name
    """
    rng = np.random.default_rng(cfg.seed)
    params: Params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith(".gain"):
            params[name] = np.ones(shape)
        elif len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            fan_in = cfg.model_dim if name.startswith("embed.") else shape[0]
            params[name] = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=shape)
    logger.debug(
        "Initialized %(count)d arrays (%(size)d values)",
        {"count": len(params), "size": sum(array.size for array in params.values())},
    )
    return params


def check_finite(arrays: Mapping[str, NDArray[np.float64]]) -> None:
    """Raise NonFiniteError naming the first array with NaN or infinity."""
    for name, array in arrays.items():
        if not np.all(np.isfinite(array)):
            raise NonFiniteError(name)


@dataclass(frozen=True)
class EncoderStates:
    """Encoder output.

    Attributes:
        h_en: (S, D) hidden state per source position
        src: (S,) source ids
        mask: (S,) True for real positions, False for padding
    """

    h_en: NDArray[np.float64]
    src: NDArray[np.int64]
    mask: NDArray[np.bool_]


@dataclass(frozen=True)
class CopyIndicator:
    """Per-source-position copy probability H_C in (0, 1), with its logits."""

    h_c: NDArray[np.float64]
    logits: NDArray[np.float64]


@dataclass(frozen=True)
class ForwardTrace:
    """Every intermediate of the copy mixture, one row per decoder step.

    Attributes:
        h_de: (T, D) decoder states
        attention: (T, S) final-layer cross-attention averaged over heads
        fused: (T, S) indicator-fused scores a_C
        p_vocab: (T, V) vocabulary distribution
        p_copy: (T, V) copy distribution over token types
        p_gen: (T,) generation gate
        p_final: (T, V) mixed distribution
    """

    h_de: NDArray[np.float64]
    attention: NDArray[np.float64]
    fused: NDArray[np.float64]
    p_vocab: NDArray[np.float64]
    p_copy: NDArray[np.float64]
    p_gen: NDArray[np.float64]
    p_final: NDArray[np.float64]

    @property
    def p_copy_gate(self) -> NDArray[np.float64]:
        """1 - p_gen."""
        return 1.0 - self.p_gen

    def last(self) -> ForwardTrace:
        """The final step only (rows kept two-dimensional)."""
        return ForwardTrace(*(getattr(self, field.name)[-1:] for field in fields(self)))


@dataclass(frozen=True)
class LossBreakdown:
    """Loss terms of one example or the mean over a batch."""

    loss_summ: float
    loss_copy: float
    loss_total: float
    token_count: int

    def to_dict(self) -> dict[str, Any]:
        """Plain mapping for logs."""
        return {
            "loss_summ": self.loss_summ,
            "loss_copy": self.loss_copy,
            "loss_total": self.loss_total,
            "token_count": self.token_count,
        }

    @classmethod
    def mean(cls, parts: Sequence[LossBreakdown]) -> LossBreakdown:
        """Average the loss terms and add the token counts."""
        count = len(parts)
        return cls(
            loss_summ=sum(part.loss_summ for part in parts) / count,
            loss_copy=sum(part.loss_copy for part in parts) / count,
            loss_total=sum(part.loss_total for part in parts) / count,
            token_count=sum(part.token_count for part in parts),
        )


def loss_breakdown(
    p_final: NDArray[np.float64],
    gold: ArrayLike,
    h_c: NDArray[np.float64],
    copy_labels: ArrayLike,
    lambda_: float,
    mask: NDArray[np.bool_] | None = None,
) -> LossBreakdown:
    """Evaluate L = L_summ + lambda * L_copy from probabilities.

    Args:
        p_final: (T, V) mixed distribution per step
        gold: (T,) gold ids
        h_c: (S,) indicator probabilities
        copy_labels: (S,) 0/1 copy labels
        lambda_: Weight of the indicator loss
        mask: (S,) real source positions (all when None)

    Returns:
        Mean token cross-entropy, mean binary cross-entropy over real source
        positions, and the weighted total

    Raises:
        NonFiniteError: If a probability is not finite
        ValueError: If the lengths disagree
    """
    gold = np.asarray(gold, dtype=np.int64)
    labels = np.asarray(copy_labels, dtype=np.float64)
    if p_final.shape[0] != gold.shape[0] or h_c.shape != labels.shape:
        msg = f"length mismatch: {p_final.shape[0]} steps / {gold.shape[0]} gold, {h_c.shape} / {labels.shape}"
        raise ValueError(msg)
    check_finite({"p_final": p_final, "h_c": h_c})
    keep = np.ones_like(labels, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    loss_summ = float(-np.log(p_final[np.arange(gold.shape[0]), gold]).mean())
    bce = -(labels * np.log(h_c) + (1.0 - labels) * np.log1p(-h_c))
    loss_copy = float(bce[keep].mean())
    return LossBreakdown(loss_summ, loss_copy, loss_summ + lambda_ * loss_copy, int(gold.shape[0]))


class PromNet:
    """Forward computation of the copy-enhanced encoder-decoder.

    Public methods take and return numpy arrays. `loss_graph` builds the same
    computation over autograd tensors for training and gradient checks.
    """

    def __init__(self, config: ModelConfig, params: Params | None = None) -> None:
        """Bind a configuration to parameters (freshly initialized when None).

        Raises:
            ValueError: If a parameter array is missing or has the wrong shape
        """
        self.config = config
        self.params = params if params is not None else init_model(config)
        for name, shape in param_shapes(config).items():
            if name not in self.params:
                msg = f"missing parameter array {name}"
                raise ValueError(msg)
            if self.params[name].shape != shape:
                msg = f"parameter {name} has shape {self.params[name].shape}, expected {shape}"
                raise ValueError(msg)

    def _check_ids(self, ids: NDArray[np.int64], limit: int, what: str) -> None:
        if ids.ndim != 1 or ids.shape[0] == 0:
            msg = f"{what} must be a non-empty 1-D id sequence"
            raise ValueError(msg)
        if ids.shape[0] > limit:
            msg = f"{what} length {ids.shape[0]} exceeds the limit {limit}"
            raise ValueError(msg)
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            msg = f"{what} holds ids outside the vocabulary of {self.config.vocab_size}"
            raise ValueError(msg)

    def leaves(self, *, trainable: bool = False) -> dict[str, Tensor]:
        """Wrap the parameters as graph tensors (gradient-collecting when `trainable`)."""
        if trainable:
            return {name: parameter(array, name) for name, array in self.params.items()}
        return {name: Tensor(array, name=name) for name, array in self.params.items()}

    def _attention(
        self,
        p: Mapping[str, Tensor],
        prefix: str,
        query: Tensor,
        memory: Tensor,
        mask: NDArray[np.float64],
    ) -> tuple[Tensor, Tensor]:
        heads = self.config.head_count
        head_dim = self.config.model_dim // heads

        def split(x: Tensor, proj: str) -> Tensor:
            projected = x @ p[f"{prefix}.w{proj}"] + p[f"{prefix}.b{proj}"]
            return projected.reshape(x.shape[0], heads, head_dim).transpose(1, 0, 2)

        q, k, v = split(query, "q"), split(memory, "k"), split(memory, "v")
        scores = (q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(head_dim))
        weights = softmax(scores, axis=-1, mask=mask)
        context = (weights @ v).transpose(1, 0, 2).reshape(query.shape[0], self.config.model_dim)
        return context @ p[f"{prefix}.wo"] + p[f"{prefix}.bo"], weights

    @staticmethod
    def _norm(p: Mapping[str, Tensor], prefix: str, x: Tensor) -> Tensor:
        return normalize(x) * p[f"{prefix}.gain"] + p[f"{prefix}.bias"]

    @staticmethod
    def _feedforward(p: Mapping[str, Tensor], prefix: str, x: Tensor) -> Tensor:
        return gelu(x @ p[f"{prefix}.w1"] + p[f"{prefix}.b1"]) @ p[f"{prefix}.w2"] + p[f"{prefix}.b2"]

    def encode_graph(self, p: Mapping[str, Tensor], src: NDArray[np.int64], mask: NDArray[np.bool_]) -> Tensor:
        """H_En as a graph tensor."""
        key_mask = np.where(mask, 0.0, MASKED)[None, None, :]
        x = p["embed.tokens"][src] + p["embed.src_pos"][: src.shape[0]]
        for layer in range(self.config.encoder_layers):
            prefix = f"enc.{layer}"
            attended, _ = self._attention(p, f"{prefix}.attn", x, x, key_mask)
            x = self._norm(p, f"{prefix}.ln1", x + attended)
            x = self._norm(p, f"{prefix}.ln2", x + self._feedforward(p, f"{prefix}.ff", x))
        return x

    @staticmethod
    def indicator_graph(p: Mapping[str, Tensor], h_en: Tensor) -> Tensor:
        """Indicator logits (S,) as a graph tensor."""
        return (h_en @ p["ind.w"] + p["ind.b"]).reshape(h_en.shape[0])

    def decode_graph(
        self,
        p: Mapping[str, Tensor],
        h_en: Tensor,
        h_c: Tensor,
        src: NDArray[np.int64],
        mask: NDArray[np.bool_],
        prefix_ids: NDArray[np.int64],
    ) -> dict[str, Tensor]:
        """Teacher-forced decoder over every prefix position, as graph tensors.

        With the indicator on, zeroing the H_C column of `fuse.w` still leaves
        sigmoid(w_a a + b) normalized over positions as the copy weights. The
        plain cross-attention copy distribution comes from
        `copy_indicator=False`, which skips the fusion.
        """
        steps = prefix_ids.shape[0]
        causal = np.triu(np.full((steps, steps), MASKED), k=1)[None, :, :]
        cross_mask = np.where(mask, 0.0, MASKED)[None, None, :]
        prev = p["embed.tokens"][prefix_ids]
        y = prev + p["embed.tgt_pos"][:steps]
        cross_weights: Tensor | None = None
        for layer in range(self.config.decoder_layers):
            prefix = f"dec.{layer}"
            attended, _ = self._attention(p, f"{prefix}.self", y, y, causal)
            y = self._norm(p, f"{prefix}.ln1", y + attended)
            attended, cross_weights = self._attention(p, f"{prefix}.cross", y, h_en, cross_mask)
            y = self._norm(p, f"{prefix}.ln2", y + attended)
            y = self._norm(p, f"{prefix}.ln3", y + self._feedforward(p, f"{prefix}.ff", y))
        assert cross_weights is not None  # noqa: S101

        attention = cross_weights.mean(axis=0)
        p_vocab = softmax(y @ p["lm.w"] + p["lm.b"], axis=-1)

        fuse_w = p["fuse.w"]
        logits = attention * fuse_w[0] + p["fuse.b"]
        if self.config.copy_indicator:
            logits = logits + h_c.reshape(1, h_c.shape[0]) * fuse_w[1]
            fused = sigmoid(logits) * np.where(mask, 1.0, 0.0)[None, :]
            weights = fused / fused.sum(axis=1, keepdims=True)
        else:
            fused = sigmoid(logits)
            weights = attention
        one_hot = np.zeros((src.shape[0], self.config.vocab_size))
        one_hot[np.arange(src.shape[0]), src] = 1.0
        p_copy = weights @ lift(one_hot)

        context = attention @ h_en
        gate_in = concat([context, y, prev], axis=1)
        p_gen = sigmoid(gate_in @ p["gate.w"] + p["gate.b"])
        p_final = p_gen * p_vocab + (1.0 - p_gen) * p_copy
        return {
            "h_de": y,
            "attention": attention,
            "fused": fused,
            "p_vocab": p_vocab,
            "p_copy": p_copy,
            "p_gen": p_gen.reshape(steps),
            "p_final": p_final,
        }

    def _source(self, src: ArrayLike, mask: ArrayLike | None) -> tuple[NDArray[np.int64], NDArray[np.bool_]]:
        ids = np.asarray(src, dtype=np.int64)
        self._check_ids(ids, self.config.max_src_len, "source")
        keep = np.ones(ids.shape[0], dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
        if keep.shape != ids.shape or not keep.any():
            msg = "source mask must match the source length and keep at least one position"
            raise ValueError(msg)
        return ids, keep

    def _prefix(self, prefix: ArrayLike) -> NDArray[np.int64]:
        ids = np.asarray(prefix, dtype=np.int64)
        self._check_ids(ids, self.config.max_tgt_len, "prefix")
        return ids

    def encode(self, src: ArrayLike, mask: ArrayLike | None = None) -> EncoderStates:
        """Encode a source id sequence.

        Args:
            src: (S,) ids, S <= max_src_len
            mask: (S,) True for real positions; padded positions are ignored as
                attention keys

        Returns:
            EncoderStates

        Raises:
            ValueError: On over-length, empty or out-of-vocabulary input
        """
        ids, keep = self._source(src, mask)
        h_en = self.encode_graph(self.leaves(), ids, keep).data
        check_finite({"h_en": h_en})
        return EncoderStates(h_en=h_en, src=ids, mask=keep)

    def indicator(self, enc: EncoderStates) -> CopyIndicator:
        """H_C = sigmoid(H_En w_ind + b_ind) per source position."""
        logits = self.indicator_graph(self.leaves(), Tensor(enc.h_en)).data
        return CopyIndicator(h_c=stable_sigmoid(logits), logits=logits)

    def decode_all(self, enc: EncoderStates, indicator: CopyIndicator, prefix: ArrayLike) -> ForwardTrace:
        """Trace of every teacher-forced step for `prefix` (which starts with BOS)."""
        ids = self._prefix(prefix)
        out = self.decode_graph(self.leaves(), Tensor(enc.h_en), Tensor(indicator.h_c), enc.src, enc.mask, ids)
        trace = ForwardTrace(**{name: tensor.data for name, tensor in out.items()})
        check_finite({"p_final": trace.p_final})
        return trace

    def decode_step(self, enc: EncoderStates, indicator: CopyIndicator, prefix: ArrayLike) -> ForwardTrace:
        """Trace of the next-token step after `prefix`."""
        return self.decode_all(enc, indicator, prefix).last()

    def forward(self, src: ArrayLike, prefix: ArrayLike, mask: ArrayLike | None = None) -> ForwardTrace:
        """Encode, run the indicator and trace every prefix step."""
        enc = self.encode(src, mask)
        return self.decode_all(enc, self.indicator(enc), prefix)

    def loss_graph(
        self,
        p: Mapping[str, Tensor],
        src: ArrayLike,
        tgt: ArrayLike,
        copy_labels: ArrayLike,
        *,
        copy_only: bool = False,
    ) -> tuple[Tensor, LossBreakdown]:
        """Build the training loss of one (src, tgt, labels) example.

        The decoder reads [BOS] + tgt and predicts tgt + [EOS].

        Args:
            p: Parameter tensors from `leaves`
            src: Source ids
            tgt: Target ids (without BOS / EOS)
            copy_labels: 0/1 label per source token
            copy_only: Optimize L_copy alone (first stage of two-stage training)

        Returns:
            Scalar loss tensor and its breakdown

        Raises:
            ValueError: On bad ids or lengths
        """
        ids, keep = self._source(src, None)
        target = np.asarray(tgt, dtype=np.int64)
        prefix_ids = self._prefix(np.concatenate([[BOS], target]))
        gold = np.concatenate([target, [EOS]])
        labels = np.asarray(copy_labels, dtype=np.float64)
        if labels.shape != ids.shape:
            msg = f"{labels.shape[0]} copy labels for {ids.shape[0]} source tokens"
            raise ValueError(msg)

        h_en = self.encode_graph(p, ids, keep)
        logits = self.indicator_graph(p, h_en)
        loss_copy = (softplus(logits) - logits * labels).mean()
        out = self.decode_graph(p, h_en, sigmoid(logits), ids, keep, prefix_ids)
        loss_summ = -log(out["p_final"][np.arange(gold.shape[0]), gold]).mean()
        total = loss_summ + loss_copy * self.config.lambda_
        breakdown = LossBreakdown(
            loss_summ=float(loss_summ.data),
            loss_copy=float(loss_copy.data),
            loss_total=float(total.data),
            token_count=int(gold.shape[0]),
        )
        return (loss_copy if copy_only else total), breakdown

    def grad(
        self,
        batch: Sequence[tuple[ArrayLike, ArrayLike, ArrayLike]],
        *,
        copy_only: bool = False,
    ) -> tuple[Params, LossBreakdown]:
        """Exact gradients of the batch-mean loss.

        Args:
            batch: (src, tgt, copy_labels) examples
            copy_only: Differentiate L_copy alone

        Returns:
            Gradient per parameter name (zeros where the loss does not reach)
            and the mean loss breakdown

        Raises:
            ValueError: If the batch is empty
            NonFiniteError: If a gradient holds NaN or infinity
        """
        if not batch:
            msg = "cannot differentiate an empty batch"
            raise ValueError(msg)
        grads: Params = {name: np.zeros_like(array) for name, array in self.params.items()}
        parts: list[LossBreakdown] = []
        scale = 1.0 / len(batch)
        for src, tgt, labels in batch:
            leaves = self.leaves(trainable=True)
            total, breakdown = self.loss_graph(leaves, src, tgt, labels, copy_only=copy_only)
            total.backward()
            for name, leaf in leaves.items():
                if leaf.grad is not None:
                    grads[name] += scale * leaf.grad
            parts.append(breakdown)
        check_finite({f"grad[{name}]": array for name, array in grads.items()})
        return grads, LossBreakdown.mean(parts)
