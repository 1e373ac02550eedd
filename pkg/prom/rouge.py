"""ROUGE-1/2/L/Lsum.

No stemming and no stopword removal. Texts are case-folded and only tokens with
at least one alphanumeric character are scored. rougeLsum splits both texts on
newlines and scores the union LCS of every reference sentence against all
predicted sentences.
"""

from collections import Counter
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal, get_args

from prom.metrics import harmonic_f1
from prom.textcore import tokenize

if TYPE_CHECKING:
    from collections.abc import Iterable, Sequence

Variant = Literal["rouge1", "rouge2", "rougeL", "rougeLsum"]
VARIANTS: tuple[Variant, ...] = get_args(Variant)


@dataclass(frozen=True)
class RougeScore:
    """One ROUGE variant's precision, recall and F1."""

    variant: Variant
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, variant: Variant, hits: int, pred_total: int, ref_total: int) -> RougeScore:
        """Score from overlap counts (0 where a total is 0)."""
        precision = hits / pred_total if pred_total else 0.0
        recall = hits / ref_total if ref_total else 0.0
        return cls(variant, precision, recall, harmonic_f1(precision, recall))


def rouge_tokens(text: str) -> list[str]:
    """Case-folded tokens holding at least one alphanumeric character."""
    return [token for token in tokenize(text).tokens if any(char.isalnum() for char in token)]


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter[tuple[str, ...]]:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _lcs_table(a: Sequence[str], b: Sequence[str]) -> list[list[int]]:
    table = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i, token_a in enumerate(a, 1):
        row, previous = table[i], table[i - 1]
        for j, token_b in enumerate(b, 1):
            row[j] = previous[j - 1] + 1 if token_a == token_b else max(previous[j], row[j - 1])
    return table


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence of a and b."""
    return _lcs_table(a, b)[-1][-1]


def _lcs_indices(ref: Sequence[str], pred: Sequence[str]) -> list[int]:
    table = _lcs_table(ref, pred)
    i, j = len(ref), len(pred)
    indices: list[int] = []
    while i > 0 and j > 0:
        if ref[i - 1] == pred[j - 1]:
            indices.append(i - 1)
            i -= 1
            j -= 1
        elif table[i - 1][j] >= table[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return indices[::-1]


def _summary_level_lcs(ref_sentences: Sequence[list[str]], pred_sentences: Sequence[list[str]]) -> tuple[int, int, int]:
    ref_total = sum(len(sentence) for sentence in ref_sentences)
    pred_total = sum(len(sentence) for sentence in pred_sentences)
    ref_left = Counter(token for sentence in ref_sentences for token in sentence)
    pred_left = Counter(token for sentence in pred_sentences for token in sentence)
    hits = 0
    for ref in ref_sentences:
        union = sorted({index for pred in pred_sentences for index in _lcs_indices(ref, pred)})
        for token in (ref[index] for index in union):
            if ref_left[token] > 0 and pred_left[token] > 0:
                hits += 1
                ref_left[token] -= 1
                pred_left[token] -= 1
    return hits, pred_total, ref_total


def rouge_f1(pred: str, ref: str, variant: Variant = "rougeLsum") -> RougeScore:
    """Score a prediction against a reference.

    Args:
        pred: Predicted text
        ref: Reference text
        variant: rouge1 / rouge2 (clipped n-gram overlap), rougeL (LCS over whole
            texts) or rougeLsum (union LCS over newline-split sentences)

    Returns:
        RougeScore for `variant`

    Raises:
        ValueError: If the variant is unknown
    """
    if variant in {"rouge1", "rouge2"}:
        n = 1 if variant == "rouge1" else 2
        pred_counts = _ngram_counts(rouge_tokens(pred), n)
        ref_counts = _ngram_counts(rouge_tokens(ref), n)
        hits = sum((pred_counts & ref_counts).values())
        return RougeScore.from_counts(variant, hits, pred_counts.total(), ref_counts.total())
    if variant == "rougeL":
        pred_tokens, ref_tokens = rouge_tokens(pred), rouge_tokens(ref)
        return RougeScore.from_counts(variant, lcs_length(ref_tokens, pred_tokens), len(pred_tokens), len(ref_tokens))
    if variant == "rougeLsum":
        pred_sentences = [tokens for line in pred.split("\n") if (tokens := rouge_tokens(line))]
        ref_sentences = [tokens for line in ref.split("\n") if (tokens := rouge_tokens(line))]
        return RougeScore.from_counts(variant, *_summary_level_lcs(ref_sentences, pred_sentences))
    msg = f"Unknown ROUGE variant: {variant}"
    raise ValueError(msg)


def rouge_scores(pred: str, ref: str, variants: Iterable[Variant] = VARIANTS) -> dict[Variant, RougeScore]:
    """Score every requested variant at once."""
    return {variant: rouge_f1(pred, ref, variant) for variant in variants}
