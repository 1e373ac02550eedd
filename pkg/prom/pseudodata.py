"""Self-supervised pseudo document/summary pairs.

Three builders turn a raw passage into pairs:

- nat: score every sentence by how much of it the rest of the passage repeats
  (`prom.metrics.gsg_score`), move the top m% to one side and keep the rest on
  the other;
- chunk: cut the passage into consecutive chunks of at most `max_sents`
  sentences (a short final chunk survives only with `min_sents`) and apply the
  nat builder to each chunk;
- lead: the first `lead_k` sentences become the summary.

nat and chunk pairs are filtered by a minimum EFD; lead pairs are not.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING, Any

from prom.corpus import ordered_map
from prom.metrics import efd, gsg_score
from prom.models.configs import BuildConfig
from prom.models.records import BuildManifest, DocumentRecord, PseudoPairRecord
from prom.textcore import sentence_texts, split_sentences, tokenize

if TYPE_CHECKING:
    from collections.abc import Iterable, Iterator

    from prom.models.configs import BuildMode
    from prom.textcore import SentenceSpan, TokenSeq

logger = logging.getLogger(__name__)

TOO_FEW_SENTENCES = "too-few-sentences"
EMPTY_SIDE = "empty-side"
SHORT_CHUNK = "short-chunk"


@dataclass(frozen=True)
class Document:
    """A raw passage with its sentence segmentation.

    Attributes:
        id: Stable identifier
        text: Raw passage
        sentences: Sentence spans partitioning the tokens of `text`
        tokens: Case-folded tokenization of `text`
        genre: Optional genre tag (news, story, web, ...)
    """

    id: str
    text: str
    sentences: tuple[SentenceSpan, ...]
    tokens: TokenSeq
    genre: str | None = None

    @classmethod
    def from_text(
        cls,
        doc_id: str,
        text: str,
        genre: str | None = None,
        *,
        abbreviations: Iterable[str] | None = None,
    ) -> Document:
        """Segment a raw passage."""
        return cls(
            id=doc_id,
            text=text,
            sentences=tuple(split_sentences(text, abbreviations=abbreviations)),
            tokens=tokenize(text),
            genre=genre,
        )

    @classmethod
    def from_record(cls, record: DocumentRecord, *, abbreviations: Iterable[str] | None = None) -> Document:
        """Segment the passage of a validated JSONL record."""
        return cls.from_text(record.id, record.text, record.genre, abbreviations=abbreviations)

    @cached_property
    def sentence_texts(self) -> list[str]:
        """Raw sentence slices; joined in order they give back `text` exactly."""
        return sentence_texts(self.text, self.sentences)


@dataclass(frozen=True)
class PseudoPair:
    """One constructed document/summary pair.

    Attributes:
        id: "<doc id>:nat", "<doc id>:chunk<k>" or "<doc id>:lead"
        document_text: Document side, sentences in original order
        summary_text: Summary side, sentences in original order
        provenance: Builder that produced the pair
        efd: efd(document side, summary side)
        selected_indices: Sentence indices (relative to the chunk for chunk
            pairs) on the selected side; for lead pairs, the summary sentences
        sentence_offset: Index of the chunk's first sentence in the passage
        genre: Genre tag of the source passage
    """

    id: str
    document_text: str
    summary_text: str
    provenance: BuildMode
    efd: float
    selected_indices: tuple[int, ...]
    sentence_offset: int = 0
    genre: str | None = None

    def to_record(self) -> dict[str, Any]:
        """Return the validated JSONL form of this pair."""
        record = PseudoPairRecord(
            id=self.id,
            document_text=self.document_text,
            summary_text=self.summary_text,
            provenance=self.provenance,
            efd=self.efd,
            selected_indices=list(self.selected_indices),
            sentence_offset=self.sentence_offset,
            genre=self.genre,
        )
        return record.model_dump(exclude_none=True)


def selection_count(sentence_count: int, ratio: float) -> int:
    """Number of sentences to select: round-half-up of ratio * count, at least 1."""
    return max(1, int(ratio * sentence_count + 0.5))


def _pair_efd(document_text: str, summary_text: str) -> float:
    return efd(tokenize(document_text), tokenize(summary_text))


def _select(
    doc: Document,
    lo: int,
    hi: int,
    cfg: BuildConfig,
    *,
    pair_id: str,
    provenance: BuildMode,
    manifest: BuildManifest | None,
) -> PseudoPair | None:
    spans = doc.sentences[lo:hi]
    count = len(spans)
    if count < 2:  # noqa: PLR2004
        if manifest is not None:
            manifest.record_skip(provenance, TOO_FEW_SENTENCES)
        return None
    k = selection_count(count, cfg.select_ratio)
    if k >= count:
        if manifest is not None:
            manifest.record_skip(provenance, EMPTY_SIDE)
        return None

    scores = [gsg_score(doc.tokens, spans, i) for i in range(count)]
    ranked = sorted(range(count), key=lambda i: (-scores[i], i))
    selected = sorted(ranked[:k])
    chosen = set(selected)
    texts = doc.sentence_texts[lo:hi]
    selected_text = "".join(texts[i] for i in selected)
    remainder_text = "".join(text for i, text in enumerate(texts) if i not in chosen)

    if cfg.orientation == "selected-document":
        document_text, summary_text = selected_text, remainder_text
    else:
        document_text, summary_text = remainder_text, selected_text
    logger.debug(
        "%(id)s: selected %(selected)s of %(count)d sentences",
        {"id": pair_id, "selected": selected, "count": count},
    )
    return PseudoPair(
        id=pair_id,
        document_text=document_text,
        summary_text=summary_text,
        provenance=provenance,
        efd=_pair_efd(document_text, summary_text),
        selected_indices=tuple(selected),
        sentence_offset=lo,
        genre=doc.genre,
    )


def build_nat(doc: Document, cfg: BuildConfig, *, manifest: BuildManifest | None = None) -> PseudoPair | None:
    """Build the sentence-selection pair of a whole passage.

    The max(1, round(m% * s)) highest-scoring sentences (lower index first on
    ties) form the selected side: the document under the selected-document
    orientation, the summary under the gsg orientation.

    Args:
        doc: Segmented passage
        cfg: Build parameters
        manifest: Receives skip reasons

    Returns:
        The pair, or None when the passage has fewer than 2 sentences or a side
        would be empty
    """
    return _select(doc, 0, len(doc.sentences), cfg, pair_id=f"{doc.id}:nat", provenance="nat", manifest=manifest)


def chunk_bounds(sentence_count: int, cfg: BuildConfig) -> list[tuple[int, int]]:
    """Consecutive non-overlapping [lo, hi) sentence ranges of at most max_sents.

    A trailing range shorter than min_sents is dropped.
    """
    bounds = [(lo, min(lo + cfg.max_sents, sentence_count)) for lo in range(0, sentence_count, cfg.max_sents)]
    return [(lo, hi) for lo, hi in bounds if hi - lo >= cfg.min_sents]


def build_chunk(doc: Document, cfg: BuildConfig, *, manifest: BuildManifest | None = None) -> list[PseudoPair]:
    """Chunk a passage and build a sentence-selection pair per chunk.

    Args:
        doc: Segmented passage
        cfg: Build parameters
        manifest: Receives skip reasons

    Returns:
        Pairs in chunk order; selected_indices are relative to their chunk
    """
    count = len(doc.sentences)
    bounds = chunk_bounds(count, cfg)
    discarded = -(-count // cfg.max_sents) - len(bounds) if count else 0
    if manifest is not None:
        for _ in range(discarded):
            manifest.record_skip("chunk", SHORT_CHUNK)

    pairs: list[PseudoPair] = []
    for index, (lo, hi) in enumerate(bounds):
        pair = _select(doc, lo, hi, cfg, pair_id=f"{doc.id}:chunk{index}", provenance="chunk", manifest=manifest)
        if pair is not None:
            pairs.append(pair)
    return pairs


def build_lead(doc: Document, cfg: BuildConfig, *, manifest: BuildManifest | None = None) -> PseudoPair | None:
    """Build the lead-bias pair: the first lead_k sentences summarize the rest.

    Returns:
        The pair, or None when the passage has no more than lead_k sentences
    """
    texts = doc.sentence_texts
    if len(texts) <= cfg.lead_k:
        if manifest is not None:
            manifest.record_skip("lead", TOO_FEW_SENTENCES)
        return None
    summary_text = "".join(texts[: cfg.lead_k])
    document_text = "".join(texts[cfg.lead_k :])
    return PseudoPair(
        id=f"{doc.id}:lead",
        document_text=document_text,
        summary_text=summary_text,
        provenance="lead",
        efd=_pair_efd(document_text, summary_text),
        selected_indices=tuple(range(cfg.lead_k)),
        genre=doc.genre,
    )


def filter_min_efd(
    pairs: Iterable[PseudoPair],
    min_efd: float,
    *,
    manifest: BuildManifest | None = None,
) -> Iterator[PseudoPair]:
    """Keep pairs whose EFD reaches `min_efd`, in order.

    Args:
        pairs: Candidate pairs
        min_efd: Threshold (0 keeps everything)
        manifest: Counts the dropped pairs

    Yields:
        Pairs with efd >= min_efd
    """
    for pair in pairs:
        if pair.efd >= min_efd:
            yield pair
            continue
        logger.debug("Dropping %(id)s: EFD %(efd).3f < %(min)s", {"id": pair.id, "efd": pair.efd, "min": min_efd})
        if manifest is not None:
            manifest.dropped_by_filter += 1


def build_document(doc: Document, cfg: BuildConfig, *, manifest: BuildManifest | None = None) -> list[PseudoPair]:
    """Run the enabled builders on one passage.

    Returns:
        Filtered nat pair, filtered chunk pairs, then the lead pair
    """
    selected: list[PseudoPair] = []
    if "nat" in cfg.modes and (pair := build_nat(doc, cfg, manifest=manifest)) is not None:
        selected.append(pair)
    if "chunk" in cfg.modes:
        selected.extend(build_chunk(doc, cfg, manifest=manifest))
    if manifest is not None:
        for pair in selected:
            manifest.record_pair(pair.provenance)

    pairs = list(filter_min_efd(selected, cfg.min_efd, manifest=manifest))
    if "lead" in cfg.modes and (lead := build_lead(doc, cfg, manifest=manifest)) is not None:
        if manifest is not None:
            manifest.record_pair("lead")
        pairs.append(lead)
    return pairs


def _build_one(doc: Document, cfg: BuildConfig) -> tuple[list[PseudoPair], BuildManifest]:
    """Build one passage; a `ValueError` (pydantic `ValidationError` included) marks it failed."""
    manifest = BuildManifest(documents_read=1)
    try:
        pairs = build_document(doc, cfg, manifest=manifest)
    except ValueError:
        logger.exception("Failed to build pairs for document %(id)s", {"id": doc.id})
        return [], BuildManifest(documents_read=1, documents_failed=1)
    manifest.emitted = len(pairs)
    return pairs, manifest


def build_corpus(
    documents: Iterable[Document],
    cfg: BuildConfig | None = None,
    *,
    threads: int = 1,
    manifest: BuildManifest | None = None,
) -> Iterator[PseudoPair]:
    """Build the pseudo corpus of a stream of passages.

    Documents are independent; output keeps document order for any thread count.

    Args:
        documents: Segmented passages
        cfg: Build parameters (defaults when None)
        threads: Worker count
        manifest: Receives per-mode counts, skip reasons and filter drops

    Yields:
        Pairs per document: nat, chunks, then lead
    """
    cfg = cfg or BuildConfig()
    manifest = manifest if manifest is not None else BuildManifest()
    for pairs, partial in ordered_map(lambda doc: _build_one(doc, cfg), documents, threads):
        manifest.merge(partial)
        yield from pairs
    log_manifest(manifest)


def log_manifest(manifest: BuildManifest) -> None:
    """Log the build summary block."""
    logger.info("=" * 60)
    logger.info("Build summary")
    logger.info("=" * 60)
    logger.info(
        "Documents: %(read)d read, %(failed)d failed",
        {"read": manifest.documents_read, "failed": manifest.documents_failed},
    )
    for mode, count in sorted(manifest.pairs_built.items()):
        logger.info("Built %(count)d %(mode)s pairs", {"count": count, "mode": mode})
    for mode, reasons in sorted(manifest.skipped.items()):
        for reason, count in sorted(reasons.items()):
            logger.info("Skipped %(mode)s: %(reason)s x%(count)d", {"mode": mode, "reason": reason, "count": count})
    logger.info(
        "Dropped by EFD filter: %(dropped)d, emitted: %(emitted)d",
        {"dropped": manifest.dropped_by_filter, "emitted": manifest.emitted},
    )

