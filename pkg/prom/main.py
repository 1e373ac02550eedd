"""Command-line interface for prom."""

import argparse
import csv
import json
import logging
import sys
from collections.abc import Callable, Iterable, Iterator, Sequence
from contextlib import ExitStack
from datetime import datetime
from enum import Enum
from itertools import zip_longest
from pathlib import Path
from typing import IO, Any, Literal, NoReturn
from zoneinfo import ZoneInfo

import jsonlines
from pydantic import BaseModel, ValidationError

from prom import __version__
from prom.config import Config
from prom.copylabel import LabelReport, label_corpus
from prom.corpus import (
    STDIO_PATH,
    DataError,
    JsonlLine,
    dumps,
    open_input,
    open_output,
    ordered_map,
    read_jsonl,
    read_passages,
    write_jsonl,
)
from prom.entities import CapitalizedRunRecognizer
from prom.metrics import (
    PRF,
    ExtractivenessAccumulator,
    HistogramAccumulator,
    copied_ngram_f1,
    entity_prf,
    extractiveness_report,
    mean_prf,
)
from prom.models.configs import ModelConfig
from prom.models.records import (
    BuildManifest,
    DocumentRecord,
    PredictionRecord,
    SourceRecord,
    SummaryRecord,
    TripleRecord,
)
from prom.promnet.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from prom.promnet.decoding import beam_decode
from prom.promnet.gradcheck import gradient_check, random_examples
from prom.promnet.model import NonFiniteError, Params, PromNet
from prom.promnet.synthetic import make_synthetic_task
from prom.promnet.training import NonFiniteLossError, StepLog, train
from prom.pseudodata import Document, build_corpus
from prom.rouge import RougeScore, rouge_scores
from prom.textcore import TokenSeq, default_abbreviations, load_word_list, tokenize

logger = logging.getLogger(__name__)

DEFAULT_PHRASE_BANK = 40
DEFAULT_SYNTHETIC_SAMPLES = 2000


class Command(Enum):
    """Available CLI commands."""

    LABEL = "label"
    STATS = "stats"
    BUILD = "build"
    ROUGE = "rouge"
    COPIED_F1 = "copied-f1"
    ENTITY_COVERAGE = "entity-coverage"
    SYNTH = "synth"
    TRAIN = "train"
    DECODE = "decode"
    GRADCHECK = "gradcheck"


class Args(argparse.Namespace):
    """Type definition for command-line arguments."""

    command: str | None
    verbose: bool
    log: bool
    env_file: str | None
    config: str | None
    threads: int | None
    seed: int | None
    input: str | None
    output: str | None
    field: Literal["summary", "prediction"]
    histogram: str | None
    format: Literal["jsonl", "text"]
    manifest: str | None
    abbreviations: str | None
    pred: str
    ref: str
    gazetteer: str | None
    phrase_bank_size: int
    samples: int
    synthetic: int | None
    checkpoint: str | None
    train_log: str | None
    examples: int
    h: float
    tolerance: float
    copy_only: bool
    n: int | None


class PromArgumentParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with status 1."""

    def error(self, message: str) -> NoReturn:
        """Print usage and the error to stderr, then exit 1."""
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# flag dest -> (parameter block, key)
BLOCK_FLAGS: dict[str, tuple[str, str]] = {
    "modes": ("build", "modes"),
    "max_sents": ("build", "max_sents"),
    "min_sents": ("build", "min_sents"),
    "min_efd": ("build", "min_efd"),
    "select_ratio": ("build", "select_ratio"),
    "lead_k": ("build", "lead_k"),
    "orientation": ("build", "orientation"),
    "vocab_size": ("model", "vocab_size"),
    "model_dim": ("model", "model_dim"),
    "head_count": ("model", "head_count"),
    "encoder_layers": ("model", "encoder_layers"),
    "decoder_layers": ("model", "decoder_layers"),
    "feedforward_dim": ("model", "feedforward_dim"),
    "max_src_len": ("model", "max_src_len"),
    "max_tgt_len": ("model", "max_tgt_len"),
    "lambda_": ("model", "lambda"),
    "copy_indicator": ("model", "copy_indicator"),
    "strategy": ("train", "strategy"),
    "warmup_steps": ("train", "warmup_steps"),
    "total_steps": ("train", "total_steps"),
    "batch_size": ("train", "batch_size"),
    "learning_rate": ("train", "learning_rate"),
    "beam_size": ("train", "beam_size"),
    "orders": ("metrics", "orders"),
    "bins": ("metrics", "bins"),
    "position": ("metrics", "position"),
    "efd_normalization": ("metrics", "efd_normalization"),
    "rouge_variants": ("metrics", "rouge_variants"),
}

# paths each command reads and that must exist before any work starts
COMMAND_INPUTS: dict[Command, tuple[str, ...]] = {
    Command.LABEL: ("input",),
    Command.STATS: ("input",),
    Command.BUILD: ("input", "abbreviations"),
    Command.ROUGE: ("pred", "ref"),
    Command.COPIED_F1: ("input",),
    Command.ENTITY_COVERAGE: ("input", "gazetteer"),
    Command.TRAIN: ("input",),
    Command.DECODE: ("input", "checkpoint"),
    Command.GRADCHECK: ("checkpoint",),
}


def setup_logging(*, verbose: bool = False, log_file: str | None = None) -> None:
    """Set up logging configuration.

    Logs always go to stderr; stdout carries data only.

    Args:
        verbose: If True, set log level to DEBUG
        log_file: If specified, also append logs to this file
    """
    level = logging.DEBUG if verbose else logging.INFO

    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, mode="a", encoding="utf-8"))

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        handlers=handlers,
    )
    if log_file:
        logger.info("Logging to file: %(log_file)s", {"log_file": log_file})


def generate_log_filename() -> str:
    """Generate a log filename with current timestamp.

    Returns:
        Log filename in the format: prom.YYYYmmDD_HHMMSS.log
    """
    timestamp = datetime.now(tz=ZoneInfo("UTC")).strftime("%Y%m%d_%H%M%S")
    return f"prom.{timestamp}.log"


def log_summary(title: str, rows: Iterable[tuple[str, object]]) -> None:
    """Log a summary block."""
    logger.info("=" * 60)
    logger.info(title)
    logger.info("=" * 60)
    for label, value in rows:
        logger.info("%(label)-24s %(value)s", {"label": f"{label}:", "value": value})
    logger.info("=" * 60)


def collect_overrides(args: Args) -> dict[str, Any]:
    """Turn the flags that were given into config overrides."""
    overrides: dict[str, Any] = {"threads": getattr(args, "threads", None), "seed": getattr(args, "seed", None)}
    for dest, (block, key) in BLOCK_FLAGS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides.setdefault(block, {})[key] = value
    n = getattr(args, "n", None)
    if n is not None:
        overrides.setdefault("model", {})["n"] = n
        overrides.setdefault("metrics", {})["n"] = n
    return overrides


def load_config(args: Args, command: Command) -> Config:
    """Build and validate the run configuration of a command.

    Raises:
        ValueError: If a source or parameter block is invalid or an input is missing
    """
    config = Config.from_sources(args.env_file, args.config, collect_overrides(args))
    inputs = [getattr(args, name, None) for name in COMMAND_INPUTS.get(command, ())]
    config.validate(path for path in inputs if path)
    logger.debug("Configuration: %(config)s", {"config": config})
    return config


def _validated[M: BaseModel](line: JsonlLine, model: type[M]) -> tuple[M | None, str | None]:
    if line.error is not None:
        return None, line.error
    try:
        return model.model_validate(line.value), None
    except ValidationError as e:
        return None, f"{e.error_count()} validation error(s): {e.errors()[0]['msg']}"


def iter_records[M: BaseModel](
    lines: Iterable[JsonlLine],
    model: type[M],
    *,
    skipped: list[int] | None = None,
) -> Iterator[M]:
    """Validate JSONL lines, logging and skipping the ones that do not fit `model`."""
    for line in lines:
        record, error = _validated(line, model)
        if record is None:
            logger.warning("Skipping record on line %(line)d: %(error)s", {"line": line.line_number, "error": error})
            if skipped is not None:
                skipped.append(line.line_number)
            continue
        yield record


def strict_records[M: BaseModel](lines: Iterable[JsonlLine], model: type[M]) -> Iterator[M]:
    """Validate JSONL lines.

    Raises:
        DataError: On the first line that does not fit `model`
    """
    for line in lines:
        record, error = _validated(line, model)
        if record is None:
            msg = f"line {line.line_number}: {error}"
            raise DataError(msg)
        yield record


def _write_csv(handle: IO[str], header: Sequence[str], rows: Iterable[Sequence[object]]) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def _fixed(value: float) -> str:
    return f"{value:.6f}"


def _id_seq(ids: Iterable[int]) -> TokenSeq:
    return TokenSeq.from_tokens(map(str, ids))


def label_command(args: Args, config: Config) -> int:
    """Execute the label command: attach copy labels to document/summary records.

    Returns:
        Exit code
    """
    report = LabelReport()
    with open_input(args.input) as source, open_output(args.output) as sink:
        labeled = label_corpus(read_jsonl(source), config.metrics.n, threads=config.threads, report=report)
        write_jsonl(sink, labeled)
    log_summary("LABEL SUMMARY", [("n", config.metrics.n), ("Labeled", report.labeled), ("Skipped", report.skipped)])
    return 0


def _stats_one(
    record: SummaryRecord,
    field: str,
    config: Config,
) -> tuple[ExtractivenessAccumulator, HistogramAccumulator] | None:
    text = getattr(record, field)
    if text is None:
        return None
    x, y = tokenize(record.document), tokenize(text)
    accumulator = ExtractivenessAccumulator()
    accumulator.add(
        extractiveness_report(x, y, config.metrics.orders, normalize=config.metrics.efd_normalization),
    )
    histogram = HistogramAccumulator(config.metrics.bins)
    histogram.add_pair(x, y, config.metrics.n, config.metrics.position)
    return accumulator, histogram


def stats_command(args: Args, config: Config) -> int:
    """Execute the stats command: corpus extractiveness and the overlap-position histogram.

    Returns:
        Exit code
    """
    skipped: list[int] = []
    missing = 0
    totals = ExtractivenessAccumulator()
    positions = HistogramAccumulator(config.metrics.bins)
    with open_input(args.input) as source:
        records = iter_records(read_jsonl(source), SummaryRecord, skipped=skipped)
        for result in ordered_map(lambda record: _stats_one(record, args.field, config), records, config.threads):
            if result is None:
                missing += 1
                continue
            totals.merge(result[0])
            positions.merge(result[1])

    if missing:
        logger.warning("%(count)d records have no %(field)s", {"count": missing, "field": args.field})
    mean = totals.mean()
    histogram = positions.histogram()
    summary = {
        "records": totals.pairs,
        "skipped": len(skipped) + missing,
        "field": args.field,
        "efd_normalization": config.metrics.efd_normalization,
        "efd": mean.efd,
        "copy_length": mean.copy_length,
        "coverage": mean.coverage,
        "novelty": {str(n): value for n, value in mean.novelty.items()},
        "histogram": {
            "n": config.metrics.n,
            "position": config.metrics.position,
            "bins": histogram.bins,
            "total": histogram.total,
            "mass": list(histogram.mass),
        },
    }
    with open_output(args.output) as sink:
        sink.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if args.histogram:
        width = 1 / histogram.bins
        with open_output(args.histogram) as sink:
            _write_csv(
                sink,
                ("bin", "start", "end", "mass"),
                (
                    (index, _fixed(index * width), _fixed((index + 1) * width), _fixed(mass))
                    for index, mass in enumerate(histogram.mass)
                ),
            )

    log_summary(
        "STATS SUMMARY",
        [
            ("Records", totals.pairs),
            ("Skipped", len(skipped) + missing),
            ("Mean EFD", f"{mean.efd:.4f}"),
            ("Mean copy length", f"{mean.copy_length:.4f}"),
            ("Mean coverage", f"{mean.coverage:.4f}"),
            ("Overlaps counted", histogram.total),
        ],
    )
    return 0


def read_documents(
    source: IO[str],
    input_format: Literal["jsonl", "text"],
    manifest: BuildManifest,
    abbreviations: frozenset[str] | None = None,
) -> Iterator[Document]:
    """Segment the passages of a JSONL or blank-line separated text input.

    Unusable JSONL records are counted as read and failed in `manifest`.
    Text passages get the ids `passage-0`, `passage-1`, ...
    """
    abbreviations = default_abbreviations() if abbreviations is None else abbreviations
    if input_format == "text":
        for index, passage in enumerate(read_passages(source)):
            yield Document.from_text(f"passage-{index}", passage, abbreviations=abbreviations)
        return
    for line in read_jsonl(source):
        record, error = _validated(line, DocumentRecord)
        if record is None:
            logger.warning("Skipping document on line %(line)d: %(error)s", {"line": line.line_number, "error": error})
            manifest.documents_read += 1
            manifest.documents_failed += 1
            continue
        yield Document.from_record(record, abbreviations=abbreviations)


def build_command(args: Args, config: Config) -> int:
    """Execute the build command: construct the pseudo summarization corpus.

    Returns:
        Exit code
    """
    manifest = BuildManifest()
    abbreviations = load_word_list(Path(args.abbreviations)) if args.abbreviations else None
    with open_input(args.input) as source, open_output(args.output) as sink:
        documents = read_documents(source, args.format, manifest, abbreviations)
        pairs = build_corpus(documents, config.build, threads=config.threads, manifest=manifest)
        write_jsonl(sink, (pair.to_record() for pair in pairs))
    if args.manifest:
        with open_output(args.manifest) as handle:
            handle.write(manifest.model_dump_json(indent=2) + "\n")
    return 0


def aligned_texts(
    predictions: Iterable[PredictionRecord], references: Iterable[SummaryRecord]
) -> Iterator[tuple[str, str]]:
    """Pair predictions with references line by line.

    Raises:
        DataError: If the counts or the ids of the two streams differ
    """
    for prediction, reference in zip_longest(predictions, references):
        if prediction is None or reference is None:
            msg = "prediction and reference inputs hold different numbers of records"
            raise DataError(msg)
        if prediction.id != reference.id:
            msg = f"record id mismatch: prediction {prediction.id!r}, reference {reference.id!r}"
            raise DataError(msg)
        yield prediction.text, reference.summary


def rouge_command(args: Args, config: Config) -> int:
    """Execute the rouge command: mean ROUGE of predictions against references.

    Returns:
        Exit code
    """
    if args.pred == STDIO_PATH and args.ref == STDIO_PATH:
        msg = "--pred and --ref cannot both read standard input"
        raise ValueError(msg)
    variants = config.metrics.rouge_variants
    sums = {variant: [0.0, 0.0, 0.0] for variant in variants}
    count = 0

    def score(pair: tuple[str, str]) -> dict[str, RougeScore]:
        return rouge_scores(pair[0], pair[1], variants)

    with open_input(args.pred) as pred_source, open_input(args.ref) as ref_source:
        pairs = aligned_texts(
            strict_records(read_jsonl(pred_source), PredictionRecord),
            strict_records(read_jsonl(ref_source), SummaryRecord),
        )
        for scores in ordered_map(score, pairs, config.threads):
            count += 1
            for variant, value in scores.items():
                totals = sums[variant]
                totals[0] += value.precision
                totals[1] += value.recall
                totals[2] += value.f1

    if not count:
        logger.warning("No records to score")
    with open_output(args.output) as sink:
        _write_csv(
            sink,
            ("variant", "precision", "recall", "f1"),
            ((variant, *(_fixed(total / count if count else 0.0) for total in sums[variant])) for variant in variants),
        )
    log_summary(
        "ROUGE SUMMARY",
        [("Records", count), *((variant, f"{sums[variant][2] / count if count else 0.0:.4f}") for variant in variants)],
    )
    return 0


def _predicted(records: Iterable[SummaryRecord], missing: list[str]) -> Iterator[SummaryRecord]:
    for record in records:
        if record.prediction is None:
            logger.warning("Skipping record %(id)s: no prediction", {"id": record.id})
            missing.append(record.id)
            continue
        yield record


def copied_f1_command(args: Args, config: Config) -> int:
    """Execute the copied-f1 command: copied n-gram precision/recall/F1 per order.

    Returns:
        Exit code
    """
    orders = config.metrics.orders
    per_order: dict[int, list[PRF]] = {n: [] for n in orders}
    skipped: list[int] = []
    missing: list[str] = []

    def score(record: SummaryRecord) -> dict[int, PRF]:
        src, ref, pred = tokenize(record.document), tokenize(record.summary), tokenize(str(record.prediction))
        return {n: copied_ngram_f1(src, ref, pred, n) for n in orders}

    with open_input(args.input) as source:
        records = _predicted(iter_records(read_jsonl(source), SummaryRecord, skipped=skipped), missing)
        for scores in ordered_map(score, records, config.threads):
            for n, value in scores.items():
                per_order[n].append(value)

    means = {n: mean_prf(values) for n, values in per_order.items()}
    with open_output(args.output) as sink:
        _write_csv(sink, ("n", "precision", "recall", "f1"), ((n, *map(_fixed, means[n])) for n in orders))
    log_summary(
        "COPIED N-GRAM SUMMARY",
        [
            ("Records", len(per_order[orders[0]])),
            ("Skipped", len(skipped) + len(missing)),
            *((f"{n}-gram F1", f"{means[n].f1:.4f}") for n in orders),
        ],
    )
    return 0


def entity_coverage_command(args: Args, config: Config) -> int:
    """Execute the entity-coverage command: entity precision/recall/F1 of predictions.

    Returns:
        Exit code
    """
    recognizer = CapitalizedRunRecognizer.from_gazetteer(Path(args.gazetteer) if args.gazetteer else None)
    skipped: list[int] = []
    missing: list[str] = []

    def score(record: SummaryRecord) -> PRF:
        return entity_prf(tokenize(record.summary), tokenize(str(record.prediction)), recognizer)

    with open_input(args.input) as source:
        records = _predicted(iter_records(read_jsonl(source), SummaryRecord, skipped=skipped), missing)
        scores = list(ordered_map(score, records, config.threads))

    mean = mean_prf(scores)
    with open_output(args.output) as sink:
        _write_csv(sink, ("records", "precision", "recall", "f1"), [(len(scores), *map(_fixed, mean))])
    log_summary(
        "ENTITY COVERAGE SUMMARY",
        [("Records", len(scores)), ("Skipped", len(skipped) + len(missing)), ("F1", f"{mean.f1:.4f}")],
    )
    return 0


def synth_command(args: Args, config: Config) -> int:
    """Execute the synth command: write the synthetic copy task as JSONL triples.

    Returns:
        Exit code
    """
    samples = make_synthetic_task(
        config.model.vocab_size,
        args.phrase_bank_size,
        args.samples,
        config.seed,
        n=config.model.n,
    )
    with open_output(args.output) as sink:
        written = write_jsonl(sink, (sample.to_record() for sample in samples))
    log_summary(
        "SYNTH SUMMARY",
        [("Samples", written), ("Vocabulary", config.model.vocab_size), ("Phrase bank", args.phrase_bank_size)],
    )
    return 0


def fits_model(src: Sequence[int], tgt: Sequence[int] | None, cfg: ModelConfig) -> bool:
    """Whether a source (and target) can be fed to a model of shape `cfg`.

    The decoder reads BOS + target, so targets may hold max_tgt_len - 1 ids.
    """
    ids = [*src, *(tgt or ())]
    if not ids or min(ids) < 0 or max(ids) >= cfg.vocab_size:
        return False
    return len(src) <= cfg.max_src_len and (tgt is None or len(tgt) < cfg.max_tgt_len)


def training_examples(args: Args, config: Config) -> list[tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]]:
    """Load (or generate) the training triples that fit the configured model.

    Raises:
        ValueError: If neither an input nor --synthetic was given
        DataError: If no usable example remains
    """
    if args.synthetic is not None:
        samples = make_synthetic_task(
            config.model.vocab_size,
            args.phrase_bank_size,
            args.synthetic,
            config.seed,
            n=config.model.n,
        )
        candidates = [sample.as_example() for sample in samples]
    elif args.input:
        with open_input(args.input) as source:
            candidates = [
                (tuple(record.src), tuple(record.tgt), tuple(record.copy_labels))
                for record in iter_records(read_jsonl(source), TripleRecord)
            ]
    else:
        msg = "train needs --input or --synthetic"
        raise ValueError(msg)

    examples = [
        example
        for example in candidates
        if len(example[2]) == len(example[0]) and fits_model(example[0], example[1], config.model)
    ]
    if len(examples) < len(candidates):
        logger.warning(
            "Dropped %(count)d examples that do not fit the model (lengths, ids or label count)",
            {"count": len(candidates) - len(examples)},
        )
    if not examples:
        msg = "no usable training examples"
        raise DataError(msg)
    return examples


def train_command(args: Args, config: Config) -> int:
    """Execute the train command: SGD training followed by a checkpoint.

    Returns:
        Exit code
    """
    if not args.checkpoint:
        msg = "train needs --checkpoint"
        raise ValueError(msg)
    examples = training_examples(args, config)
    with ExitStack() as stack:
        on_step: Callable[[StepLog], None] | None = None
        if args.train_log:
            log_stream = stack.enter_context(open_output(args.train_log))
            writer = stack.enter_context(jsonlines.Writer(log_stream, dumps=dumps))

            def write_step(entry: StepLog) -> None:
                writer.write(entry.to_record())

            on_step = write_step

        result = train(config.model, config.train, examples, on_step=on_step)

    if args.checkpoint == STDIO_PATH:
        size = save_checkpoint(sys.stdout.buffer, config.model, result.params)
        sys.stdout.buffer.flush()
    else:
        size = save_checkpoint(Path(args.checkpoint), config.model, result.params)
    log_summary(
        "TRAIN SUMMARY",
        [
            ("Examples", len(examples)),
            ("Steps", len(result.log)),
            ("Strategy", config.train.strategy),
            ("First loss (mean)", f"{result.smoothed_loss(head=True):.4f}"),
            ("Last loss (mean)", f"{result.smoothed_loss():.4f}"),
            ("Checkpoint bytes", size),
        ],
    )
    return 0


def _read_checkpoint(path: str) -> tuple[ModelConfig, Params]:
    if path == STDIO_PATH:
        return load_checkpoint(sys.stdin.buffer)
    return load_checkpoint(Path(path))


def decode_command(args: Args, config: Config) -> int:
    """Execute the decode command: beam-decode source id sequences.

    Returns:
        Exit code
    """
    if not args.checkpoint:
        msg = "decode needs --checkpoint"
        raise ValueError(msg)
    if args.checkpoint == STDIO_PATH and args.input == STDIO_PATH:
        msg = "--checkpoint and --input cannot both read standard input"
        raise ValueError(msg)
    model_cfg, params = _read_checkpoint(args.checkpoint)
    net = PromNet(model_cfg, params)
    beam_size = config.train.beam_size
    skipped: list[int] = []
    unfit: list[str] = []
    copy_scores: list[PRF] = []

    def usable(records: Iterable[SourceRecord]) -> Iterator[SourceRecord]:
        for record in records:
            if fits_model(record.src, record.tgt, model_cfg):
                yield record
            else:
                logger.warning("Skipping record %(id)s: does not fit the model", {"id": record.id})
                unfit.append(record.id)

    def decode_one(record: SourceRecord) -> tuple[dict[str, Any], PRF | None]:
        hypothesis = beam_decode(net, record.src, beam_size)
        output = {"id": record.id, "prediction": list(hypothesis.output), "score": hypothesis.score}
        if record.tgt is None:
            return output, None
        return output, copied_ngram_f1(
            _id_seq(record.src),
            _id_seq(record.tgt),
            _id_seq(hypothesis.output),
            model_cfg.n,
        )

    def outputs(records: Iterable[SourceRecord]) -> Iterator[dict[str, Any]]:
        for output, copied in ordered_map(decode_one, records, config.threads):
            if copied is not None:
                copy_scores.append(copied)
            yield output

    with open_input(args.input) as source, open_output(args.output) as sink:
        records = usable(iter_records(read_jsonl(source), SourceRecord, skipped=skipped))
        written = write_jsonl(sink, outputs(records))

    rows: list[tuple[str, object]] = [
        ("Decoded", written),
        ("Skipped", len(skipped) + len(unfit)),
        ("Beam size", beam_size),
    ]
    if copy_scores:
        rows.append((f"Copied {model_cfg.n}-gram F1", f"{mean_prf(copy_scores).f1:.4f}"))
    log_summary("DECODE SUMMARY", rows)
    return 0


def gradcheck_command(args: Args, config: Config) -> int:
    """Execute the gradcheck command: finite-difference check of the model gradients.

    Returns:
        Exit code (2 when a coordinate exceeds the tolerance)
    """
    if args.checkpoint:
        model_cfg, params = _read_checkpoint(args.checkpoint)
    else:
        model_cfg, params = config.model, None
    net = PromNet(model_cfg, params)
    batch = random_examples(model_cfg, args.examples, seed=config.seed)
    report = gradient_check(
        net,
        batch,
        samples=args.samples,
        h=args.h,
        tolerance=args.tolerance,
        seed=config.seed,
        copy_only=args.copy_only,
    )
    if args.output:
        with open_output(args.output) as sink:
            _write_csv(
                sink,
                ("name", "index", "analytic", "numeric", "error"),
                (
                    (c.name, ":".join(map(str, c.index)), f"{c.analytic:.9e}", f"{c.numeric:.9e}", f"{c.error:.3e}")
                    for c in report.coordinates
                ),
            )
    log_summary(
        "GRADIENT CHECK SUMMARY",
        [
            ("Coordinates", len(report.coordinates)),
            ("Max relative error", f"{report.max_error:.3e}"),
            ("Tolerance", f"{report.tolerance:.1e}"),
            ("Failures", len(report.failures)),
        ],
    )
    return 0 if report.passed else 2


COMMANDS: dict[Command, Callable[[Args, Config], int]] = {
    Command.LABEL: label_command,
    Command.STATS: stats_command,
    Command.BUILD: build_command,
    Command.ROUGE: rouge_command,
    Command.COPIED_F1: copied_f1_command,
    Command.ENTITY_COVERAGE: entity_coverage_command,
    Command.SYNTH: synth_command,
    Command.TRAIN: train_command,
    Command.DECODE: decode_command,
    Command.GRADCHECK: gradcheck_command,
}


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        help="Enable verbose output (DEBUG level logging)",
    )
    common.add_argument(
        "-l",
        "--log",
        action="store_true",
        help="Also log to a file with auto-generated filename (prom.YYYYmmDD_HHMMSS.log)",
    )
    common.add_argument(
        "--env-file",
        type=str,
        help="Path to .env file (default: .env in current directory)",
    )
    common.add_argument("--config", type=str, help="TOML or JSON config file")
    common.add_argument("--threads", type=int, help="Worker threads (overrides PROM_THREADS, default: 1)")
    common.add_argument("--seed", type=int, help="Seed for every source of randomness (overrides PROM_SEED)")
    return common


def _io_parser(*, input_default: str | None = STDIO_PATH) -> argparse.ArgumentParser:
    io = argparse.ArgumentParser(add_help=False)
    io.add_argument("-i", "--input", type=str, default=input_default, help="Input file ('-' for stdin)")
    io.add_argument("-o", "--output", type=str, default=STDIO_PATH, help="Output file ('-' for stdout, default)")
    return io


def _build_parser() -> argparse.ArgumentParser:
    block = argparse.ArgumentParser(add_help=False)
    group = block.add_argument_group("pseudo-data parameters")
    group.add_argument(
        "--mode",
        dest="modes",
        action="append",
        choices=["nat", "chunk", "lead"],
        help="Builder to run; repeat for several (default: nat and chunk)",
    )
    group.add_argument("--max-sents", type=int, help="Chunk ceiling in sentences (default: 8)")
    group.add_argument("--min-sents", type=int, help="Chunk floor in sentences (default: 4)")
    group.add_argument("--min-efd", type=float, help="Minimum EFD of kept nat/chunk pairs (default: 3)")
    group.add_argument("--ratio", dest="select_ratio", type=float, help="Selected sentence fraction (default: 0.25)")
    group.add_argument("--lead-k", type=int, help="Lead sentences used by the lead builder (default: 3)")
    group.add_argument(
        "--orientation",
        choices=["selected-document", "paper-literal", "gsg"],
        help="Side the selected sentences go to (default: selected-document)",
    )
    return block


def _model_parser() -> argparse.ArgumentParser:
    block = argparse.ArgumentParser(add_help=False)
    group = block.add_argument_group("model parameters")
    group.add_argument("--vocab-size", type=int, help="Vocabulary size (default: 200)")
    group.add_argument("--model-dim", type=int, help="Hidden size (default: 32)")
    group.add_argument("--heads", dest="head_count", type=int, help="Attention heads (default: 2)")
    group.add_argument("--encoder-layers", type=int, help="Encoder layers (default: 1)")
    group.add_argument("--decoder-layers", type=int, help="Decoder layers (default: 1)")
    group.add_argument("--feedforward-dim", type=int, help="Feed-forward size (default: 64)")
    group.add_argument("--max-src-len", type=int, help="Longest source (default: 32)")
    group.add_argument("--max-tgt-len", type=int, help="Longest decoder input incl. BOS (default: 24)")
    group.add_argument("--lambda", dest="lambda_", type=float, help="Weight of the copy loss (default: 1)")
    group.add_argument(
        "--no-indicator",
        dest="copy_indicator",
        action="store_const",
        const=False,
        help="Drop the copy indicator from the copy distribution (pointer-generator baseline)",
    )
    group.add_argument("-n", "--n", dest="n", type=int, help="Copy-label n-gram order (default: 2)")
    return block


def _train_parser() -> argparse.ArgumentParser:
    block = argparse.ArgumentParser(add_help=False)
    group = block.add_argument_group("training parameters")
    group.add_argument("--strategy", choices=["multi-task", "two-stage"], help="Schedule (default: multi-task)")
    group.add_argument("--warmup", dest="warmup_steps", type=int, help="Indicator-only steps (default: 10%% of steps)")
    group.add_argument("--steps", dest="total_steps", type=int, help="SGD steps (default: 2000)")
    group.add_argument("--batch-size", type=int, help="Examples per step (default: 8)")
    group.add_argument("--lr", dest="learning_rate", type=float, help="Learning rate (default: 0.1)")
    return block


def _metrics_parser(*, order: bool = True) -> argparse.ArgumentParser:
    block = argparse.ArgumentParser(add_help=False)
    group = block.add_argument_group("metric options")
    if order:
        group.add_argument("-n", "--n", dest="n", type=int, help="n-gram order (default: 2)")
    group.add_argument("--orders", type=int, nargs="+", help="n-gram orders (default: 1 2 3 4)")
    group.add_argument("--bins", type=int, help="Histogram buckets (default: 20)")
    group.add_argument("--position", choices=["start", "midpoint"], help="Overlap anchor (default: start)")
    group.add_argument(
        "--efd-normalization",
        choices=["source", "summary"],
        help="Divide EFD by the document or the summary length (default: source)",
    )
    group.add_argument(
        "--variants",
        dest="rouge_variants",
        nargs="+",
        choices=["rouge1", "rouge2", "rougeL", "rougeLsum"],
        help="ROUGE variants to report (default: all)",
    )
    return block


def build_argument_parser() -> PromArgumentParser:
    """Create the prom argument parser."""
    parser = PromArgumentParser(
        prog="prom",
        description="Phrase-level copy labels, extractiveness metrics, pseudo summarization data "
        "and a copy-enhanced encoder-decoder",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {__version__}",
    )
    parser.set_defaults(command=None, verbose=False, log=False, env_file=None, config=None)

    common = _common_parser()
    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser(
        Command.LABEL.value,
        parents=[common, _io_parser(), _metrics_parser()],
        help="Attach copy labels to document/summary JSONL records",
    )

    stats = subparsers.add_parser(
        Command.STATS.value,
        parents=[common, _io_parser(), _metrics_parser()],
        help="Extractiveness statistics and the overlap-position histogram as JSON",
    )
    stats.add_argument(
        "--field",
        choices=["summary", "prediction"],
        default="summary",
        help="Summary side to analyze (default: summary)",
    )
    stats.add_argument("--histogram", type=str, help="Also write the position histogram as CSV")

    build = subparsers.add_parser(
        Command.BUILD.value,
        parents=[common, _io_parser(), _build_parser()],
        help="Build pseudo document/summary pairs from raw passages",
    )
    build.add_argument(
        "-f",
        "--format",
        choices=["jsonl", "text"],
        default="jsonl",
        help="Input format: JSONL {id, text, genre} or blank-line separated passages (default: jsonl)",
    )
    build.add_argument("--manifest", type=str, help="Write the build manifest JSON here")
    build.add_argument(
        "--abbreviations", type=str, help="Abbreviation guard list, one per line (default: bundled list)"
    )

    rouge = subparsers.add_parser(
        Command.ROUGE.value,
        parents=[common, _metrics_parser(order=False)],
        help="Mean ROUGE of predictions against references as CSV",
    )
    rouge.add_argument("--pred", type=str, required=True, help="Prediction JSONL (prediction, else summary)")
    rouge.add_argument("--ref", type=str, required=True, help="Reference JSONL (summary)")
    rouge.add_argument("-o", "--output", type=str, default=STDIO_PATH, help="Output CSV ('-' for stdout, default)")

    subparsers.add_parser(
        Command.COPIED_F1.value,
        parents=[common, _io_parser(), _metrics_parser(order=False)],
        help="Copied n-gram precision/recall/F1 per order as CSV",
    )

    entity = subparsers.add_parser(
        Command.ENTITY_COVERAGE.value,
        parents=[common, _io_parser()],
        help="Entity precision/recall/F1 of predictions as CSV",
    )
    entity.add_argument("--gazetteer", type=str, help="Entity phrases, one per line")

    synth = subparsers.add_parser(
        Command.SYNTH.value,
        parents=[common],
        help="Write the synthetic copy task as JSONL triples",
    )
    synth.add_argument("-o", "--output", type=str, default=STDIO_PATH, help="Output file ('-' for stdout, default)")
    synth.add_argument("--vocab-size", type=int, help="Vocabulary size (default: 200)")
    synth.add_argument("-n", "--n", dest="n", type=int, help="Copy-label n-gram order (default: 2)")
    synth.add_argument(
        "--phrase-bank-size",
        type=int,
        default=DEFAULT_PHRASE_BANK,
        help=f"Rare ids phrases are drawn from (default: {DEFAULT_PHRASE_BANK})",
    )
    synth.add_argument(
        "--samples",
        type=int,
        default=DEFAULT_SYNTHETIC_SAMPLES,
        help=f"Number of samples (default: {DEFAULT_SYNTHETIC_SAMPLES})",
    )

    train_cmd = subparsers.add_parser(
        Command.TRAIN.value,
        parents=[common, _model_parser(), _train_parser()],
        help="Train the model and write a checkpoint",
    )
    train_cmd.add_argument("-i", "--input", type=str, help="Training triples JSONL ('-' for stdin)")
    train_cmd.add_argument("--synthetic", type=int, metavar="COUNT", help="Train on COUNT generated copy-task samples")
    train_cmd.add_argument(
        "--phrase-bank-size",
        type=int,
        default=DEFAULT_PHRASE_BANK,
        help=f"Phrase bank of the generated task (default: {DEFAULT_PHRASE_BANK})",
    )
    train_cmd.add_argument("--checkpoint", type=str, help="Checkpoint to write ('-' for stdout)")
    train_cmd.add_argument("--train-log", type=str, help="Write the per-step loss log as JSONL")

    decode = subparsers.add_parser(
        Command.DECODE.value,
        parents=[common, _io_parser()],
        help="Beam-decode {id, src[, tgt]} JSONL records with a trained checkpoint",
    )
    decode.add_argument("--checkpoint", type=str, help="Checkpoint to read ('-' for stdin)")
    decode.add_argument("--beam-size", type=int, help="Beam width; 1 is greedy (default: 4)")

    gradcheck = subparsers.add_parser(
        Command.GRADCHECK.value,
        parents=[common, _model_parser()],
        help="Compare analytic gradients with central finite differences",
    )
    gradcheck.add_argument("--checkpoint", type=str, help="Checkpoint to check (default: fresh model)")
    gradcheck.add_argument("-o", "--output", type=str, help="Write every checked coordinate as CSV")
    gradcheck.add_argument("--examples", type=int, default=2, help="Random examples in the batch (default: 2)")
    gradcheck.add_argument("--samples", type=int, default=200, help="Coordinates to check (default: 200)")
    gradcheck.add_argument("--h", type=float, default=1e-5, help="Finite-difference step (default: 1e-5)")
    gradcheck.add_argument("--tolerance", type=float, default=1e-4, help="Maximum relative error (default: 1e-4)")
    gradcheck.add_argument("--copy-only", action="store_true", help="Check the copy-loss objective alone")

    return parser


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run one command and return its exit code.

    Exit codes: 0 success, 1 usage or configuration error, 2 data error.
    """
    parser = build_argument_parser()
    try:
        args = parser.parse_args(argv, namespace=Args())
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 1

    log_file_path = generate_log_filename() if args.log else None
    setup_logging(verbose=args.verbose, log_file=log_file_path)

    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    command = Command(args.command)

    try:
        config = load_config(args, command)
    except ValueError:
        logger.exception("Configuration error")
        return 1

    try:
        return COMMANDS[command](args, config)
    except (DataError, CheckpointError, NonFiniteError, NonFiniteLossError):
        logger.exception("Data error in %(command)s", {"command": command.value})
        return 2
    except ValueError:
        logger.exception("Invalid arguments for %(command)s", {"command": command.value})
        return 1
    except Exception:
        logger.exception("%(command)s failed", {"command": command.value})
        return 2


def main() -> None:
    """Main entry point for CLI."""
    sys.exit(run())


if __name__ == "__main__":
    main()
