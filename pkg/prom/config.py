"""Run configuration for the prom CLI.

Values are layered, later layers winning: built-in defaults, environment
(`PROM_THREADS`, `PROM_SEED`, optionally loaded from a .env file), a TOML or
JSON config file, then command-line flags. A `seed` given in any layer also
seeds the model and training blocks unless the same layer sets their own.
"""

import json
import logging
import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

from dotenv import load_dotenv

from prom.corpus import STDIO_PATH
from prom.models.configs import BuildConfig, MetricOptions, ModelConfig, TrainConfig

if TYPE_CHECKING:
    from collections.abc import Iterable, Mapping

logger = logging.getLogger(__name__)

THREADS_ENV = "PROM_THREADS"
SEED_ENV = "PROM_SEED"
BLOCKS = ("build", "model", "train", "metrics")
SEEDED_BLOCKS = ("model", "train")


def _env_int(name: str) -> int | None:
    raw = os.getenv(name)
    if raw is None or not raw.strip():
        return None
    try:
        return int(raw)
    except ValueError as e:
        msg = f"{name} must be an integer, got {raw!r}"
        raise ValueError(msg) from e


def read_config_file(path: Path) -> dict[str, Any]:
    """Parse a TOML (default) or JSON (`.json` suffix) config file.

    Raises:
        ValueError: If the file cannot be read or parsed, or is not a table
    """
    try:
        content = path.read_text(encoding="utf-8")
    except OSError as e:
        msg = f"Cannot read config file {path}: {e}"
        raise ValueError(msg) from e
    try:
        data = json.loads(content) if path.suffix.lower() == ".json" else tomllib.loads(content)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        msg = f"Invalid config file {path}: {e}"
        raise ValueError(msg) from e
    if not isinstance(data, dict):
        msg = f"Config file {path} must hold a table/object at the top level"
        raise ValueError(msg)  # noqa: TRY004
    unknown = sorted(set(data) - {"threads", "seed", *BLOCKS})
    if unknown:
        msg = f"Unknown config keys in {path}: {', '.join(unknown)}"
        raise ValueError(msg)
    return data


def _merge_layer(merged: dict[str, Any], layer: Mapping[str, Any]) -> None:
    for key in ("threads", "seed"):
        if layer.get(key) is not None:
            merged[key] = layer[key]
    for block in BLOCKS:
        values: dict[str, Any] = {}
        if block in SEEDED_BLOCKS and layer.get("seed") is not None:
            values["seed"] = layer["seed"]
        values |= {key: value for key, value in (layer.get(block) or {}).items() if value is not None}
        merged[block] |= values


@dataclass
class Config:
    """Configuration of one CLI run.

    Attributes:
        threads: Worker count for streaming stages
        seed: Seed for every source of randomness
        build: Pseudo-data parameters
        model: Model shape and objective
        train: Optimization schedule
        metrics: Scoring options
    """

    threads: int = 1
    seed: int = 0
    build: BuildConfig = field(default_factory=BuildConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    metrics: MetricOptions = field(default_factory=MetricOptions)

    @classmethod
    def from_sources(
        cls,
        env_file: Path | str | None = None,
        config_file: Path | str | None = None,
        overrides: Mapping[str, Any] | None = None,
    ) -> Config:
        """Load configuration from environment, config file and flag overrides.

        Args:
            env_file: Path to .env file. If None, uses default .env file in current directory.
            config_file: TOML or JSON file with `threads`, `seed` and the
                `build` / `model` / `train` / `metrics` blocks
            overrides: Flag values in the same shape; None values are ignored

        Returns:
            Config instance with validated parameter blocks

        Raises:
            ValueError: If a source is malformed
            pydantic.ValidationError: If a parameter block is invalid
        """
        if env_file:
            load_dotenv(env_file)
        else:
            load_dotenv()

        merged: dict[str, Any] = {"threads": 1, "seed": 0} | {block: {} for block in BLOCKS}
        _merge_layer(merged, {"threads": _env_int(THREADS_ENV), "seed": _env_int(SEED_ENV)})
        if config_file:
            path = Path(config_file)
            _merge_layer(merged, read_config_file(path))
            logger.debug("Loaded config file %(path)s", {"path": path})
        if overrides:
            _merge_layer(merged, overrides)

        return cls(
            threads=int(merged["threads"]),
            seed=int(merged["seed"]),
            build=BuildConfig.model_validate(merged["build"]),
            model=ModelConfig.model_validate(merged["model"]),
            train=TrainConfig.model_validate(merged["train"]),
            metrics=MetricOptions.model_validate(merged["metrics"]),
        )

    def validate(self, inputs: Iterable[str | Path] = ()) -> None:
        """Validate run-level values.

        Args:
            inputs: Input paths that must exist (`-` is standard input)

        Raises:
            ValueError: If the thread count is below 1 or an input is missing
        """
        if self.threads < 1:
            msg = f"thread count must be >= 1, got {self.threads}"
            raise ValueError(msg)
        for path in inputs:
            if str(path) != STDIO_PATH and not Path(path).is_file():
                msg = f"Input file not found: {path}"
                raise ValueError(msg)
