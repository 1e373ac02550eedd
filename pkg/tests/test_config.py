"""Tests for layered run configuration."""

from __future__ import annotations

import os
from typing import TYPE_CHECKING

import pytest
from pydantic import ValidationError

from prom.config import SEED_ENV, THREADS_ENV, Config, read_config_file

if TYPE_CHECKING:
    from collections.abc import Iterator
    from pathlib import Path


@pytest.fixture(autouse=True)
def clean_env(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Iterator[None]:
    """Run from an empty directory with no prom variables set."""
    monkeypatch.chdir(tmp_path)
    for key in (THREADS_ENV, SEED_ENV):
        monkeypatch.delenv(key, raising=False)
    yield
    for key in (THREADS_ENV, SEED_ENV):
        os.environ.pop(key, None)


class TestConfigLayers:
    """Test precedence of defaults, environment, config file and flags."""

    def test_defaults(self) -> None:
        """Nothing set gives the built-in defaults."""
        config = Config.from_sources()
        assert (config.threads, config.seed) == (1, 0)
        assert config.build.max_sents == 8
        assert config.model.lambda_ == 1.0
        assert config.train.beam_size == 4
        assert config.metrics.n == 2

    def test_env_file(self, tmp_path: Path) -> None:
        """The .env file sets threads and seeds the model and training blocks."""
        env_file = tmp_path / "run.env"
        env_file.write_text(f"{THREADS_ENV}=3\n{SEED_ENV}=7\n", encoding="utf-8")
        config = Config.from_sources(env_file)
        assert (config.threads, config.seed) == (3, 7)
        assert (config.model.seed, config.train.seed) == (7, 7)

    def test_bad_env_value(self, monkeypatch: pytest.MonkeyPatch) -> None:
        """Non-integer environment values are rejected."""
        monkeypatch.setenv(THREADS_ENV, "many")
        with pytest.raises(ValueError, match=THREADS_ENV):
            Config.from_sources()

    def test_toml_file(self, tmp_path: Path) -> None:
        """TOML blocks fill the parameter models; a block seed beats the top-level seed."""
        path = tmp_path / "prom.toml"
        path.write_text(
            "seed = 3\n[build]\nselect_ratio = 0.5\n[model]\nlambda = 0.5\n[train]\nseed = 9\n",
            encoding="utf-8",
        )
        config = Config.from_sources(config_file=path)
        assert config.build.select_ratio == 0.5
        assert config.model.lambda_ == 0.5
        assert (config.seed, config.model.seed, config.train.seed) == (3, 3, 9)

    def test_json_file(self, tmp_path: Path) -> None:
        """A .json config is read as JSON."""
        path = tmp_path / "prom.json"
        path.write_text('{"threads": 2, "metrics": {"bins": 10}}', encoding="utf-8")
        config = Config.from_sources(config_file=path)
        assert config.threads == 2
        assert config.metrics.bins == 10

    def test_overrides_win(self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> None:
        """Flag values beat the file and environment; None flags are ignored."""
        monkeypatch.setenv(THREADS_ENV, "2")
        path = tmp_path / "prom.toml"
        path.write_text("threads = 5\n[build]\nselect_ratio = 0.5\nmax_sents = 6\n", encoding="utf-8")
        config = Config.from_sources(
            config_file=path,
            overrides={"threads": None, "build": {"select_ratio": 0.3, "max_sents": None}},
        )
        assert config.threads == 5
        assert config.build.select_ratio == 0.3
        assert config.build.max_sents == 6

    def test_invalid_block(self) -> None:
        """Invalid parameters are validation errors, which are value errors."""
        with pytest.raises(ValidationError):
            Config.from_sources(overrides={"build": {"min_sents": 9, "max_sents": 8}})
        with pytest.raises(ValueError, match="divisible"):
            Config.from_sources(overrides={"model": {"model_dim": 10, "head_count": 3}})


class TestConfigFile:
    """Test config file parsing."""

    def test_unknown_keys(self, tmp_path: Path) -> None:
        """Unknown top-level keys are rejected."""
        path = tmp_path / "prom.toml"
        path.write_text("colour = 1\n", encoding="utf-8")
        with pytest.raises(ValueError, match="Unknown config keys"):
            read_config_file(path)

    def test_not_a_table(self, tmp_path: Path) -> None:
        """JSON files must hold an object."""
        path = tmp_path / "prom.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ValueError, match="table/object"):
            read_config_file(path)

    def test_malformed(self, tmp_path: Path) -> None:
        """Syntax errors name the file."""
        path = tmp_path / "prom.toml"
        path.write_text("[build\n", encoding="utf-8")
        with pytest.raises(ValueError, match="Invalid config file"):
            read_config_file(path)

    def test_missing(self, tmp_path: Path) -> None:
        """A missing file is a value error."""
        with pytest.raises(ValueError, match="Cannot read config file"):
            read_config_file(tmp_path / "absent.toml")


class TestValidate:
    """Test run-level validation."""

    def test_thread_count(self) -> None:
        """At least one worker."""
        with pytest.raises(ValueError, match="thread count"):
            Config(threads=0).validate()

    def test_inputs(self, tmp_path: Path) -> None:
        """Inputs must exist; standard input always does."""
        present = tmp_path / "in.jsonl"
        present.write_text("", encoding="utf-8")
        Config().validate([present, "-"])
        with pytest.raises(ValueError, match="Input file not found"):
            Config().validate([tmp_path / "missing.jsonl"])
