"""Tests for greedy and beam decoding."""

from __future__ import annotations

from types import SimpleNamespace

import numpy as np
import pytest

from prom.models import ModelConfig
from prom.promnet import (
    BOS,
    EOS,
    PAD,
    PromNet,
    beam_decode,
    evaluate_copying,
    greedy_decode,
    init_model,
    sequence_score,
)
from prom.promnet.decoding import Hypothesis, decode

CFG = ModelConfig(
    vocab_size=23,
    model_dim=8,
    head_count=2,
    feedforward_dim=16,
    max_src_len=7,
    max_tgt_len=6,
)


@pytest.fixture
def net() -> PromNet:
    rng = np.random.default_rng(11)
    params = {name: array + rng.normal(0.0, 0.5, size=array.shape) for name, array in init_model(CFG).items()}
    return PromNet(CFG, params)


def random_sources(count: int, seed: int = 0) -> list[list[int]]:
    rng = np.random.default_rng(seed)
    return [rng.integers(3, 23, size=int(rng.integers(1, 8))).tolist() for _ in range(count)]


A, B = 3, 4

# next-token distributions over (PAD, BOS, EOS, A, B), keyed by the generated prefix
SCRIPT: dict[tuple[int, ...], tuple[float, ...]] = {
    (): (0.0, 0.0, 0.0, 0.6, 0.4),
    (A,): (0.0, 0.0, 0.4, 0.3, 0.3),
    (B,): (0.0, 0.0, 0.998, 0.001, 0.001),
}
UNIFORM = (0.0, 0.0, 1 / 3, 1 / 3, 1 / 3)


class ScriptedNet:
    """Stand-in model whose next-token distribution depends on the prefix only."""

    config = SimpleNamespace(max_tgt_len=4)

    def encode(self, _src: object) -> None:
        return None

    def indicator(self, _enc: object) -> None:
        return None

    def decode_step(self, _enc: object, _indicator: object, prefix: tuple[int, ...]) -> SimpleNamespace:
        return SimpleNamespace(p_final=np.array([SCRIPT.get(tuple(prefix[1:]), UNIFORM)]))


def test_hypothesis_properties() -> None:
    """Output drops EOS and the score is normalized by length."""
    hypothesis = Hypothesis().extend(7, -1.0).extend(EOS, -2.0)
    assert hypothesis.finished
    assert hypothesis.output == (7,)
    assert hypothesis.score == pytest.approx(-1.5)
    assert Hypothesis().score == 0.0


class TestGreedy:
    """Test greedy decoding."""

    def test_length_limit(self, net: PromNet) -> None:
        """Decoding stops at max_len, capped by the model limit."""
        for src in random_sources(10):
            assert len(greedy_decode(net, src, max_len=2).tokens) <= 2
            assert len(greedy_decode(net, src, max_len=100).tokens) <= CFG.max_tgt_len

    def test_never_emits_pad_or_bos(self, net: PromNet) -> None:
        """Padding and start symbols are never produced."""
        for src in random_sources(10, seed=1):
            tokens = beam_decode(net, src, 3).tokens
            assert PAD not in tokens
            assert BOS not in tokens

    def test_score_matches_teacher_forcing(self, net: PromNet) -> None:
        """The incremental score equals the teacher-forced one."""
        for src in random_sources(10, seed=2):
            hypothesis = greedy_decode(net, src)
            assert sequence_score(net, src, hypothesis.tokens) == pytest.approx(hypothesis.score, abs=1e-9)
        assert sequence_score(net, [4], ()) == 0.0


class TestBeam:
    """Test beam search."""

    def test_beam_one_is_greedy(self, net: PromNet) -> None:
        """A beam of one reproduces greedy decoding."""
        for src in random_sources(10, seed=3):
            assert beam_decode(net, src, 1) == greedy_decode(net, src)

    def test_beam_dominates_greedy(self, net: PromNet) -> None:
        """Over two steps every kept hypothesis has the greedy length, so the beam scores at least as well."""
        for src in random_sources(20, seed=4):
            beam = beam_decode(net, src, 4, max_len=2)
            greedy = greedy_decode(net, src, max_len=2)
            assert beam.score >= greedy.score - 1e-12
            assert sequence_score(net, src, beam.tokens) == pytest.approx(beam.score, abs=1e-9)

    def test_beam_beats_greedy(self) -> None:
        """The beam recovers a path whose first step greedy decoding rejects."""
        net = ScriptedNet()
        greedy = greedy_decode(net, [3])  # type: ignore[arg-type]
        beam = beam_decode(net, [3], 2)  # type: ignore[arg-type]
        assert greedy.tokens == (A, EOS)
        assert beam.tokens == (B, EOS)
        assert beam.score > greedy.score
        assert beam.score == pytest.approx((np.log(0.4) + np.log(0.998)) / 2)
        assert greedy.score == pytest.approx((np.log(0.6) + np.log(0.4)) / 2)
        assert beam_decode(net, [3], 1) == greedy  # type: ignore[arg-type]

    def test_deterministic(self, net: PromNet) -> None:
        """Repeated decodes agree."""
        src = [4, 9, 9, 12]
        assert beam_decode(net, src, 4) == beam_decode(net, src, 4)

    def test_concentrated_model(self) -> None:
        """When one token dominates every step, the beam width does not matter."""
        params = init_model(CFG)
        params["lm.b"][EOS] = 50.0
        params["gate.w"][:] = 0.0
        params["gate.b"][:] = 50.0
        net = PromNet(CFG, params)
        outputs = {decode(net, [5, 6, 7], beam_size) for beam_size in (1, 2, 3, 4)}
        assert outputs == {()}

    def test_bad_beam_size(self, net: PromNet) -> None:
        """The beam needs at least one hypothesis."""
        with pytest.raises(ValueError, match="beam_size"):
            beam_decode(net, [4], 0)


def test_evaluate_copying(net: PromNet) -> None:
    """Copy scores are averaged into a valid PRF."""
    score = evaluate_copying(net, [([4, 5, 6], [4, 5]), ([7, 8], [7, 8, 9])], n=2)
    assert 0.0 <= score.precision <= 1.0
    assert 0.0 <= score.f1 <= 1.0
