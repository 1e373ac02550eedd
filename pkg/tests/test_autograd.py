"""Tests for the reverse-mode autograd primitives."""

from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np
import pytest

from prom.promnet.autograd import (
    Tensor,
    concat,
    gelu,
    log,
    matmul,
    normalize,
    parameter,
    sigmoid,
    softmax,
    softplus,
    unbroadcast,
)

if TYPE_CHECKING:
    from collections.abc import Callable


def numeric_grad(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for index in np.ndindex(x.shape):
        original = x[index]
        x[index] = original + h
        plus = fn(x)
        x[index] = original - h
        minus = fn(x)
        x[index] = original
        grad[index] = (plus - minus) / (2 * h)
    return grad


def check(build: Callable[[Tensor], Tensor], shape: tuple[int, ...], seed: int = 0, positive: bool = False) -> None:
    """Compare backward() of a scalar-valued graph against central differences."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=shape)
    if positive:
        x = np.abs(x) + 0.5
    weights = rng.normal(size=build(Tensor(x)).shape)

    leaf = parameter(x, "x")
    (build(leaf) * weights).sum().backward()
    assert leaf.grad is not None
    expected = numeric_grad(lambda v: float((build(Tensor(v)).data * weights).sum()), x.copy())
    np.testing.assert_allclose(leaf.grad, expected, rtol=1e-5, atol=1e-7)


class TestElementwise:
    """Test gradients of elementwise and reduction ops."""

    @pytest.mark.parametrize(
        "build",
        [
            lambda t: t * t + 3.0 * t,
            lambda t: 1.0 - t / (t * t + 2.0),
            lambda t: -t,
            sigmoid,
            softplus,
            gelu,
            lambda t: t.sum(axis=0),
            lambda t: t.mean(axis=1, keepdims=True),
            lambda t: t.mean(),
            lambda t: t.reshape(6, 2).transpose(1, 0),
        ],
    )
    def test_gradients(self, build: Callable[[Tensor], Tensor]) -> None:
        """Each op agrees with central differences."""
        check(build, (3, 4))

    def test_log(self) -> None:
        """log needs positive inputs."""
        check(log, (2, 3), positive=True)

    def test_softmax(self) -> None:
        """Softmax rows, with and without a mask."""
        check(lambda t: softmax(t, axis=-1), (3, 4))
        mask = np.array([0.0, -1e9, 0.0, 0.0])
        check(lambda t: softmax(t, axis=-1, mask=mask), (3, 4), seed=1)

    def test_normalize(self) -> None:
        """Layer normalization over the last axis."""
        check(normalize, (3, 5))


class TestStructural:
    """Test matmul, indexing, concatenation and broadcasting."""

    def test_matmul_both_sides(self) -> None:
        """Gradients reach both operands, batched operands included."""
        rng = np.random.default_rng(3)
        right = rng.normal(size=(4, 2))
        check(lambda t: t @ right, (3, 4))
        left = rng.normal(size=(2, 3, 4))
        check(lambda t: matmul(left, t), (4, 5))

    def test_fancy_index_accumulates(self) -> None:
        """Repeated rows collect gradient once per use."""
        leaf = parameter(np.zeros((3, 2)), "table")
        leaf[np.array([0, 2, 0])].sum().backward()
        assert leaf.grad is not None
        np.testing.assert_array_equal(leaf.grad, [[2.0, 2.0], [0.0, 0.0], [1.0, 1.0]])

    def test_concat(self) -> None:
        """Concatenation routes each slice back to its part."""
        rng = np.random.default_rng(4)
        other = rng.normal(size=(3, 2))
        check(lambda t: concat([t, other, t * 2.0], axis=1), (3, 4))

    def test_broadcast_add(self) -> None:
        """A bias added to every row receives the summed gradient."""
        bias = parameter(np.zeros(3), "bias")
        (Tensor(np.ones((4, 3))) + bias).sum().backward()
        assert bias.grad is not None
        np.testing.assert_array_equal(bias.grad, [4.0, 4.0, 4.0])

    def test_unbroadcast(self) -> None:
        """Broadcast axes are summed back."""
        grad = np.ones((2, 3, 4))
        assert unbroadcast(grad, (3, 1)).shape == (3, 1)
        np.testing.assert_array_equal(unbroadcast(grad, (3, 1)), np.full((3, 1), 8.0))


class TestGraph:
    """Test graph bookkeeping."""

    def test_constants_keep_no_graph(self) -> None:
        """Tensors built only from constants do not require gradients."""
        out = sigmoid(Tensor(np.ones(3)) * 2.0)
        assert not out.requires_grad

    def test_shared_subexpression(self) -> None:
        """A node used twice gets both contributions."""
        leaf = parameter(np.array([3.0]), "x")
        y = leaf * 2.0
        (y * y).sum().backward()
        assert leaf.grad is not None
        np.testing.assert_allclose(leaf.grad, [24.0])

    def test_backward_needs_scalar(self) -> None:
        """Only scalars can start back-propagation."""
        with pytest.raises(ValueError, match="scalar"):
            parameter(np.ones(2), "x").backward()
