"""Reverse-mode automatic differentiation over float64 numpy arrays.

A `Tensor` records the operation that produced it. Calling `backward()` on a
scalar result walks the graph in reverse topological order and accumulates
exact gradients into every tensor created with `requires_grad=True`. Tensors
that do not depend on such a leaf keep no graph at all.
"""

from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:
    from collections.abc import Callable, Sequence

    from numpy.typing import ArrayLike, NDArray

    Array = NDArray[np.float64]

GELU_SCALE = float(np.sqrt(2.0 / np.pi))
GELU_CUBIC = 0.044715


class Tensor:
    """A node of the computation graph.

    Attributes:
        data: Value of the node
        grad: Accumulated gradient of the final scalar w.r.t. `data` (None until
            backward reaches this node)
        requires_grad: Whether gradients flow into this node
        name: Optional label, set on parameter leaves
    """

    __slots__ = ("_backward", "_parents", "data", "grad", "name", "requires_grad")
    __array_priority__ = 100

    def __init__(
        self,
        data: ArrayLike,
        parents: Sequence[Tensor] = (),
        backward: Callable[[Array], None] | None = None,
        *,
        requires_grad: bool = False,
        name: str | None = None,
    ) -> None:
        """Wrap `data` (converted to float64)."""
        self.data: Array = np.asarray(data, dtype=np.float64)
        self.grad: Array | None = None
        self.name = name
        self.requires_grad = requires_grad or any(parent.requires_grad for parent in parents)
        self._parents: tuple[Tensor, ...] = tuple(parents) if self.requires_grad else ()
        self._backward = backward if self.requires_grad else None

    def __repr__(self) -> str:
        """Short description with shape."""
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"

    @property
    def shape(self) -> tuple[int, ...]:
        """Shape of `data`."""
        return self.data.shape

    @property
    def ndim(self) -> int:
        """Rank of `data`."""
        return self.data.ndim

    def accumulate(self, grad: Array) -> None:
        """Add `grad` into this node's gradient."""
        self.grad = grad if self.grad is None else self.grad + grad

    def backward(self) -> None:
        """Back-propagate from this scalar node.

        Raises:
            ValueError: If the node is not a scalar
        """
        if self.data.size != 1:
            msg = f"backward() needs a scalar, got shape {self.shape}"
            raise ValueError(msg)
        self.grad = np.ones_like(self.data)
        for node in reversed(_topological_order(self)):
            if node._backward is not None and node.grad is not None:  # noqa: SLF001
                node._backward(node.grad)  # noqa: SLF001

    def __add__(self, other: Tensor | ArrayLike) -> Tensor:
        """Elementwise sum with broadcasting."""
        return add(self, other)

    def __radd__(self, other: ArrayLike) -> Tensor:
        """Elementwise sum with broadcasting."""
        return add(other, self)

    def __sub__(self, other: Tensor | ArrayLike) -> Tensor:
        """Elementwise difference with broadcasting."""
        return add(self, neg(other))

    def __rsub__(self, other: ArrayLike) -> Tensor:
        """Elementwise difference with broadcasting."""
        return add(other, neg(self))

    def __mul__(self, other: Tensor | ArrayLike) -> Tensor:
        """Elementwise product with broadcasting."""
        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> Tensor:
        """Elementwise product with broadcasting."""
        return mul(other, self)

    def __truediv__(self, other: Tensor | ArrayLike) -> Tensor:
        """Elementwise quotient with broadcasting."""
        return div(self, other)

    def __neg__(self) -> Tensor:
        """Negation."""
        return neg(self)

    def __matmul__(self, other: Tensor | ArrayLike) -> Tensor:
        """Matrix product over the last two axes."""
        return matmul(self, other)

    def __getitem__(self, index: Any) -> Tensor:  # noqa: ANN401
        """Basic or fancy indexing; repeated indices accumulate gradient."""
        return getitem(self, index)

    def sum(self, axis: int | None = None, *, keepdims: bool = False) -> Tensor:
        """Sum over `axis` (all axes when None)."""
        return reduce_sum(self, axis, keepdims=keepdims)

    def mean(self, axis: int | None = None, *, keepdims: bool = False) -> Tensor:
        """Mean over `axis` (all axes when None)."""
        count = self.data.size if axis is None else self.data.shape[axis]
        return reduce_sum(self, axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape: int) -> Tensor:
        """Reshape without copying the graph."""
        return reshape(self, shape)

    def transpose(self, *axes: int) -> Tensor:
        """Permute axes."""
        return transpose(self, axes)


def _topological_order(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        stack.extend((parent, False) for parent in node._parents if id(parent) not in seen)  # noqa: SLF001
    return order


def lift(value: Tensor | ArrayLike) -> Tensor:
    """Wrap a constant as a graph-free tensor."""
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(value: ArrayLike, name: str) -> Tensor:
    """Create a named leaf that collects gradients."""
    return Tensor(np.array(value, dtype=np.float64), requires_grad=True, name=name)


def unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def add(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """a + b."""
    a, b = lift(a), lift(b)

    def backward(grad: Array) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(grad, a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(grad, b.shape))

    return Tensor(a.data + b.data, (a, b), backward)


def neg(a: Tensor | ArrayLike) -> Tensor:
    """-a."""
    a = lift(a)
    return Tensor(-a.data, (a,), lambda grad: a.accumulate(-grad))


def mul(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """a * b."""
    a, b = lift(a), lift(b)

    def backward(grad: Array) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(grad * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(grad * a.data, b.shape))

    return Tensor(a.data * b.data, (a, b), backward)


def div(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """a / b."""
    a, b = lift(a), lift(b)
    out = a.data / b.data

    def backward(grad: Array) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(grad / b.data, a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(-grad * out / b.data, b.shape))

    return Tensor(out, (a, b), backward)


def matmul(a: Tensor | ArrayLike, b: Tensor | ArrayLike) -> Tensor:
    """a @ b for operands of rank >= 2."""
    a, b = lift(a), lift(b)

    def backward(grad: Array) -> None:
        if a.requires_grad:
            a.accumulate(unbroadcast(grad @ np.swapaxes(b.data, -1, -2), a.shape))
        if b.requires_grad:
            b.accumulate(unbroadcast(np.swapaxes(a.data, -1, -2) @ grad, b.shape))

    return Tensor(a.data @ b.data, (a, b), backward)


def reduce_sum(a: Tensor, axis: int | None = None, *, keepdims: bool = False) -> Tensor:
    """Sum over one axis or all of them."""

    def backward(grad: Array) -> None:
        if axis is not None and not keepdims:
            grad = np.expand_dims(grad, axis)
        a.accumulate(np.broadcast_to(grad, a.shape).copy())

    return Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    """Reshape."""
    return Tensor(a.data.reshape(shape), (a,), lambda grad: a.accumulate(grad.reshape(a.shape)))


def transpose(a: Tensor, axes: Sequence[int]) -> Tensor:
    """Permute axes."""
    inverse = np.argsort(axes)
    return Tensor(a.data.transpose(axes), (a,), lambda grad: a.accumulate(grad.transpose(inverse)))


def getitem(a: Tensor, index: Any) -> Tensor:  # noqa: ANN401
    """a[index]."""

    def backward(grad: Array) -> None:
        full = np.zeros_like(a.data)
        np.add.at(full, index, grad)
        a.accumulate(full)

    return Tensor(a.data[index], (a,), backward)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    """Concatenate along `axis`."""
    parts = [lift(tensor) for tensor in tensors]
    bounds = np.cumsum([part.shape[axis] for part in parts])[:-1]

    def backward(grad: Array) -> None:
        for part, piece in zip(parts, np.split(grad, bounds, axis=axis), strict=True):
            if part.requires_grad:
                part.accumulate(piece)

    return Tensor(np.concatenate([part.data for part in parts], axis=axis), parts, backward)


def log(a: Tensor) -> Tensor:
    """Natural logarithm."""
    return Tensor(np.log(a.data), (a,), lambda grad: a.accumulate(grad / a.data))


def stable_sigmoid(x: Array) -> Array:
    """Logistic function without overflow for large |x|."""
    z = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))


def sigmoid(a: Tensor) -> Tensor:
    """Logistic function."""
    out = stable_sigmoid(a.data)
    return Tensor(out, (a,), lambda grad: a.accumulate(grad * out * (1.0 - out)))


def softplus(a: Tensor) -> Tensor:
    """log(1 + exp(a)); its derivative is sigmoid(a)."""
    return Tensor(np.logaddexp(0.0, a.data), (a,), lambda grad: a.accumulate(grad * stable_sigmoid(a.data)))


def gelu(a: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    x = a.data
    inner = np.tanh(GELU_SCALE * (x + GELU_CUBIC * x**3))
    out = 0.5 * x * (1.0 + inner)

    def backward(grad: Array) -> None:
        slope = 0.5 * (1.0 + inner) + 0.5 * x * (1.0 - inner**2) * GELU_SCALE * (1.0 + 3.0 * GELU_CUBIC * x**2)
        a.accumulate(grad * slope)

    return Tensor(out, (a,), backward)


def softmax(a: Tensor, axis: int = -1, mask: Array | None = None) -> Tensor:
    """Softmax along `axis`; `mask` is added to the logits first (use -1e9 to exclude)."""
    logits = a.data if mask is None else a.data + mask
    shifted = np.exp(logits - logits.max(axis=axis, keepdims=True))
    out = shifted / shifted.sum(axis=axis, keepdims=True)

    def backward(grad: Array) -> None:
        a.accumulate(out * (grad - (grad * out).sum(axis=axis, keepdims=True)))

    return Tensor(out, (a,), backward)


def normalize(a: Tensor, eps: float = 1e-5) -> Tensor:
    """Zero-mean, unit-variance normalization over the last axis (layer norm without gain and bias)."""
    centered = a.data - a.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    out = centered * inv_std

    def backward(grad: Array) -> None:
        a.accumulate(
            inv_std
            * (grad - grad.mean(axis=-1, keepdims=True) - out * (grad * out).mean(axis=-1, keepdims=True))
        )

    return Tensor(out, (a,), backward)
