"""Minimal dense-tensor reverse-mode autodiff on float64 numpy arrays.

The graph is held implicitly: every op records its parent tensors and a
closure that pushes the output gradient back to them. `backward` walks the
graph in reverse topological order, accumulating gradients additively.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidProbability, NonScalarLoss, ShapeMismatch


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def backward(self):
        backward(self)

    # convenience operators
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(_as_tensor(other), -1.0))

    def __neg__(self):
        return scale(self, -1.0)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcasted gradient back down to the original shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, (g, s) in enumerate(zip(grad.shape, shape)):
        if s == 1 and g != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data, requires_grad=any(p.requires_grad for p in parents))
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _accumulate(t: Tensor, grad: np.ndarray, fresh: bool = False):
    # `fresh` promises the caller just allocated `grad` and holds no other
    # reference, so it is safe to adopt without a defensive copy
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = grad if fresh else np.array(grad, dtype=np.float64)
    else:
        t.grad += grad


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data + b.data

    def push(g):
        if a.requires_grad:
            ga = _unbroadcast(g, a.data.shape)
            _accumulate(a, ga, fresh=ga is not g)
        if b.requires_grad:
            gb = _unbroadcast(g, b.data.shape)
            _accumulate(b, gb, fresh=gb is not g)

    return _make(out_data, (a, b), push)


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    out_data = a.data * b.data

    def push(g):
        if a.requires_grad:
            _accumulate(a, _unbroadcast(g * b.data, a.data.shape), fresh=True)
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g * a.data, b.data.shape), fresh=True)

    return _make(out_data, (a, b), push)


def scale(a, c: float) -> Tensor:
    a = _as_tensor(a)
    c = float(c)

    def push(g):
        _accumulate(a, g * c, fresh=True)

    return _make(a.data * c, (a,), push)


def power(a, exponent: float) -> Tensor:
    a = _as_tensor(a)
    e = float(exponent)
    out_data = np.power(a.data, e)

    def push(g):
        _accumulate(a, g * e * np.power(a.data, e - 1.0), fresh=True)

    return _make(out_data, (a,), push)


def matmul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    if a.data.ndim < 2 or b.data.ndim < 2:
        raise ShapeMismatch("matmul operands must be at least 2-D")
    if a.data.shape[-1] != b.data.shape[-2]:
        raise ShapeMismatch(f"matmul inner dims differ: {a.data.shape} @ {b.data.shape}")
    if a.data.ndim > 2 and b.data.ndim == 2:
        # collapse the batch axes into one GEMM instead of numpy's per-slice loop
        flat = a.data.reshape(-1, a.data.shape[-1])
        out_data = (flat @ b.data).reshape(*a.data.shape[:-1], b.data.shape[-1])

        def push(g):
            g2 = g.reshape(-1, g.shape[-1])
            if a.requires_grad:
                _accumulate(a, (g2 @ b.data.T).reshape(a.data.shape), fresh=True)
            if b.requires_grad:
                _accumulate(b, flat.T @ g2, fresh=True)

        return _make(out_data, (a, b), push)
    out_data = np.matmul(a.data, b.data)

    def push(g):
        if a.requires_grad:
            ga = _unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.data.shape)
            _accumulate(a, ga, fresh=True)
        if b.requires_grad:
            gb = _unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.data.shape)
            _accumulate(b, gb, fresh=True)

    return _make(out_data, (a, b), push)


def linear(a, w, b) -> Tensor:
    """Fused a @ w + b over the last axis; one graph node instead of two."""
    a, w, b = _as_tensor(a), _as_tensor(w), _as_tensor(b)
    if a.data.shape[-1] != w.data.shape[0] or w.data.ndim != 2:
        raise ShapeMismatch(f"linear shapes: {a.data.shape} @ {w.data.shape}")
    flat = a.data.reshape(-1, a.data.shape[-1])
    out_data = (flat @ w.data + b.data).reshape(*a.data.shape[:-1], w.data.shape[1])

    def push(g):
        g2 = g.reshape(-1, g.shape[-1])
        if a.requires_grad:
            _accumulate(a, (g2 @ w.data.T).reshape(a.data.shape), fresh=True)
        if w.requires_grad:
            _accumulate(w, flat.T @ g2, fresh=True)
        if b.requires_grad:
            _accumulate(b, _unbroadcast(g2.sum(axis=0), b.data.shape), fresh=True)

    return _make(out_data, (a, w, b), push)


def transpose(a, axes=None) -> Tensor:
    """Permute axes; default swaps the last two."""
    a = _as_tensor(a)
    if axes is None:
        axes = list(range(a.data.ndim))
        axes[-1], axes[-2] = axes[-2], axes[-1]
    axes = tuple(axes)
    inverse = tuple(np.argsort(axes))

    def push(g):
        _accumulate(a, np.transpose(g, inverse))

    return _make(np.transpose(a.data, axes), (a,), push)


def reshape(a, shape) -> Tensor:
    a = _as_tensor(a)
    shape = tuple(shape)

    def push(g):
        _accumulate(a, g.reshape(a.data.shape))

    return _make(a.data.reshape(shape), (a,), push)


def relu(a) -> Tensor:
    a = _as_tensor(a)
    mask = a.data > 0

    def push(g):
        _accumulate(a, g * mask, fresh=True)

    return _make(a.data * mask, (a,), push)


def softmax_rows(a) -> Tensor:
    """Numerically stable softmax along the last axis."""
    a = _as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def push(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        _accumulate(a, y * (g - dot), fresh=True)

    return _make(y, (a,), push)


def mean_over_axis(a, axis: int, keepdims: bool = False) -> Tensor:
    a = _as_tensor(a)
    size = a.data.shape[axis]
    out_data = a.data.mean(axis=axis, keepdims=keepdims)

    def push(g):
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accumulate(a, np.broadcast_to(g / size, a.data.shape).copy(), fresh=True)

    return _make(out_data, (a,), push)


def sum_all(a) -> Tensor:
    a = _as_tensor(a)

    def push(g):
        _accumulate(a, np.broadcast_to(g, a.data.shape).copy(), fresh=True)

    return _make(a.data.sum(), (a,), push)


def dropout(a, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Zero each element with probability p in train mode, scale survivors by 1/(1-p)."""
    a = _as_tensor(a)
    if not 0.0 <= p < 1.0:
        raise InvalidProbability(f"dropout rate {p} outside [0, 1)")
    if not train or p == 0.0:
        def push_identity(g):
            _accumulate(a, g)

        return _make(a.data.copy(), (a,), push_identity)
    if rng is None:
        rng = np.random.default_rng()
    mask = (rng.random(a.data.shape) >= p) / (1.0 - p)

    def push(g):
        _accumulate(a, g * mask, fresh=True)

    return _make(a.data * mask, (a,), push)


def layer_norm(a, gain, bias, eps: float = 1e-5) -> Tensor:
    """Normalize over the last axis, then apply a learned affine map."""
    a, gain, bias = _as_tensor(a), _as_tensor(gain), _as_tensor(bias)
    mu = a.data.mean(axis=-1, keepdims=True)
    centered = a.data - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    norm = centered * inv
    out_data = norm * gain.data + bias.data

    def push(g):
        gy = g * gain.data
        d = inv * (
            gy
            - gy.mean(axis=-1, keepdims=True)
            - norm * (gy * norm).mean(axis=-1, keepdims=True)
        )
        _accumulate(a, d, fresh=True)
        _accumulate(gain, _unbroadcast(g * norm, gain.data.shape), fresh=True)
        gb = _unbroadcast(g, bias.data.shape)
        _accumulate(bias, gb, fresh=gb is not g)

    return _make(out_data, (a, gain, bias), push)


def cross_entropy_logits(logits, targets) -> Tensor:
    """Mean over the batch of -log softmax(logits)[target], log-sum-exp stabilized."""
    logits = _as_tensor(logits)
    t = np.asarray(targets, dtype=int)
    if logits.data.ndim != 2 or t.ndim != 1 or t.shape[0] != logits.data.shape[0]:
        raise ShapeMismatch("cross_entropy expects (b, C) logits and (b,) targets")
    z = logits.data
    zmax = z.max(axis=-1, keepdims=True)
    lse = zmax[:, 0] + np.log(np.exp(z - zmax).sum(axis=-1))
    picked = z[np.arange(t.size), t]
    loss = float(np.mean(lse - picked))
    probs = np.exp(z - zmax)
    probs /= probs.sum(axis=-1, keepdims=True)

    def push(g):
        d = probs.copy()
        d[np.arange(t.size), t] -= 1.0
        _accumulate(logits, g * d / t.size, fresh=True)

    return _make(loss, (logits,), push)


def backward(loss: Tensor) -> None:
    """Reverse-topological gradient sweep seeded with d(loss)/d(loss) = 1."""
    if loss.data.size != 1:
        raise NonScalarLoss(f"loss has shape {loss.data.shape}")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(loss, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for node in reversed(order):
        if node._backward is not None:
            node._backward(node.grad)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]

    @classmethod
    def init(cls, params) -> "AdamState":
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    t: int,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 1e-5,
) -> None:
    """In-place bias-corrected Adam update with coupled L2 weight decay."""
    if t < 1:
        raise ShapeMismatch("step counter t must be >= 1")
    if not (len(params) == len(grads) == len(state.m) == len(state.v)):
        raise ShapeMismatch("params, grads and state lengths differ")
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ShapeMismatch(f"param {p.shape} vs grad {g.shape}")
        g = g + weight_decay * p
        m[:] = beta1 * m + (1.0 - beta1) * g
        v[:] = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        p -= lr * m_hat / (np.sqrt(v_hat) + eps)
