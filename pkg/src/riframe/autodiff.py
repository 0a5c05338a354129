"""Minimal reverse-mode automatic differentiation over dense numpy arrays.

Tensors hold up to three dimensions.  Every primitive records its inputs and
a backward rule; :func:`backward` orders the recorded graph topologically
(the tape), pushes gradients from the scalar loss to every leaf with
``requires_grad`` and then frees the graph, so a second ``backward`` on the
same loss raises.

Broadcasting is limited to adding a bias row to the last axis.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import GraphConsumed, NonScalarLoss, ShapeMismatch

MAX_DIMS = 3
LEAKY_SLOPE = 0.2

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "op", "_consumed")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype.kind != "f":
            arr = arr.astype(np.float64)
        if arr.ndim > MAX_DIMS:
            raise ShapeMismatch(f"tensors support at most {MAX_DIMS} dims, got shape {arr.shape}")
        self.data = arr
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward: Optional[Callable] = None
        self.op = "leaf"
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op}, requires_grad={self.requires_grad})"

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return hadamard(self, other)
        return scalar_mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    def __neg__(self):
        return scalar_mul(self, -1.0)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents: Sequence[Tensor], backward, op: str) -> Tensor:
    out = Tensor(data)
    if grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
    out.op = op
    return out


def _check_same(a: Tensor, b: Tensor, op: str):
    if a.shape != b.shape:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} differ")


def _reduce_bias(g, shape):
    return g.reshape(-1, g.shape[-1]).sum(axis=0).reshape(shape)


def add(a, b) -> Tensor:
    """Elementwise sum; ``b`` may be a bias of shape (C,) or (1, C)."""
    a, b = as_tensor(a), as_tensor(b)
    bias = a.shape != b.shape and b.ndim <= 2 and b.data.size == b.shape[-1] and b.shape[-1] == a.shape[-1]
    if not bias:
        _check_same(a, b, "add")

    def backward(g):
        return g, (_reduce_bias(g, b.shape) if bias else g)

    return _make(a.data + b.data, (a, b), backward, "add")


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same(a, b, "sub")
    return _make(a.data - b.data, (a, b), lambda g: (g, -g), "sub")


def scalar_mul(a, c: float) -> Tensor:
    a = as_tensor(a)
    c = float(c)
    return _make(a.data * c, (a,), lambda g: (g * c,), "scalar_mul")


def hadamard(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same(a, b, "hadamard")
    return _make(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data), "hadamard")


def matmul(a, b) -> Tensor:
    """``(n, m) @ (m, p)``, batched ``(B, n, m) @ (B, m, p)`` or ``(B, n, m) @ (m, p)``."""
    a, b = as_tensor(a), as_tensor(b)
    ok = a.ndim >= 2 and b.ndim >= 2 and a.shape[-1] == b.shape[-2]
    ok = ok and (b.ndim == 2 or (a.ndim == 3 and a.shape[0] == b.shape[0]))
    if not ok:
        raise ShapeMismatch(f"matmul: shapes {a.shape} and {b.shape} are incompatible")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2) if a.requires_grad else None
        gb = None
        if b.requires_grad:
            if b.ndim == 2 and a.ndim == 3:
                gb = a.data.reshape(-1, a.shape[-1]).T @ g.reshape(-1, g.shape[-1])
            else:
                gb = np.swapaxes(a.data, -1, -2) @ g
        return ga, gb

    return _make(a.data @ b.data, (a, b), backward, "matmul")


def transpose(a) -> Tensor:
    """Swap the last two axes."""
    a = as_tensor(a)
    if a.ndim < 2:
        raise ShapeMismatch(f"transpose needs >= 2 dims, got {a.shape}")
    return _make(np.swapaxes(a.data, -1, -2), (a,), lambda g: (np.swapaxes(g, -1, -2),), "transpose")


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    src = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(src),), "reshape")


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = a.data > 0
    return _make(a.data * mask, (a,), lambda g: (g * mask,), "relu")


def leaky_relu(a, slope: float = LEAKY_SLOPE) -> Tensor:
    a = as_tensor(a)
    if not 0.0 <= slope <= 1.0:
        raise ValueError("slope must lie in [0, 1]")
    y = np.maximum(a.data, a.data * a.dtype.type(slope))

    def backward(g):
        return (np.where(a.data > 0, g, g * slope),)

    return _make(y, (a,), backward, "leaky_relu")


def exp(a) -> Tensor:
    a = as_tensor(a)
    y = np.exp(a.data)
    return _make(y, (a,), lambda g: (g * y,), "exp")


def log(a) -> Tensor:
    a = as_tensor(a)
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def row_softmax(a) -> Tensor:
    """Softmax along the last axis."""
    a = as_tensor(a)
    z = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (s * (g - np.sum(g * s, axis=-1, keepdims=True)),)

    return _make(s, (a,), backward, "row_softmax")


def l1_normalize_rows(a, eps: float = 0.0) -> Tensor:
    """Divide every row (last axis) by its L1 norm plus ``eps``."""
    a = as_tensor(a)
    norm = np.maximum(np.abs(a.data).sum(axis=-1, keepdims=True) + eps, np.finfo(a.dtype).tiny)
    y = a.data / norm

    def backward(g):
        proj = np.sum(g * y, axis=-1, keepdims=True)
        return ((g - np.sign(a.data) * proj) / norm,)

    return _make(y, (a,), backward, "l1_normalize_rows")


def l2_normalize_rows(a, eps: float = 1e-12) -> Tensor:
    """Divide every row (last axis) by its L2 norm (plus ``eps``)."""
    a = as_tensor(a)
    norm = np.sqrt(np.sum(a.data * a.data, axis=-1, keepdims=True)) + eps
    y = a.data / norm

    def backward(g):
        # d/dx (x / (|x| + eps)) applied to g
        r = np.sqrt(np.sum(a.data * a.data, axis=-1, keepdims=True))
        proj = np.sum(g * a.data, axis=-1, keepdims=True)
        return (g / norm - a.data * proj / (norm * norm * np.maximum(r, np.finfo(a.dtype).tiny)),)

    return _make(y, (a,), backward, "l2_normalize_rows")


def layer_norm_rows(a, eps: float = 1e-5) -> Tensor:
    """Standardize every row (last axis) to zero mean and unit variance."""
    a = as_tensor(a)
    mu = a.data.mean(axis=-1, keepdims=True)
    xc = a.data - mu
    inv = 1.0 / np.sqrt(np.mean(xc * xc, axis=-1, keepdims=True) + eps)
    y = xc * inv

    def backward(g):
        gm = g.mean(axis=-1, keepdims=True)
        gy = np.mean(g * y, axis=-1, keepdims=True)
        return (inv * (g - gm - y * gy),)

    return _make(y, (a,), backward, "layer_norm_rows")


def max_over_axis(a, axis: int) -> Tensor:
    """Max reduction; the gradient goes to the first (lowest-index) argmax."""
    a = as_tensor(a)
    axis = axis % a.ndim
    idx = np.expand_dims(np.argmax(a.data, axis=axis), axis)
    y = np.take_along_axis(a.data, idx, axis=axis)

    def backward(g):
        out = np.zeros_like(a.data)
        np.put_along_axis(out, idx, np.expand_dims(g, axis), axis=axis)
        return (out,)

    return _make(np.squeeze(y, axis), (a,), backward, "max_over_axis")


def mean_over_axis(a, axis: int) -> Tensor:
    a = as_tensor(a)
    axis = axis % a.ndim
    n = a.shape[axis]
    shape = a.shape

    def backward(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape) / n,)

    return _make(a.data.mean(axis=axis), (a,), backward, "mean_over_axis")


def sum_all(a) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    return _make(np.asarray(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),), "sum_all")


def mean_all(a) -> Tensor:
    a = as_tensor(a)
    shape, n = a.shape, a.data.size
    return _make(np.asarray(a.data.mean()), (a,), lambda g: (np.broadcast_to(g / n, shape).copy(),), "mean_all")


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    nd = ts[0].ndim
    axis = axis % nd
    for t in ts[1:]:
        if t.ndim != nd or any(t.shape[i] != ts[0].shape[i] for i in range(nd) if i != axis):
            raise ShapeMismatch(f"concat: shapes {ts[0].shape} and {t.shape} are incompatible on axis {axis}")
    splits = np.cumsum([t.shape[axis] for t in ts])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return _make(np.concatenate([t.data for t in ts], axis=axis), ts, backward, "concat")


def gather_rows(a, idx) -> Tensor:
    """Rows of a 2-D tensor picked by integer ``idx`` (gradients scatter-add)."""
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeMismatch(f"gather_rows expects a 2-D tensor, got {a.shape}")
    idx = np.asarray(idx, dtype=np.int64).ravel()
    n_rows = a.shape[0]

    def backward(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    if idx.size and (idx.min() < 0 or idx.max() >= n_rows):
        raise IndexError("gather_rows index out of range")
    return _make(a.data[idx], (a,), backward, "gather_rows")


def contract_pairwise(q, emb: np.ndarray) -> Tensor:
    """``out[b, i, j] = sum_d q[b, i, d] * emb[b, i, j, d]`` with a constant ``emb``."""
    q = as_tensor(q)
    emb = np.asarray(emb, dtype=q.dtype)
    if q.ndim != 3 or emb.shape != (q.shape[0], q.shape[1], emb.shape[2], q.shape[2]):
        raise ShapeMismatch(f"contract_pairwise: shapes {q.shape} and {emb.shape} are incompatible")
    y = np.matmul(emb, q.data[..., None])[..., 0]

    def backward(g):
        return (np.matmul(g[..., None, :], emb)[..., 0, :],)

    return _make(y, (q,), backward, "contract_pairwise")


def cross_entropy_logits(logits, targets) -> Tensor:
    """Mean softmax cross-entropy of ``(B, K)`` logits against integer targets."""
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.int64).ravel()
    if logits.ndim != 2 or len(t) != logits.shape[0]:
        raise ShapeMismatch(f"cross_entropy_logits: logits {logits.shape} vs targets {t.shape}")
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(len(t))
    loss = np.mean(lse - z[rows, t])

    def backward(g):
        p = np.exp(z - lse[:, None])
        p[rows, t] -= 1.0
        return (g * p / len(t),)

    return _make(np.asarray(loss, dtype=logits.dtype), (logits,), backward, "cross_entropy_logits")


def _topological(loss: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(loss, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


class Tape:
    """Topologically ordered records of the graph below a scalar loss."""

    def __init__(self, loss: Tensor):
        self.loss = loss
        self.records = _topological(loss)

    def run(self):
        grads = {id(self.loss): np.ones_like(self.loss.data)}
        for node in reversed(self.records):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for p, gp in zip(node._parents, node._backward(g)):
                if gp is None or not p.requires_grad:
                    continue
                key = id(p)
                grads[key] = gp if key not in grads else grads[key] + gp
        self.clear()

    def clear(self):
        for node in self.records:
            if node._parents:
                node._parents = ()
                node._backward = None
                node._consumed = True
        self.records = []


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into ``leaf.grad`` for every reachable leaf."""
    if loss.data.size != 1 or loss.ndim > 1 and any(s != 1 for s in loss.shape):
        raise NonScalarLoss(f"loss must be scalar, got shape {loss.shape}")
    if loss._consumed:
        raise GraphConsumed("graph already consumed by a previous backward(); run the forward pass again")
    if not loss.requires_grad:
        raise GraphConsumed("loss does not depend on any tensor requiring gradients")
    Tape(loss).run()
