"""A small reverse-mode differentiation engine over dense float64 arrays.

Operations record themselves on the innermost active :class:`Tape`; outside a
tape they only compute values. ``Tape.backward`` walks the records in reverse
order, which is a valid topological order because every record is appended
after its inputs exist.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

_TAPES: list = []


class Tensor:
    __slots__ = ("data", "requires_grad", "grad", "name")

    def __init__(self, data, requires_grad: bool = False, name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def zero_grad(self) -> None:
        self.grad = None

    def numpy(self) -> np.ndarray:
        return self.data

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape}, requires_grad={self.requires_grad})"


class Tape:
    """Records primitive applications for one backward pass."""

    def __init__(self):
        self.records: list = []

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, *exc) -> None:
        _TAPES.remove(self)

    def backward(self, loss: Tensor) -> None:
        """Accumulate ``d loss / d x`` into ``x.grad`` for every leaf that requires it."""
        if loss.data.size != 1:
            raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
        grads = {id(loss): np.ones_like(loss.data)}
        for out, inputs, backward in reversed(self.records):
            g = grads.pop(id(out), None)
            if g is None:
                continue
            in_grads = backward(g)
            for x, gx in zip(inputs, in_grads):
                if gx is None or not x.requires_grad:
                    continue
                if id(x) in grads:
                    grads[id(x)] = grads[id(x)] + gx
                else:
                    grads[id(x)] = gx
        # whatever is left belongs to leaves
        for out, inputs, _ in self.records:
            for x in inputs:
                g = grads.pop(id(x), None)
                if g is not None:
                    x.grad = g if x.grad is None else x.grad + g
        g = grads.pop(id(loss), None)
        if g is not None and loss.requires_grad:
            loss.grad = g if loss.grad is None else loss.grad + g


def _record(out_data, inputs: Sequence[Tensor], backward: Callable) -> Tensor:
    needs = any(x.requires_grad for x in inputs)
    out = Tensor(out_data, requires_grad=needs)
    if needs and _TAPES:
        _TAPES[-1].records.append((out, tuple(inputs), backward))
    return out


def _check_same(a: Tensor, b: Tensor, op: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def spmm(adj, x: Tensor) -> Tensor:
    """Sparse adjacency times dense features. ``adj`` may be a NormalizedAdjacency or scipy matrix."""
    x = as_tensor(x)
    mat = getattr(adj, "matrix", adj)
    if mat.shape[1] != x.shape[0]:
        raise ValueError(f"spmm: shape mismatch {mat.shape} vs {x.shape}")
    at = adj.T if hasattr(adj, "kind") else mat.T.tocsr()
    return _record(mat @ x.data, (x,), lambda g: (at @ g,))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.shape} vs {b.shape}")
    return _record(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _check_same(a, b, "add")
    return _record(a.data + b.data, (a, b), lambda g: (g, g))


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """``x + b`` with the vector ``b`` added to every row."""
    x, b = as_tensor(x), as_tensor(b)
    if x.data.ndim != 2 or b.shape != (x.shape[1],):
        raise ValueError(f"add_bias: shape mismatch {x.shape} vs {b.shape}")
    return _record(x.data + b.data, (x, b), lambda g: (g, g.sum(axis=0)))


def scale(x: Tensor, alpha: float) -> Tensor:
    x = as_tensor(x)
    alpha = float(alpha)
    return _record(alpha * x.data, (x,), lambda g: (alpha * g,))


def relu(x: Tensor) -> Tensor:
    x = as_tensor(x)
    pos = x.data > 0
    return _record(np.where(pos, x.data, 0.0), (x,), lambda g: (g * pos,))


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None, train: bool = True) -> Tensor:
    """Inverted dropout; the identity in eval mode or at rate 0."""
    x = as_tensor(x)
    if not train or rate <= 0.0:
        return x
    if rate >= 1.0:
        return _record(np.zeros_like(x.data), (x,), lambda g: (np.zeros_like(g),))
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return _record(x.data * keep, (x,), lambda g: (g * keep,))


def sparse_dropout(x, rate: float, rng: np.random.Generator | None, train: bool = True):
    """Inverted dropout on the stored values of a constant scipy sparse matrix."""
    if not train or rate <= 0.0:
        return x
    x = x.tocsr(copy=True)
    keep = rng.random(x.nnz) >= rate
    x.data = x.data * keep / (1.0 - rate)
    return x


def concat(xs: Sequence[Tensor], axis: int = 1) -> Tensor:
    xs = [as_tensor(x) for x in xs]
    other = [i for i in range(xs[0].data.ndim) if i != axis % xs[0].data.ndim]
    for x in xs[1:]:
        if [x.shape[i] for i in other] != [xs[0].shape[i] for i in other]:
            raise ValueError(f"concat: shape mismatch {xs[0].shape} vs {x.shape}")
    splits = np.cumsum([x.shape[axis] for x in xs])[:-1]
    return _record(
        np.concatenate([x.data for x in xs], axis=axis),
        tuple(xs),
        lambda g: tuple(np.split(g, splits, axis=axis)),
    )


class BatchNormState:
    """Running statistics for :func:`batch_norm` in eval mode."""

    def __init__(self, dim: int, momentum: float = 0.1):
        self.mean = np.zeros(dim)
        self.var = np.ones(dim)
        self.momentum = momentum


def batch_norm(x: Tensor, gamma: Tensor, beta: Tensor, state: BatchNormState | None = None,
               train: bool = True, eps: float = 1e-5) -> Tensor:
    """Per-feature normalization over nodes with learnable scale and shift."""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    if gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ValueError(f"batch_norm: shape mismatch {x.shape} vs {gamma.shape}/{beta.shape}")
    n = x.shape[0]
    if train or state is None:
        mu = x.data.mean(axis=0)
        var = x.data.var(axis=0)
        if state is not None and train:
            m = state.momentum
            state.mean = (1 - m) * state.mean + m * mu
            state.var = (1 - m) * state.var + m * var * n / max(n - 1, 1)
    else:
        mu, var = state.mean, state.var
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data + beta.data
    batch_stats = train or state is None

    def backward(g):
        dgamma = (g * xhat).sum(axis=0)
        dbeta = g.sum(axis=0)
        gx = g * gamma.data
        if batch_stats:
            dx = inv * (gx - gx.mean(axis=0) - xhat * (gx * xhat).mean(axis=0))
        else:
            dx = gx * inv
        return dx, dgamma, dbeta

    return _record(out, (x, gamma, beta), backward)


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray, mask: np.ndarray | None = None) -> Tensor:
    """Mean negative log-likelihood over the masked rows."""
    logits = as_tensor(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"softmax_cross_entropy: shape mismatch {logits.shape} vs labels {labels.shape}")
    idx = np.arange(n) if mask is None else np.flatnonzero(np.asarray(mask, dtype=bool))
    if idx.size == 0:
        raise ValueError("softmax_cross_entropy: empty mask")
    z = logits.data[idx]
    z = z - z.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    y = labels[idx]
    loss = float(np.mean(logsum - z[np.arange(idx.size), y]))

    def backward(g):
        p = np.exp(z - logsum[:, None])
        p[np.arange(idx.size), y] -= 1.0
        out = np.zeros_like(logits.data)
        out[idx] = p * (g / idx.size)
        return (out,)

    return _record(np.array(loss), (logits,), backward)


def sum_squares(xs: Sequence[Tensor], coeff: float = 0.5) -> Tensor:
    """``coeff * sum |x|^2`` over the given tensors."""
    xs = [as_tensor(x) for x in xs]
    val = coeff * sum(float(np.sum(x.data * x.data)) for x in xs)
    return _record(np.array(val), tuple(xs), lambda g: tuple(2.0 * coeff * g * x.data for x in xs))


def add_scalars(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _record(a.data + b.data, (a, b), lambda g: (g, g))


def grad_check(f: Callable[..., Tensor], inputs: Sequence[Tensor], eps: float = 1e-4,
               atol: float = 1e-8, scale_floor: float = 1e-3) -> float:
    """Worst per-coordinate relative error between tape gradients and central differences.

    ``f`` must be a deterministic function of ``inputs`` returning a scalar
    tensor. The error of a coordinate is ``|a - n| / max(|a|, |n|, floor)``
    with ``floor = max(atol, scale_floor * G)`` and ``G`` the largest gradient
    magnitude over all inputs, so coordinates far below the gradient scale
    are judged against that scale instead of their own size.
    """
    inputs = list(inputs)
    for x in inputs:
        x.requires_grad = True
        x.grad = None
    with Tape() as tape:
        out = f(*inputs)
    tape.backward(out)
    analytic = []
    numeric = []
    for x in inputs:
        analytic.append(np.zeros_like(x.data) if x.grad is None else x.grad.copy())
        num = np.zeros_like(x.data)
        flat = x.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            fp = f(*inputs).data.item()
            flat[i] = orig - eps
            fm = f(*inputs).data.item()
            flat[i] = orig
            num.reshape(-1)[i] = (fp - fm) / (2 * eps)
        numeric.append(num)
    a = np.concatenate([g.reshape(-1) for g in analytic])
    n = np.concatenate([g.reshape(-1) for g in numeric])
    if a.size == 0:
        return 0.0
    floor = max(atol, scale_floor * float(max(np.abs(a).max(), np.abs(n).max())))
    return float(np.max(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)))


def glorot_uniform(fan_in: int, fan_out: int, rng: np.random.Generator) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, size=(fan_in, fan_out))


class AdamState:
    def __init__(self, params: Sequence[Tensor]):
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in params]
        self.v = [np.zeros_like(p.data) for p in params]


def adam_step(params: Sequence[Tensor], grads: Sequence, state: AdamState, lr: float,
              l2: float = 0.0, decay_mask: Sequence[bool] | None = None,
              betas: tuple = (0.9, 0.999), eps: float = 1e-8) -> None:
    """One in-place Adam update.

    The L2 term ``l2 * |w|^2 / 2`` is part of the loss, so its gradient
    ``l2 * w`` is added before the moment updates. ``decay_mask`` picks the
    parameters it applies to (all by default).
    """
    b1, b2 = betas
    state.t += 1
    t = state.t
    for i, (p, g) in enumerate(zip(params, grads)):
        g = np.zeros_like(p.data) if g is None else g
        if l2 and (decay_mask is None or decay_mask[i]):
            g = g + l2 * p.data
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * g * g
        mhat = state.m[i] / (1 - b1 ** t)
        vhat = state.v[i] / (1 - b2 ** t)
        p.data = p.data - lr * mhat / (np.sqrt(vhat) + eps)
