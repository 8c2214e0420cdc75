"""Dense tensor engine with reverse-mode autodiff and Adam.

Tensors wrap numpy float32 arrays (float64 allowed for gradient checks).
Every op records its parents and a backward closure; ``backward(loss)``
walks the graph in reverse topological order. Graphs are single-use:
running backward through an op node twice raises GraphReuseError.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_DTYPE = np.float32

# When true, every op result is checked for NaN/Inf. Enabled in tests.
CHECK_FINITE = False


class TensorError(Exception):
    pass


class ShapeError(TensorError):
    pass


class GraphReuseError(TensorError):
    pass


def _as_array(data, dtype=None):
    arr = np.asarray(data)
    if dtype is not None:
        return arr.astype(dtype, copy=False)
    if arr.dtype in (np.float32, np.float64):
        return arr
    return arr.astype(DEFAULT_DTYPE)


def _check_finite(arr, op):
    if CHECK_FINITE and not np.all(np.isfinite(arr)):
        raise TensorError(f"non-finite values produced by op '{op}'")


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad=False, _parents=(), _backward=None):
        self.data = _as_array(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={self.requires_grad})"

    def zero_grad(self):
        self.grad = None

    def item(self):
        return float(self.data.reshape(-1)[0])

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, _wrap(other, self.dtype))

    def __radd__(self, other):
        return add(_wrap(other, self.dtype), self)

    def __sub__(self, other):
        return sub(self, _wrap(other, self.dtype))

    def __rsub__(self, other):
        return sub(_wrap(other, self.dtype), self)

    def __mul__(self, other):
        return mul(self, _wrap(other, self.dtype))

    def __rmul__(self, other):
        return mul(_wrap(other, self.dtype), self)

    def __truediv__(self, other):
        return div(self, _wrap(other, self.dtype))

    def __neg__(self):
        return mul(self, _wrap(-1.0, self.dtype))

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return take_slice(self, key)


def _wrap(x, dtype):
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=dtype))


def _node(data, parents, backward, op):
    _check_finite(data, op)
    needs = any(p.requires_grad or p._parents for p in parents)
    if not needs:
        return Tensor(data)
    t = Tensor(data, _parents=tuple(parents), _backward=backward)
    return t


def _accum(t, g):
    if t.requires_grad or t._parents:
        if t.grad is None:
            t.grad = g.astype(t.dtype, copy=True)
        else:
            t.grad += g


def _unbroadcast(g, shape):
    """Sum gradient g down to the given (broadcast source) shape."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


# -- elementwise ops ----------------------------------------------------

def add(a, b):
    out = a.data + b.data

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(g, b.data.shape))

    return _node(out, (a, b), bw, "add")


def sub(a, b):
    out = a.data - b.data

    def bw(g):
        _accum(a, _unbroadcast(g, a.data.shape))
        _accum(b, _unbroadcast(-g, b.data.shape))

    return _node(out, (a, b), bw, "sub")


def mul(a, b):
    out = a.data * b.data

    def bw(g):
        _accum(a, _unbroadcast(g * b.data, a.data.shape))
        _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _node(out, (a, b), bw, "mul")


def div(a, b):
    out = a.data / b.data

    def bw(g):
        _accum(a, _unbroadcast(g / b.data, a.data.shape))
        _accum(b, _unbroadcast(-g * a.data / (b.data * b.data), b.data.shape))

    return _node(out, (a, b), bw, "div")


def relu(a):
    out = np.maximum(a.data, 0)

    def bw(g):
        # relu'(0) = 0 by convention
        _accum(a, g * (a.data > 0))

    return _node(out, (a,), bw, "relu")


def exp(a):
    out = np.exp(a.data)

    def bw(g):
        _accum(a, g * out)

    return _node(out, (a,), bw, "exp")


def log(a):
    out = np.log(a.data)

    def bw(g):
        _accum(a, g / a.data)

    return _node(out, (a,), bw, "log")


def tanh(a):
    out = np.tanh(a.data)

    def bw(g):
        _accum(a, g * (1.0 - out * out))

    return _node(out, (a,), bw, "tanh")


# -- matmul -------------------------------------------------------------

def matmul(a, b):
    if a.ndim < 1 or b.ndim < 1:
        raise ShapeError(f"matmul needs rank >= 1, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else -1]:
        raise ShapeError(f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    out = np.matmul(a.data, b.data)

    def bw(g):
        bt = np.swapaxes(b.data, -1, -2) if b.ndim > 1 else b.data[None, :]
        at = np.swapaxes(a.data, -1, -2) if a.ndim > 1 else a.data[None, :]
        ga = np.matmul(g, bt) if b.ndim > 1 else np.multiply.outer(g, b.data)
        gb = np.matmul(at, g)
        _accum(a, _unbroadcast(ga, a.data.shape))
        _accum(b, _unbroadcast(gb, b.data.shape))

    return _node(out, (a, b), bw, "matmul")


# -- reductions ---------------------------------------------------------

def tsum(a, axis=None, keepdims=False):
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def bw(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, np.broadcast_to(g, a.data.shape).astype(a.dtype))

    return _node(out, (a,), bw, "sum")


def tmean(a, axis=None, keepdims=False):
    n = a.data.size if axis is None else a.data.shape[axis]
    out = a.data.mean(axis=axis, keepdims=keepdims)

    def bw(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        _accum(a, (np.broadcast_to(g, a.data.shape) / n).astype(a.dtype))

    return _node(out, (a,), bw, "mean")


def tmax(a, axis):
    """Max reduction; gradient routed to the first argmax along axis."""
    out = a.data.max(axis=axis)
    idx = a.data.argmax(axis=axis)

    def bw(g):
        ga = np.zeros_like(a.data)
        np.put_along_axis(
            ga, np.expand_dims(idx, axis), np.expand_dims(np.asarray(g), axis), axis
        )
        _accum(a, ga)

    return _node(out, (a,), bw, "max")


# -- shape ops ----------------------------------------------------------

def reshape(a, shape):
    out = a.data.reshape(shape)

    def bw(g):
        _accum(a, g.reshape(a.data.shape))

    return _node(out, (a,), bw, "reshape")


def transpose(a, axes):
    out = a.data.transpose(axes)
    inv = np.argsort(axes)

    def bw(g):
        _accum(a, g.transpose(inv))

    return _node(out, (a,), bw, "transpose")


def concat(tensors, axis):
    out = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            _accum(t, piece)

    return _node(out, tuple(tensors), bw, "concat")


def take_slice(a, key):
    out = a.data[key]

    def bw(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, key, g)
        _accum(a, ga)

    return _node(out, (a,), bw, "slice")


def embedding(weight, ids):
    """Row lookup: weight[V, d] gathered by an integer id array."""
    ids = np.asarray(ids)
    if ids.size and (ids.min() < 0 or ids.max() >= weight.data.shape[0]):
        raise ShapeError(
            f"embedding id out of range [0, {weight.data.shape[0]}): "
            f"min={ids.min()}, max={ids.max()}"
        )
    out = weight.data[ids]

    def bw(g):
        gw = np.zeros_like(weight.data)
        np.add.at(gw, ids, g)
        _accum(weight, gw)

    return _node(out, (weight,), bw, "embedding")


# -- normalization / attention primitives --------------------------------

def softmax(x, axis=-1):
    if x.data.shape[axis] < 1:
        raise ShapeError(f"softmax over empty axis {axis} of shape {x.shape}")
    z = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        dot = (g * out).sum(axis=axis, keepdims=True)
        _accum(x, out * (g - dot))

    return _node(out, (x,), bw, "softmax")


def layer_norm(x, gain, bias, eps=1e-5):
    """Normalize the last axis to mean 0 / var 1, then scale and shift."""
    d = x.data.shape[-1]
    if d == 0:
        raise ShapeError("layer_norm over empty last axis")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = gain.data * xhat + bias.data

    def bw(g):
        _accum(gain, _unbroadcast(g * xhat, gain.data.shape))
        _accum(bias, _unbroadcast(g, bias.data.shape))
        dxhat = g * gain.data
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        _accum(x, (inv * (dxhat - m1 - xhat * m2)).astype(x.dtype))

    return _node(out, (x, gain, bias), bw, "layer_norm")


def dropout(x, p, rng, train):
    """Inverted dropout driven by an explicit numpy Generator."""
    if not train or p <= 0.0:
        return x
    keep = (rng.random(x.data.shape) >= p).astype(x.dtype) / (1.0 - p)
    out = x.data * keep

    def bw(g):
        _accum(x, g * keep)

    return _node(out, (x,), bw, "dropout")


def cross_entropy_logits(logits, targets, mask=None, smoothing=0.0):
    """Summed token cross-entropy over logits[N, V] with optional label smoothing.

    mask[N] weights each position (0 excludes padding). Returns a scalar
    tensor with the summed loss; divide by the mask sum for the mean.
    """
    n, v = logits.data.shape
    targets = np.asarray(targets).reshape(-1)
    if targets.shape[0] != n:
        raise ShapeError(f"targets length {targets.shape[0]} != logits rows {n}")
    m = np.ones(n, dtype=logits.dtype) if mask is None else np.asarray(mask, dtype=logits.dtype).reshape(-1)
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=-1))
    logp = z - lse[:, None]
    nll = -logp[np.arange(n), targets]
    if smoothing > 0.0:
        uniform = -logp.mean(axis=-1)
        per_tok = (1.0 - smoothing) * nll + smoothing * uniform
    else:
        per_tok = nll
    out = np.asarray((per_tok * m).sum(), dtype=logits.dtype)

    def bw(g):
        p = np.exp(logp)
        q = np.full((n, v), smoothing / v, dtype=logits.dtype)
        q[np.arange(n), targets] += 1.0 - smoothing
        _accum(logits, (g * m[:, None] * (p - q)).astype(logits.dtype))

    return _node(out, (logits,), bw, "cross_entropy")


# -- backward -----------------------------------------------------------

def backward(loss):
    """Populate .grad for every tensor reachable from the scalar loss."""
    if loss.size != 1:
        raise TensorError(f"backward needs a scalar loss, got shape {loss.shape}")
    topo = []
    seen = set()
    stack = [(loss, False)]
    while stack:
        t, done = stack.pop()
        if done:
            topo.append(t)
            continue
        if id(t) in seen:
            continue
        seen.add(id(t))
        if t._parents:
            if t._consumed:
                raise GraphReuseError("graph already consumed by a previous backward call")
            stack.append((t, True))
            for p in t._parents:
                stack.append((p, False))
    loss.grad = np.ones_like(loss.data)
    for t in reversed(topo):
        if t._backward is not None and t.grad is not None:
            t._backward(t.grad)
            t._consumed = True
    return {id(t): t.grad for t in topo}


# -- Adam ---------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 2e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state):
    """Apply one bias-corrected Adam update in place.

    params: dict name -> Tensor, grads: dict name -> ndarray.
    """
    if state.lr <= 0:
        raise ValueError(f"learning rate must be positive, got {state.lr}")
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise TensorError(f"non-finite gradient for parameter '{name}'")
        if name not in state.m:
            state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        m = state.m[name]
        v = state.v[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        mhat = m / (1.0 - state.beta1**t)
        vhat = v / (1.0 - state.beta2**t)
        p.data -= (state.lr * mhat / (np.sqrt(vhat) + state.eps)).astype(p.dtype)


def clip_grads(grads, max_norm):
    """Scale the gradient dict in place so its global norm is <= max_norm."""
    total = 0.0
    for g in grads.values():
        total += float((g.astype(np.float64) ** 2).sum())
    norm = total**0.5
    if norm > max_norm > 0:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm
