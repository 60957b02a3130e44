"""Dense-tensor reverse-mode differentiation on a define-by-run tape.

Every op builds a new :class:`Tensor` holding float64 data, links to its
parents and a closure computing parent gradients from the output gradient.
The recorded DAG is append-only by construction (parents are created before
children), so a reverse topological walk from the loss yields exact
reverse-mode gradients. All ops validate shapes up front and reject
non-finite outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NumericError, ShapeError


class Tensor:
    """Node of the recorded computation graph.

    ``parents`` and ``backward_fn`` are empty for leaves. ``is_param``
    marks trainable leaves: ``backward`` accumulates gradients for every
    node it visits, but only parameters are reported by :func:`backward`.
    """

    __slots__ = ("data", "grad", "parents", "backward_fn", "is_param", "name")

    def __init__(self, data, parents=(), backward_fn=None, is_param=False, name=""):
        arr = np.asarray(data, dtype=np.float64)
        if not np.all(np.isfinite(arr)):
            raise NumericError(f"non-finite values in tensor {name or '<anon>'}")
        self.data = arr
        self.grad = None
        self.parents = tuple(parents)
        self.backward_fn = backward_fn
        self.is_param = is_param
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = self.name or "tensor"
        return f"<{tag} shape={self.data.shape}>"


def param(data, name: str) -> Tensor:
    return Tensor(data, is_param=True, name=name)


def constant(data, name: str = "") -> Tensor:
    return Tensor(data, name=name)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _finite(arr: np.ndarray, op: str) -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{op}: non-finite output")
    return arr


def _make(op, out, parents, backward_fn):
    t = Tensor.__new__(Tensor)
    t.data = _finite(out, op)
    t.grad = None
    t.parents = tuple(parents)
    t.backward_fn = backward_fn
    t.is_param = False
    t.name = op
    return t


def _reduce_to_shape(g: np.ndarray, shape) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _broadcast_shapes(op, a, b):
    try:
        return np.broadcast_shapes(a.data.shape, b.data.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast {a.data.shape} with {b.data.shape}") from None


# ---------------------------------------------------------------------------
# elementwise binary ops

def add(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shapes("add", a, b)

    def bw(g):
        return _reduce_to_shape(g, a.data.shape), _reduce_to_shape(g, b.data.shape)

    return _make("add", a.data + b.data, (a, b), bw)


def sub(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shapes("sub", a, b)

    def bw(g):
        return _reduce_to_shape(g, a.data.shape), _reduce_to_shape(-g, b.data.shape)

    return _make("sub", a.data - b.data, (a, b), bw)


def mul(a: Tensor, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _broadcast_shapes("mul", a, b)
    ad, bd = a.data, b.data

    def bw(g):
        return _reduce_to_shape(g * bd, ad.shape), _reduce_to_shape(g * ad, bd.shape)

    return _make("mul", ad * bd, (a, b), bw)


def scalar_mul(a: Tensor, c: float) -> Tensor:
    c = float(c)

    def bw(g):
        return (g * c,)

    return _make("scalar_mul", a.data * c, (a,), bw)


# ---------------------------------------------------------------------------
# linear algebra and structure ops

def matmul(a: Tensor, b: Tensor) -> Tensor:
    ad, bd = a.data, b.data
    if ad.ndim not in (2, 3) or bd.ndim != ad.ndim:
        raise ShapeError(f"matmul: unsupported ranks {ad.shape} x {bd.shape}")
    if ad.shape[-1] != bd.shape[-2] or (ad.ndim == 3 and ad.shape[0] != bd.shape[0]):
        raise ShapeError(f"matmul: incompatible shapes {ad.shape} x {bd.shape}")

    def bw(g):
        return g @ bd.swapaxes(-1, -2), ad.swapaxes(-1, -2) @ g

    return _make("matmul", ad @ bd, (a, b), bw)


def transpose(a: Tensor, axes=None) -> Tensor:
    axes = tuple(axes) if axes is not None else tuple(reversed(range(a.data.ndim)))
    inv = tuple(int(i) for i in np.argsort(axes))

    def bw(g):
        return (np.transpose(g, inv),)

    return _make("transpose", np.transpose(a.data, axes), (a,), bw)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.data.shape

    def bw(g):
        return (g.reshape(old),)

    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {old} as {shape}") from None
    return _make("reshape", out, (a,), bw)


def concat(tensors, axis: int) -> Tensor:
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat: empty input list")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def bw(g):
        return tuple(
            np.take(g, range(offsets[i], offsets[i + 1]), axis=axis)
            for i in range(len(tensors))
        )

    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError:
        raise ShapeError(
            f"concat: incompatible shapes {[t.data.shape for t in tensors]} on axis {axis}"
        ) from None
    return _make("concat", out, tensors, bw)


def slice_(a: Tensor, key) -> Tensor:
    """Basic slicing with a tuple of ``slice`` objects (no steps, no ints)."""
    if not isinstance(key, tuple) or not all(isinstance(k, slice) for k in key):
        raise ShapeError("slice: key must be a tuple of slice objects")
    shape = a.data.shape

    def bw(g):
        full = np.zeros(shape)
        full[key] = g
        return (full,)

    return _make("slice", a.data[key].copy(), (a,), bw)


# ---------------------------------------------------------------------------
# nonlinearities

def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)

    def bw(g):
        return (g * out * (1.0 - out),)

    return _make("sigmoid", out, (a,), bw)


def tanh(a: Tensor) -> Tensor:
    out = np.tanh(a.data)

    def bw(g):
        return (g * (1.0 - out * out),)

    return _make("tanh", out, (a,), bw)


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0

    def bw(g):
        return (g * mask,)

    return _make("relu", a.data * mask, (a,), bw)


def exp(a: Tensor) -> Tensor:
    with np.errstate(over="ignore"):
        out = np.exp(a.data)

    def bw(g):
        return (g * out,)

    return _make("exp", out, (a,), bw)


def row_softmax(a: Tensor) -> Tensor:
    x = a.data
    if x.ndim < 1:
        raise ShapeError(f"row_softmax: needs at least 1-d input, got {x.shape}")
    e = np.exp(x - x.max(axis=-1, keepdims=True))
    out = e / e.sum(axis=-1, keepdims=True)

    def bw(g):
        dot = (g * out).sum(axis=-1, keepdims=True)
        return (out * (g - dot),)

    return _make("row_softmax", out, (a,), bw)


def layer_norm(a: Tensor, gain: Tensor, bias: Tensor, eps: float = 1e-8) -> Tensor:
    """Normalize the last axis to mean 0 / variance 1, then apply an affine."""
    x = a.data
    d = x.shape[-1]
    if gain.data.shape != (d,) or bias.data.shape != (d,):
        raise ShapeError(
            f"layer_norm: affine shapes {gain.data.shape}/{bias.data.shape} "
            f"do not match feature dim {d}"
        )
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = xc * inv

    def bw(g):
        dgain = _reduce_to_shape(g * xhat, gain.data.shape)
        dbias = _reduce_to_shape(g, bias.data.shape)
        dxhat = g * gain.data
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (dxhat - m1 - xhat * m2)
        return dx, dgain, dbias

    return _make("layer_norm", xhat * gain.data + bias.data, (a, gain, bias), bw)


# ---------------------------------------------------------------------------
# reductions

def mean(a: Tensor) -> Tensor:
    n = a.data.size

    def bw(g):
        return (np.full(a.data.shape, float(g) / n),)

    return _make("mean", np.asarray(a.data.mean()), (a,), bw)


def mse(pred: Tensor, target) -> Tensor:
    target = _as_tensor(target)
    if pred.data.shape != target.data.shape:
        raise ShapeError(f"mse: shapes {pred.data.shape} vs {target.data.shape}")
    diff = pred.data - target.data
    n = diff.size

    def bw(g):
        d = (2.0 * float(g) / n) * diff
        return d, -d

    return _make("mse", np.asarray((diff * diff).mean()), (pred, target), bw)


# ---------------------------------------------------------------------------
# backward pass

def _topo_order(loss: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss: Tensor) -> list[Tensor]:
    """Accumulate d(loss)/d(node) into ``grad`` for every reachable node.

    Returns the parameter leaves that received a gradient. The loss must be
    a scalar; the walk is a deterministic reverse topological order, so
    repeated runs on identical inputs are bit-identical.
    """
    if loss.data.size != 1:
        raise ContractError(f"backward: loss must be scalar, got shape {loss.data.shape}")
    order = _topo_order(loss)
    for node in order:
        node.grad = np.zeros_like(node.data)
    loss.grad = np.ones_like(loss.data)
    params: list[Tensor] = []
    for node in reversed(order):
        if node.is_param:
            params.append(node)
        if node.backward_fn is None:
            continue
        parent_grads = node.backward_fn(node.grad)
        for p, g in zip(node.parents, parent_grads):
            p.grad = p.grad + g
    return params


def grad_check(f, params, h: float = 1e-5) -> float:
    """Max relative error between reverse-mode and central-difference grads.

    ``f`` is a deterministic scalar-valued function of the parameter tensors;
    the error metric per entry is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).
    """
    loss = f()
    backward(loss)
    # a parameter the loss never touches has zero gradient
    ad = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    worst = 0.0
    for p, g_ad in zip(params, ad):
        flat = p.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = f().item()
            flat[i] = orig - h
            down = f().item()
            flat[i] = orig
            g_fd = (up - down) / (2.0 * h)
            g = g_ad.reshape(-1)[i]
            err = abs(g - g_fd) / max(1e-8, abs(g) + abs(g_fd))
            if err > worst:
                worst = err
    return worst


# ---------------------------------------------------------------------------
# Adam

@dataclass
class AdamState:
    """First/second moment buffers and hyperparameters for Adam."""

    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray], state: AdamState):
    """One Adam update with bias correction, in place on ``params``."""
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.data.shape:
            raise ShapeError(f"adam_step: grad shape {g.shape} != param {p.data.shape} ({name})")
        m = state.m.setdefault(name, np.zeros_like(p.data))
        v = state.v.setdefault(name, np.zeros_like(p.data))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data = p.data - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def clip_grad_norm(grads: dict[str, np.ndarray], max_norm: float) -> dict[str, np.ndarray]:
    """Scale all gradients so their global L2 norm is at most ``max_norm``."""
    total = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
    if total > max_norm and total > 0.0:
        scale = max_norm / total
        return {k: g * scale for k, g in grads.items()}
    return grads
