"""A small reverse-mode autodiff core over float64 numpy arrays.

Every op builds a node holding its value, its parents and a closure that maps
the output cotangent to one cotangent per parent. There is no broadcasting:
operands must agree in shape exactly, otherwise ``ShapeMismatch`` is raised.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ddigraph import kernels
from ddigraph.errors import AllMasked, NonFiniteError, ShapeMismatch


class Tensor:
    __slots__ = ("value", "parents", "backward_fn", "name")

    def __init__(self, value, parents=(), backward_fn=None, name=""):
        value = np.asarray(value, dtype=np.float64)
        if not np.isfinite(value).all():
            raise NonFiniteError(f"non-finite value produced by {name or 'op'}")
        self.value = value
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.shape}, name={self.name!r})"

    def __add__(self, other):
        return add(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __matmul__(self, other):
        return matmul(self, other)

    def item(self) -> float:
        if self.value.size != 1:
            raise ShapeMismatch(f"item() on tensor of shape {self.shape}")
        return float(self.value.reshape(()))


class Parameter(Tensor):
    """A trainable leaf. ``grad`` is written by :func:`backward`."""

    __slots__ = ("grad",)

    def __init__(self, value, name=""):
        super().__init__(np.array(value, dtype=np.float64, copy=True), name=name)
        self.grad = np.zeros_like(self.value)


def constant(value, name="") -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value, name=name)


def _same_shape(a, b, op):
    if a.shape != b.shape:
        raise ShapeMismatch(f"{op}: shapes {a.shape} and {b.shape} differ")


# ---------------------------------------------------------------- core ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.ndim != 2 or b.value.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"matmul: {a.shape} @ {b.shape}")
    av, bv = a.value, b.value
    return Tensor(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g), "matmul")


def add(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "add")
    return Tensor(a.value + b.value, (a, b), lambda g: (g, g), "add")


def mul(a: Tensor, b: Tensor) -> Tensor:
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return Tensor(av * bv, (a, b), lambda g: (g * bv, g * av), "mul")


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return Tensor(a.value * c, (a,), lambda g: (g * c,), "scale")


def relu(x: Tensor) -> Tensor:
    live = x.value > 0
    return Tensor(np.where(live, x.value, 0.0), (x,), lambda g: (g * live,), "relu")


def tanh(x: Tensor) -> Tensor:
    y = np.tanh(x.value)
    return Tensor(y, (x,), lambda g: (g * (1.0 - y * y),), "tanh")


def sigmoid(x: Tensor) -> Tensor:
    v = x.value
    # split by sign so exp never overflows
    e = np.exp(-np.abs(v))
    y = np.where(v >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return Tensor(y, (x,), lambda g: (g * y * (1.0 - y),), "sigmoid")


_ACTIVATIONS = {"relu": relu, "tanh": tanh, "sigmoid": sigmoid}


def activation(kind: str, x: Tensor) -> Tensor:
    try:
        return _ACTIVATIONS[kind](x)
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}") from None


def masked_softmax(logits: Tensor, mask) -> Tensor:
    """Softmax over entries with ``mask == 1``; masked outputs are exactly 0."""
    mask = np.asarray(mask, dtype=np.float64)
    if logits.value.ndim != 1 or mask.shape != logits.shape:
        raise ShapeMismatch(f"masked_softmax: logits {logits.shape}, mask {mask.shape}")
    live = mask > 0
    if not live.any():
        raise AllMasked("masked_softmax needs at least one live entry")
    z = logits.value[live]
    e = np.exp(z - z.max())
    out = np.zeros_like(logits.value)
    out[live] = e / e.sum()

    def back(g):
        return (out * (g - np.dot(g, out)),)

    return Tensor(out, (logits,), back, "masked_softmax")


def sum(a: Tensor, axis=None) -> Tensor:  # noqa: A001 - mirrors numpy naming
    shape = a.shape
    if axis is None:
        return Tensor(a.value.sum(), (a,), lambda g: (np.full(shape, float(g)),), "sum")
    out = a.value.sum(axis=axis)

    def back(g):
        return (np.broadcast_to(np.expand_dims(g, axis), shape).copy(),)

    return Tensor(out, (a,), back, "sum")


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = tuple(tensors)
    sizes = [t.shape[axis] for t in tensors]
    for t in tensors[1:]:
        s0 = list(tensors[0].shape)
        s1 = list(t.shape)
        s0[axis] = s1[axis] = 0
        if s0 != s1:
            raise ShapeMismatch(f"concat: {tensors[0].shape} vs {t.shape} along axis {axis}")
    out = np.concatenate([t.value for t in tensors], axis=axis)
    cuts = np.cumsum(sizes)[:-1]
    return Tensor(out, tensors, lambda g: tuple(np.split(g, cuts, axis=axis)), "concat")


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return Tensor(a.value.reshape(shape), (a,), lambda g: (g.reshape(old),), "reshape")


def transpose(a: Tensor) -> Tensor:
    if a.value.ndim != 2:
        raise ShapeMismatch(f"transpose expects a matrix, got {a.shape}")
    return Tensor(a.value.T.copy(), (a,), lambda g: (g.T,), "transpose")


def masked_max(mat: Tensor, row_mask, col_mask, axis: int) -> Tensor:
    """Max over live entries along ``axis`` of a matrix.

    ``axis=1`` gives one value per row (max over live columns), ``axis=0``
    one per column. Entries outside the live block never win; positions
    along the kept axis that are themselves dead yield 0. The gradient goes
    to the first argmax.
    """
    if mat.value.ndim != 2:
        raise ShapeMismatch(f"masked_max expects a matrix, got {mat.shape}")
    row_mask = np.asarray(row_mask, dtype=np.float64)
    col_mask = np.asarray(col_mask, dtype=np.float64)
    if row_mask.shape != (mat.shape[0],) or col_mask.shape != (mat.shape[1],):
        raise ShapeMismatch("masked_max: mask lengths do not match matrix")
    if axis == 1:
        vals, arg = kernels.masked_rowmax(mat.value, row_mask, col_mask)
    elif axis == 0:
        vals, arg = kernels.masked_rowmax(mat.value.T, col_mask, row_mask)
    else:
        raise ValueError("axis must be 0 or 1")
    shape = mat.shape
    kept = np.flatnonzero(arg >= 0)
    hit = arg[kept]

    def back(g):
        grad = np.zeros(shape)
        if axis == 1:
            grad[kept, hit] = g[kept]
        else:
            grad[hit, kept] = g[kept]
        return (grad,)

    return Tensor(vals, (mat,), back, "masked_max")


def neighbor_sum(reps: Tensor, neighbors) -> Tensor:
    """Each row plus the sum of its neighbour rows.

    ``neighbors`` must describe a symmetric relation, which makes the op
    self-adjoint: the backward pass is the same aggregation.
    """
    neighbors = np.asarray(neighbors, dtype=np.int64)
    if reps.value.ndim != 2 or neighbors.shape[0] != reps.shape[0]:
        raise ShapeMismatch(f"neighbor_sum: reps {reps.shape}, neighbors {neighbors.shape}")
    out = kernels.neighbor_sum(reps.value, neighbors)
    return Tensor(out, (reps,), lambda g: (kernels.neighbor_sum(g, neighbors),), "neighbor_sum")


def degree_matmul(x: Tensor, weights, degree) -> Tensor:
    """Row ``v`` of the result is ``x[v] @ weights[degree[v]]``.

    Rows with ``degree < 0`` (padding) produce zeros.
    """
    weights = tuple(weights)
    degree = np.asarray(degree, dtype=np.int64)
    d_in, d_out = weights[0].shape
    if x.value.ndim != 2 or x.shape[1] != d_in or degree.shape != (x.shape[0],):
        raise ShapeMismatch(f"degree_matmul: x {x.shape}, weights {weights[0].shape}")
    if any(w.shape != (d_in, d_out) for w in weights):
        raise ShapeMismatch("degree_matmul: weight matrices differ in shape")
    if degree.max(initial=-1) >= len(weights):
        raise ShapeMismatch(f"degree {degree.max()} has no weight matrix")
    groups = [(d, np.flatnonzero(degree == d)) for d in range(len(weights))]
    groups = [(d, rows) for d, rows in groups if rows.size]
    xv = x.value
    out = np.zeros((x.shape[0], d_out))
    for d, rows in groups:
        out[rows] = xv[rows] @ weights[d].value

    def back(g):
        gx = np.zeros_like(xv)
        gw = [None] * len(weights)
        for d, rows in groups:
            gx[rows] = g[rows] @ weights[d].value.T
            gw[d] = xv[rows].T @ g[rows]
        return (gx, *gw)

    return Tensor(out, (x, *weights), back, "degree_matmul")


def binary_cross_entropy(prob: Tensor, label: float, eps: float = 1e-12) -> Tensor:
    """``-[y ln p + (1-y) ln(1-p)]`` with ``p`` clamped to ``[eps, 1-eps]``."""
    if prob.value.size != 1:
        raise ShapeMismatch(f"binary_cross_entropy expects a scalar, got {prob.shape}")
    y = float(label)
    p_raw = float(prob.value.reshape(()))
    p = min(max(p_raw, eps), 1.0 - eps)
    val = -(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    clamped = p != p_raw
    shape = prob.shape

    def back(g):
        if clamped:
            return (np.zeros(shape),)
        return (np.full(shape, float(g) * (p - y) / (p * (1.0 - p))),)

    return Tensor(val, (prob,), back, "bce")


# -------------------------------------------------------------- backward


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, done = stack.pop()
        if done:
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


def gradients(root: Tensor, wrt) -> list[np.ndarray]:
    """Gradients of scalar ``root`` with respect to each tensor in ``wrt``.

    Pure: nothing is written onto the tensors, so independent graphs may
    be differentiated from several threads.
    """
    if root.value.size != 1:
        raise ShapeMismatch(f"gradients need a scalar root, got {root.shape}")
    grads = {id(root): np.ones_like(root.value)}
    for node in reversed(_topological(root)):
        g = grads.pop(id(node), None) if node.backward_fn is not None else grads.get(id(node))
        if g is None or node.backward_fn is None:
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None:
                continue
            key = id(parent)
            if key in grads:
                grads[key] = grads[key] + pg
            else:
                grads[key] = np.asarray(pg, dtype=np.float64).reshape(parent.shape)
    return [grads.get(id(t), np.zeros_like(t.value)) for t in wrt]


def backward(root: Tensor, params) -> None:
    """Zero ``params[i].grad`` and fill it with d root / d params[i]."""
    params = list(params)
    for p, g in zip(params, gradients(root, params)):
        p.grad = g


# ----------------------------------------------------------- init / optim


def xavier_init(fan_in: int, fan_out: int, rng: np.random.Generator) -> Tensor:
    """Glorot-uniform samples on ``±sqrt(6 / (fan_in + fan_out))``."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValueError("fan_in and fan_out must be positive")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return Tensor(rng.uniform(-limit, limit, size=(fan_in, fan_out)), name="xavier")


@dataclass
class AdamState:
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, state: AdamState, lr: float) -> None:
    """One bias-corrected Adam update, in place, from each ``param.grad``."""
    state.t += 1
    t = state.t
    b1, b2 = state.beta1, state.beta2
    for p in params:
        key = p.name or id(p)
        g = p.grad
        m = state.m.get(key)
        if m is None:
            m = np.zeros_like(p.value)
            state.v[key] = np.zeros_like(p.value)
        v = state.v[key]
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        state.m[key], state.v[key] = m, v
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def grad_check(computation, params, step=1e-5, floor=1e-6, analytic=None, batched=None, chunk=2048) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``computation()`` must rebuild the graph from the current parameter
    values and return a scalar tensor. Relative error per entry is
    ``|a - n| / max(|a|, |n|, floor)``. ``analytic`` overrides the
    autodiff gradients (for negative controls).

    ``batched(index, values)``, if given, evaluates the same scalar function
    for a stack of values of ``params[index]`` (shape ``(K, *shape)``,
    others held fixed) and returns ``K`` results; the differences are then
    taken ``chunk`` entries at a time instead of one by one.
    """
    params = list(params)
    if analytic is None:
        analytic = gradients(computation(), params)
    worst = 0.0
    for index, (p, a) in enumerate(zip(params, analytic)):
        a = np.asarray(a).reshape(-1)
        if batched is None:
            flat = p.value.reshape(-1)
            num = np.empty(flat.size)
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + step
                up = computation().item()
                flat[i] = orig - step
                down = computation().item()
                flat[i] = orig
                num[i] = (up - down) / (2.0 * step)
        else:
            num = _batched_differences(batched, index, p.value, step, chunk)
        err = np.abs(a - num) / np.maximum(np.maximum(np.abs(a), np.abs(num)), floor)
        worst = max(worst, float(err.max(initial=0.0)))
    return worst


def _batched_differences(batched, index, value, step, chunk):
    size = value.size
    num = np.empty(size)
    base = value.reshape(-1)
    for start in range(0, size, chunk):
        idx = np.arange(start, min(start + chunk, size))
        stack = np.repeat(base[None, :], idx.size, axis=0)
        rows = np.arange(idx.size)
        stack[rows, idx] = base[idx] + step
        up = np.asarray(batched(index, stack.reshape((idx.size, *value.shape))))
        stack[rows, idx] = base[idx] - step
        down = np.asarray(batched(index, stack.reshape((idx.size, *value.shape))))
        num[idx] = (up - down) / (2.0 * step)
    return num
