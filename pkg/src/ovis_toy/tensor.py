"""Minimal dense tensor with reverse-mode automatic differentiation.

Supports exactly the operations the rest of the package needs: matmul,
elementwise arithmetic, GELU, layernorm, row softmax, masked cross-entropy,
reshape/slice/concat/transpose and embedding-row gathers.  Two dtypes only:
float32 for training, float64 for gradient checking; a graph never mixes them.
No general broadcasting -- the single exception is adding a 1-D bias to every
row of a matrix.
"""

from __future__ import annotations

import math

import numpy as np

_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715
LAYERNORM_EPS = 1e-5


class Tensor:
    """A numpy array plus an optional gradient and a backward closure."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_backward_done")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data)
        if dtype is not None:
            arr = arr.astype(dtype)
        elif arr.dtype not in (np.float32, np.float64):
            arr = arr.astype(np.float64)
        self.data = arr
        self.grad = None
        self.requires_grad = requires_grad
        self._parents: tuple = ()
        self._backward = None
        self._backward_done = False

    @property
    def shape(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            # first contribution: own a fresh buffer, never alias the op's scratch
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
            if self.grad.shape != self.data.shape:
                self.grad = np.broadcast_to(g, self.data.shape).astype(self.data.dtype)
        else:
            self.grad += g

    def backward(self):
        """Reverse-mode pass from this (scalar) tensor.

        Accumulates (+=) into every reachable parent's grad.  Traversal is the
        exact reverse of execution order, so accumulation order is
        deterministic.  Calling backward twice on the same root is an error.
        """
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar root, got shape {self.shape}")
        if self._backward_done:
            raise RuntimeError("backward already executed on this graph; rebuild the forward pass first")
        self._backward_done = True

        topo = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited:
                    stack.append((p, False))

        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad})"


def _make(data, parents, backward_fn) -> Tensor:
    out = Tensor(data)
    out.requires_grad = any(p.requires_grad for p in parents)
    if out.requires_grad:
        out._parents = tuple(parents)
        out._backward = backward_fn
    return out


def _check_same_dtype(a: Tensor, b: Tensor, op: str):
    if a.data.dtype != b.data.dtype:
        raise TypeError(f"{op}: mixed dtypes {a.data.dtype} vs {b.data.dtype}")


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """2-D matrix product; dA = dC.B^T, dB = A^T.dC."""
    _check_same_dtype(a, b, "matmul")
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} and {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g @ b.data.T)
        if b.requires_grad:
            b._accumulate(a.data.T @ g)

    return _make(a.data @ b.data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add.  Sole broadcast: 1-D bias added to every matrix row."""
    _check_same_dtype(a, b, "add")
    bias = a.data.ndim == 2 and b.data.ndim == 1
    if bias:
        if a.shape[1] != b.shape[0]:
            raise ValueError(f"add: bias length {b.shape[0]} vs row width {a.shape[1]}")
    elif a.shape != b.shape:
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g)
        if b.requires_grad:
            b._accumulate(g.sum(axis=0) if bias else g)

    return _make(a.data + b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    _check_same_dtype(a, b, "mul")
    if a.shape != b.shape:
        raise ValueError(f"mul: shape mismatch {a.shape} vs {b.shape}")

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * b.data)
        if b.requires_grad:
            b._accumulate(g * a.data)

    return _make(a.data * b.data, (a, b), backward)


def scale(a: Tensor, c: float) -> Tensor:
    c = a.data.dtype.type(c)

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * c)

    return _make(a.data * c, (a,), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    return add(a, scale(b, -1.0))


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3)))."""
    xd = x.data
    u = _SQRT_2_OVER_PI * (xd + _GELU_C * xd**3)
    t = np.tanh(u)
    out = 0.5 * xd * (1.0 + t)

    def backward(g):
        if x.requires_grad:
            du = _SQRT_2_OVER_PI * (1.0 + 3.0 * _GELU_C * xd**2)
            x._accumulate(g * (0.5 * (1.0 + t) + 0.5 * xd * (1.0 - t**2) * du))

    return _make(out, (x,), backward)


def layernorm(x: Tensor, gain: Tensor, shift: Tensor, eps: float = LAYERNORM_EPS) -> Tensor:
    """Normalize over the last axis, then scale by gain and add shift."""
    _check_same_dtype(x, gain, "layernorm")
    if gain.shape != (x.shape[-1],) or shift.shape != (x.shape[-1],):
        raise ValueError(f"layernorm: scale/shift must have shape ({x.shape[-1]},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gain.data + shift.data

    def backward(g):
        if gain.requires_grad:
            gain._accumulate((g * xhat).reshape(-1, x.shape[-1]).sum(axis=0))
        if shift.requires_grad:
            shift._accumulate(g.reshape(-1, x.shape[-1]).sum(axis=0))
        if x.requires_grad:
            gy = g * gain.data
            m1 = gy.mean(axis=-1, keepdims=True)
            m2 = (gy * xhat).mean(axis=-1, keepdims=True)
            x._accumulate((gy - m1 - xhat * m2) * inv)

    return _make(out, (x, gain, shift), backward)


def softmax_rows(x: Tensor) -> Tensor:
    """Row-wise softmax with max-subtraction stabilization."""
    if x.data.ndim != 2:
        raise ValueError(f"softmax_rows: expected 2-D input, got shape {x.shape}")
    z = x.data - x.data.max(axis=1, keepdims=True)
    e = np.exp(z)
    s = e / e.sum(axis=1, keepdims=True)

    def backward(g):
        if x.requires_grad:
            # row-wise Jacobian diag(s) - s s^T applied to g
            x._accumulate(s * (g - (g * s).sum(axis=1, keepdims=True)))

    return _make(s, (x,), backward)


def cross_entropy(logits: Tensor, targets, mask) -> Tensor:
    """Mean of -log softmax(logits)[target] over unmasked positions.

    targets: integer ids, length L.  mask: booleans, length L; True means the
    position contributes to the loss.
    """
    targets = np.asarray(targets, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if logits.data.ndim != 2 or targets.shape != (logits.shape[0],) or mask.shape != (logits.shape[0],):
        raise ValueError("cross_entropy: logits must be LxV with length-L targets and mask")
    if not mask.any():
        raise ValueError("cross_entropy: all positions masked, loss is degenerate")
    if (targets[mask] < 0).any() or (targets[mask] >= logits.shape[1]).any():
        raise ValueError("cross_entropy: target id out of range")

    z = logits.data - logits.data.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - logsumexp
    count = int(mask.sum())
    rows = np.nonzero(mask)[0]
    loss = -logp[rows, targets[rows]].sum() / count

    def backward(g):
        if logits.requires_grad:
            p = np.exp(logp)
            d = np.zeros_like(logits.data)
            d[rows] = p[rows]
            d[rows, targets[rows]] -= 1.0
            logits._accumulate(d * (float(g) / count))

    out = _make(np.asarray(loss, dtype=logits.data.dtype), (logits,), backward)
    return out


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(shape)

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.reshape(x.shape))

    return _make(x.data.reshape(shape), (x,), backward)


def transpose(x: Tensor) -> Tensor:
    if x.data.ndim != 2:
        raise ValueError(f"transpose: expected 2-D input, got shape {x.shape}")

    def backward(g):
        if x.requires_grad:
            x._accumulate(g.T)

    return _make(x.data.T.copy(), (x,), backward)


def slice2d(x: Tensor, rows: slice, cols: slice) -> Tensor:
    """Contiguous 2-D slice; backward scatters the gradient into place."""
    if x.data.ndim != 2:
        raise ValueError(f"slice2d: expected 2-D input, got shape {x.shape}")

    def backward(g):
        if x.requires_grad:
            full = np.zeros_like(x.data)
            full[rows, cols] = g
            x._accumulate(full)

    return _make(x.data[rows, cols].copy(), (x,), backward)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    return slice2d(x, slice(start, stop), slice(None))


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    return slice2d(x, slice(None), slice(start, stop))


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate along axis; backward routes gradient slices positionally."""
    tensors = list(tensors)
    if not tensors:
        raise ValueError("concat: empty input")
    for t in tensors[1:]:
        _check_same_dtype(tensors[0], t, "concat")
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                idx = [slice(None)] * g.ndim
                idx[axis] = slice(lo, hi)
                t._accumulate(g[tuple(idx)])

    return _make(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward)


def embedding_rows(table: Tensor, ids) -> Tensor:
    """Gather rows of a 2-D table; backward scatter-accumulates into the table."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError("embedding_rows: ids must be 1-D")
    if (ids < 0).any() or (ids >= table.shape[0]).any():
        raise IndexError(f"embedding_rows: id out of range for table with {table.shape[0]} rows")

    def backward(g):
        if table.requires_grad:
            full = np.zeros_like(table.data)
            np.add.at(full, ids, g)
            table._accumulate(full)

    return _make(table.data[ids].copy(), (table,), backward)


def sum_all(x: Tensor) -> Tensor:
    def backward(g):
        if x.requires_grad:
            x._accumulate(np.full_like(x.data, float(g)))

    return _make(np.asarray(x.data.sum(), dtype=x.data.dtype), (x,), backward)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size

    def backward(g):
        if x.requires_grad:
            x._accumulate(np.full_like(x.data, float(g) / n))

    return _make(np.asarray(x.data.mean(), dtype=x.data.dtype), (x,), backward)
