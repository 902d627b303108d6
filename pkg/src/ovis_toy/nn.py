"""Shared neural building blocks: parameter init and the pre-norm transformer block."""

from __future__ import annotations

import math

import numpy as np

from .tensor import (
    Tensor,
    add,
    concat,
    gelu,
    layernorm,
    matmul,
    scale,
    slice_cols,
    softmax_rows,
    transpose,
)

INIT_STD = 0.02
ATTN_MASK_VALUE = -1e9


def init_matrix(rng: np.random.Generator, rows: int, cols: int, dtype, std: float = INIT_STD) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=(rows, cols)).astype(dtype), requires_grad=True)


def init_vector(rng: np.random.Generator, n: int, dtype, std: float = 0.0, fill: float = 0.0) -> Tensor:
    if std > 0:
        data = rng.normal(0.0, std, size=n)
    else:
        data = np.full(n, fill, dtype=np.float64)
    return Tensor(data.astype(dtype), requires_grad=True)


def causal_mask(length: int, dtype) -> Tensor:
    """Additive attention mask: 0 on and below the diagonal, large negative above."""
    m = np.triu(np.full((length, length), ATTN_MASK_VALUE), k=1).astype(dtype)
    return Tensor(m)


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    return add(matmul(x, w), b)


class TransformerBlock:
    """Pre-norm block: multi-head self-attention + GELU MLP, both residual."""

    def __init__(self, dim: int, heads: int, rng: np.random.Generator, dtype, mlp_ratio: int = 4):
        if dim % heads != 0:
            raise ValueError(f"dim {dim} not divisible by heads {heads}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        hidden = mlp_ratio * dim
        self.ln1_gain = init_vector(rng, dim, dtype, fill=1.0)
        self.ln1_shift = init_vector(rng, dim, dtype)
        self.wq = init_matrix(rng, dim, dim, dtype)
        self.bq = init_vector(rng, dim, dtype)
        # no key bias: a shared shift of every key is cancelled by the row softmax
        self.wk = init_matrix(rng, dim, dim, dtype)
        self.wv = init_matrix(rng, dim, dim, dtype)
        self.bv = init_vector(rng, dim, dtype)
        self.wo = init_matrix(rng, dim, dim, dtype)
        self.bo = init_vector(rng, dim, dtype)
        self.ln2_gain = init_vector(rng, dim, dtype, fill=1.0)
        self.ln2_shift = init_vector(rng, dim, dtype)
        self.w1 = init_matrix(rng, dim, hidden, dtype)
        self.b1 = init_vector(rng, hidden, dtype)
        self.w2 = init_matrix(rng, hidden, dim, dtype)
        self.b2 = init_vector(rng, dim, dtype)

    def parameters(self) -> dict[str, Tensor]:
        names = (
            "ln1_gain ln1_shift wq bq wk wv bv wo bo "
            "ln2_gain ln2_shift w1 b1 w2 b2"
        ).split()
        return {n: getattr(self, n) for n in names}

    def __call__(self, x: Tensor, attn_mask: Tensor | None = None) -> Tensor:
        h = layernorm(x, self.ln1_gain, self.ln1_shift)
        q = linear(h, self.wq, self.bq)
        k = matmul(h, self.wk)
        v = linear(h, self.wv, self.bv)
        inv_sqrt = 1.0 / math.sqrt(self.head_dim)
        outs = []
        for i in range(self.heads):
            lo, hi = i * self.head_dim, (i + 1) * self.head_dim
            qi = slice_cols(q, lo, hi)
            ki = slice_cols(k, lo, hi)
            vi = slice_cols(v, lo, hi)
            scores = scale(matmul(qi, transpose(ki)), inv_sqrt)
            if attn_mask is not None:
                scores = add(scores, attn_mask)
            outs.append(matmul(softmax_rows(scores), vi))
        attn = linear(concat(outs, axis=1), self.wo, self.bo)
        x = add(x, attn)
        h2 = layernorm(x, self.ln2_gain, self.ln2_shift)
        m = linear(gelu(linear(h2, self.w1, self.b1)), self.w2, self.b2)
        return add(x, m)


def flatten_params(prefix: str, params: dict[str, Tensor]) -> dict[str, Tensor]:
    return {f"{prefix}.{k}": v for k, v in params.items()}
