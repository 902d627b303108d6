"""Visual and textual embedding tables.

The visual table turns a probabilistic token into the probability-weighted
combination of visual-word embeddings (equivalently, the expectation of a row
drawn from the token's distribution).  The textual table is a plain row
look-up with scatter-accumulating backward.
"""

from __future__ import annotations

import numpy as np

from .nn import init_matrix
from .rng import rng_stream
from .tensor import Tensor, embedding_rows, matmul


class VisualEmbeddingTable:
    """K x d' learnable matrix; row k is the embedding of visual word k."""

    def __init__(self, vocab_size: int, dim: int, seed: int, dtype=np.float32):
        self.vocab_size = vocab_size
        self.dim = dim
        self.rows = init_matrix(rng_stream(seed, "visual-table"), vocab_size, dim, dtype)

    def parameters(self) -> dict[str, Tensor]:
        return {"rows": self.rows}

    def embed(self, tokens: Tensor) -> Tensor:
        """n x K probabilistic tokens -> n x d' expected embeddings (dense matmul)."""
        if tokens.shape[1] != self.vocab_size:
            raise ValueError(f"token width {tokens.shape[1]} != vocabulary size {self.vocab_size}")
        return matmul(tokens, self.rows)


class TextualEmbeddingTable:
    """V_text x d' table indexed by token id."""

    def __init__(self, vocab_size: int, dim: int, seed: int, dtype=np.float32):
        self.vocab_size = vocab_size
        self.dim = dim
        self.rows = init_matrix(rng_stream(seed, "textual-table"), vocab_size, dim, dtype)

    def parameters(self) -> dict[str, Tensor]:
        return {"rows": self.rows}

    def embed(self, ids) -> Tensor:
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.vocab_size):
            raise IndexError(f"token id out of range for vocabulary of {self.vocab_size}")
        return embedding_rows(self.rows, ids)
