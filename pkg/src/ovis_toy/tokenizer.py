"""Probabilistic visual tokens: project each patch representation onto the
visual-vocabulary simplex, plus sparsity statistics over token probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import init_matrix
from .rng import rng_stream
from .tensor import Tensor, matmul, softmax_rows, transpose


class TokenizerHead:
    """Bias-free linear projection K x d followed by a row softmax."""

    def __init__(self, vocab_size: int, dim: int, seed: int, dtype=np.float32):
        if vocab_size < 2:
            raise ValueError("visual vocabulary needs at least 2 words")
        self.vocab_size = vocab_size
        self.dim = dim
        # stored as K x d to match the projection's natural layout
        self.weight = init_matrix(rng_stream(seed, "tokenizer-head"), vocab_size, dim, dtype)

    def parameters(self) -> dict[str, Tensor]:
        return {"weight": self.weight}

    def tokenize(self, reps: Tensor) -> Tensor:
        """Map n x d representations to n probabilistic tokens (rows on the simplex)."""
        if reps.shape[1] != self.dim:
            raise ValueError(f"representation width {reps.shape[1]} != head width {self.dim}")
        logits = matmul(reps, transpose(self.weight))
        return softmax_rows(logits)


@dataclass
class SparsityReport:
    thresholds: list  # strictly decreasing, in (0,1)
    bucket_counts: list  # len(thresholds)+1 entries
    bucket_ratios: list
    token_count: int
    vocab_size: int

    def interval_labels(self) -> list:
        labels = [f">={self.thresholds[0]:g}"]
        for hi, lo in zip(self.thresholds[:-1], self.thresholds[1:]):
            labels.append(f"[{lo:g},{hi:g})")
        labels.append(f"<{self.thresholds[-1]:g}")
        return labels

    def as_tsv(self) -> str:
        lines = ["interval\tcount\tratio"]
        lines += [
            f"{label}\t{count}\t{ratio:.9f}"
            for label, count, ratio in zip(self.interval_labels(), self.bucket_counts, self.bucket_ratios)
        ]
        return "\n".join(lines) + "\n"


def sparsity_stats(tokens: np.ndarray, thresholds) -> SparsityReport:
    """Bucket all token probability values by the given descending thresholds.

    tokens: (n, K) array of probabilistic tokens.  Buckets are [t1, inf),
    [t2, t1), ..., (-inf, t_last).  Computed in float64 so values near the
    smallest threshold do not get misclassified by float32 rounding.
    """
    tokens = np.asarray(tokens, dtype=np.float64)
    if tokens.ndim != 2 or tokens.shape[0] == 0:
        raise ValueError("sparsity_stats: need a nonempty (n, K) token array")
    thresholds = [float(t) for t in thresholds]
    if not thresholds or any(not (0.0 < t < 1.0) for t in thresholds):
        raise ValueError("thresholds must lie in (0,1)")
    if any(a <= b for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly decreasing")

    values = tokens.reshape(-1)
    edges = np.array(thresholds, dtype=np.float64)
    # searchsorted over descending edges: bucket 0 is >= t1, last is < t_last
    buckets = np.searchsorted(-edges, -values, side="left")
    counts = np.bincount(buckets, minlength=len(thresholds) + 1)
    total = values.size
    return SparsityReport(
        thresholds=thresholds,
        bucket_counts=[int(c) for c in counts],
        bucket_ratios=[c / total for c in counts],
        token_count=tokens.shape[0],
        vocab_size=tokens.shape[1],
    )
