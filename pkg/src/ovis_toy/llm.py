"""Toy decoder-only transformer over assembled embedding sequences."""

from __future__ import annotations

import numpy as np

from . import vocab
from .assembler import AssembledInput
from .nn import TransformerBlock, causal_mask, flatten_params, init_matrix, init_vector, linear
from .rng import rng_stream
from .tables import TextualEmbeddingTable
from .tensor import Tensor, add, concat, cross_entropy, layernorm, slice_rows


class ToyLLM:
    """Pre-norm causal decoder: positional embeddings, blocks, final LN, output projection."""

    def __init__(self, dim: int, blocks: int, heads: int, text_vocab: int, max_seq: int,
                 seed: int, dtype=np.float32):
        self.dim = dim
        self.text_vocab = text_vocab
        self.max_seq = max_seq
        self.dtype = dtype
        rng = rng_stream(seed, "llm")
        self.pos = init_matrix(rng, max_seq, dim, dtype)
        self.blocks = [TransformerBlock(dim, heads, rng, dtype) for _ in range(blocks)]
        self.ln_gain = init_vector(rng, dim, dtype, fill=1.0)
        self.ln_shift = init_vector(rng, dim, dtype)
        # output projection deliberately not tied to the textual table
        self.out_w = init_matrix(rng, dim, text_vocab, dtype)
        self.out_b = init_vector(rng, text_vocab, dtype)

    def parameters(self) -> dict[str, Tensor]:
        out = {"pos": self.pos}
        for i, blk in enumerate(self.blocks):
            out.update(flatten_params(f"blocks.{i}", blk.parameters()))
        out.update({"ln_gain": self.ln_gain, "ln_shift": self.ln_shift,
                    "out_w": self.out_w, "out_b": self.out_b})
        return out

    def forward(self, assembled: AssembledInput) -> Tensor:
        """Next-token logits, one row per input position."""
        x = assembled.embeddings
        length = x.shape[0]
        if length > self.max_seq:
            raise ValueError(f"sequence length {length} exceeds capacity {self.max_seq}")
        x = add(x, slice_rows(self.pos, 0, length))
        mask = causal_mask(length, self.dtype)
        for blk in self.blocks:
            x = blk(x, attn_mask=mask)
        x = layernorm(x, self.ln_gain, self.ln_shift)
        return linear(x, self.out_w, self.out_b)

    def loss(self, assembled: AssembledInput) -> Tensor:
        """Masked next-token cross-entropy: logits at p predict the token at p+1."""
        logits = self.forward(assembled)
        length = logits.shape[0]
        return cross_entropy(
            slice_rows(logits, 0, length - 1),
            assembled.token_ids[1:],
            assembled.loss_mask[1:],
        )


def generate_greedy(llm: ToyLLM, prompt: AssembledInput, table: TextualEmbeddingTable,
                    max_new: int) -> list:
    """Append argmax tokens until EOS or max_new; deterministic by construction."""
    if max_new < 1:
        raise ValueError("max_new must be >= 1")
    emb = prompt.embeddings
    token_ids = prompt.token_ids
    out = []
    for _ in range(max_new):
        assembled = AssembledInput(
            embeddings=emb,
            loss_mask=np.zeros(emb.shape[0], dtype=bool),
            position_ids=np.arange(emb.shape[0], dtype=np.int64),
            token_ids=token_ids,
        )
        logits = llm.forward(assembled)
        next_id = int(np.argmax(logits.data[-1]))
        out.append(next_id)
        if next_id == vocab.EOS_ID:
            break
        emb = concat([emb, table.embed([next_id])], axis=0)
        token_ids = np.concatenate([token_ids, [next_id]])
    return out
