"""Full multimodal models: the structured-embedding pipeline and the
connector-MLP baseline, sharing everything except the representation-to-
embedding bridge."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembler import MultimodalSample, assemble
from .config import ToyConfig
from .encoder import PatchGrid, VisualEncoder, patch_count, patchify
from .llm import ToyLLM
from .nn import flatten_params, init_matrix, init_vector, linear
from .rng import rng_stream
from .tables import TextualEmbeddingTable, VisualEmbeddingTable
from .tensor import Tensor, gelu
from .tokenizer import TokenizerHead

GROUP_ENCODER_LAST = "encoder_last"
GROUP_ENCODER_REST = "encoder_rest"
GROUP_BRIDGE = "bridge"
GROUP_LLM = "llm"
ALL_GROUPS = (GROUP_ENCODER_LAST, GROUP_ENCODER_REST, GROUP_BRIDGE, GROUP_LLM)


class MultimodalModel:
    """Encoder + bridge + textual table + decoder; subclasses supply the bridge."""

    arch = "base"

    def __init__(self, cfg: ToyConfig, seed: int, dtype=np.float32):
        self.cfg = cfg
        self.seed = seed
        self.dtype = dtype
        patch_len = cfg.channels * cfg.patch_size * cfg.patch_size
        n_patches = patch_count(cfg.image_size, cfg.image_size, cfg.patch_size, cfg.patch_size)
        self.encoder = VisualEncoder(patch_len, cfg.enc_dim, cfg.enc_blocks, cfg.enc_heads,
                                     n_max=n_patches, seed=seed, dtype=dtype)
        self.ttable = TextualEmbeddingTable(cfg.text_vocab, cfg.embed_dim, seed, dtype)
        self.llm = ToyLLM(cfg.embed_dim, cfg.llm_blocks, cfg.llm_heads, cfg.text_vocab,
                          cfg.max_seq, seed, dtype)

    # bridge interface
    def bridge(self, reps: Tensor) -> Tensor:
        raise NotImplementedError

    def bridge_parameters(self) -> dict:
        raise NotImplementedError

    def named_parameters(self) -> dict:
        out = {}
        out.update(flatten_params("encoder", self.encoder.parameters()))
        out.update(flatten_params("bridge", self.bridge_parameters()))
        out.update(flatten_params("ttable", self.ttable.parameters()))
        out.update(flatten_params("llm", self.llm.parameters()))
        return out

    def group_of(self, name: str) -> str:
        last = len(self.encoder.blocks) - 1
        if name.startswith(f"encoder.blocks.{last}."):
            return GROUP_ENCODER_LAST
        if name.startswith("encoder."):
            return GROUP_ENCODER_REST
        if name.startswith("bridge."):
            return GROUP_BRIDGE
        return GROUP_LLM  # ttable and llm both belong to the frozen-LLM group

    def patches_for(self, image: np.ndarray) -> PatchGrid:
        return patchify(image, self.cfg.patch_size, self.cfg.patch_size)

    def visual_embeddings(self, grid: PatchGrid) -> Tensor:
        return self.bridge(self.encoder.encode(grid))

    def assemble_sample(self, sample: MultimodalSample, grid: PatchGrid | None = None):
        if sample.image is None:
            return assemble(sample, None, self.ttable)
        if grid is None:
            grid = self.patches_for(sample.image)
        return assemble(sample, self.visual_embeddings(grid), self.ttable)

    def sample_loss(self, sample: MultimodalSample, grid: PatchGrid | None = None) -> Tensor:
        return self.llm.loss(self.assemble_sample(sample, grid))


class OvisModel(MultimodalModel):
    """Bridge = probabilistic tokenization + visual embedding table."""

    arch = "ovis"

    def __init__(self, cfg: ToyConfig, seed: int, dtype=np.float32):
        super().__init__(cfg, seed, dtype)
        self.head = TokenizerHead(cfg.visual_vocab, cfg.enc_dim, seed, dtype)
        self.vtable = VisualEmbeddingTable(cfg.visual_vocab, cfg.embed_dim, seed, dtype)

    def bridge_parameters(self) -> dict:
        out = flatten_params("head", self.head.parameters())
        out.update(flatten_params("vtable", self.vtable.parameters()))
        return out

    def tokenize(self, reps: Tensor) -> Tensor:
        return self.head.tokenize(reps)

    def bridge(self, reps: Tensor) -> Tensor:
        return self.vtable.embed(self.head.tokenize(reps))


class ConnectorModel(MultimodalModel):
    """Bridge = two-layer GELU MLP with hidden width equal to the visual vocabulary."""

    arch = "connector"

    def __init__(self, cfg: ToyConfig, seed: int, dtype=np.float32):
        super().__init__(cfg, seed, dtype)
        rng = rng_stream(seed, "connector")
        self.w1 = init_matrix(rng, cfg.enc_dim, cfg.visual_vocab, dtype)
        self.b1 = init_vector(rng, cfg.visual_vocab, dtype)
        self.w2 = init_matrix(rng, cfg.visual_vocab, cfg.embed_dim, dtype)
        self.b2 = init_vector(rng, cfg.embed_dim, dtype)

    def bridge_parameters(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    def bridge(self, reps: Tensor) -> Tensor:
        if reps.shape[1] != self.cfg.enc_dim:
            raise ValueError(f"representation width {reps.shape[1]} != connector width {self.cfg.enc_dim}")
        return linear(gelu(linear(reps, self.w1, self.b1)), self.w2, self.b2)


def build_model(arch: str, cfg: ToyConfig, seed: int, dtype=np.float32) -> MultimodalModel:
    if arch == "ovis":
        return OvisModel(cfg, seed, dtype)
    if arch == "connector":
        return ConnectorModel(cfg, seed, dtype)
    raise ValueError(f"unknown architecture {arch!r}")


@dataclass
class ParityReport:
    dim: int
    vocab: int
    embed_dim: int
    ovis_params: int
    connector_params: int

    @property
    def rel_diff(self) -> float:
        return abs(self.connector_params - self.ovis_params) / self.ovis_params

    def as_text(self) -> str:
        return (
            f"visual-path parameters (d={self.dim}, K={self.vocab}, d'={self.embed_dim})\n"
            f"ovis\t{self.ovis_params}\n"
            f"connector\t{self.connector_params}\n"
            f"relative difference\t{self.rel_diff:.4%}\n"
        )


def param_parity(cfg: ToyConfig, connector_bias: bool = True) -> ParityReport:
    """Count visual-path parameters on both sides of the ablation."""
    d, K, dp = cfg.enc_dim, cfg.visual_vocab, cfg.embed_dim
    ovis = d * K + K * dp
    connector = d * K + K * dp + (K + dp if connector_bias else 0)
    return ParityReport(dim=d, vocab=K, embed_dim=dp, ovis_params=ovis, connector_params=connector)
