"""Image patchification and the toy vision-transformer encoder.

An image is a C x W x H pixel tensor in [0,1].  It is cut into a grid of
w x h patches (zero-padded on the right/bottom when W or H does not divide),
each flattened to length C*w*h, and the patch sequence is mapped by a small
pre-norm transformer to one continuous representation per patch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn import TransformerBlock, flatten_params, init_matrix, init_vector, linear
from .rng import rng_stream
from .tensor import Tensor, add, layernorm, slice_rows


def patch_count(W: int, H: int, w: int, h: int) -> int:
    return math.ceil(W / w) * math.ceil(H / h)


@dataclass
class PatchGrid:
    """Flattened patches in row-major grid order (width-blocks outer, height-blocks inner)."""

    patch_w: int
    patch_h: int
    grid_w: int
    grid_h: int
    image_shape: tuple  # (C, W, H) before padding
    patches: np.ndarray  # (n, C*w*h)

    @property
    def n(self) -> int:
        return self.patches.shape[0]


def patchify(img: np.ndarray, w: int, h: int) -> PatchGrid:
    """Split a C x W x H image into ceil(W/w)*ceil(H/h) flattened patches."""
    if w <= 0 or h <= 0:
        raise ValueError(f"patch dims must be positive, got {w}x{h}")
    img = np.asarray(img)
    if img.ndim != 3:
        raise ValueError(f"image must be C x W x H, got shape {img.shape}")
    C, W, H = img.shape
    gw, gh = math.ceil(W / w), math.ceil(H / h)
    padded = np.zeros((C, gw * w, gh * h), dtype=img.dtype)
    padded[:, :W, :H] = img
    patches = np.empty((gw * gh, C * w * h), dtype=img.dtype)
    idx = 0
    for iw in range(gw):
        for ih in range(gh):
            block = padded[:, iw * w : (iw + 1) * w, ih * h : (ih + 1) * h]
            patches[idx] = block.reshape(-1)
            idx += 1
    return PatchGrid(w, h, gw, gh, (C, W, H), patches)


def unpatchify(grid: PatchGrid) -> np.ndarray:
    """Inverse of patchify: reassemble the image, dropping right/bottom padding."""
    C, W, H = grid.image_shape
    w, h = grid.patch_w, grid.patch_h
    padded = np.zeros((C, grid.grid_w * w, grid.grid_h * h), dtype=grid.patches.dtype)
    idx = 0
    for iw in range(grid.grid_w):
        for ih in range(grid.grid_h):
            padded[:, iw * w : (iw + 1) * w, ih * h : (ih + 1) * h] = grid.patches[idx].reshape(C, w, h)
            idx += 1
    return padded[:, :W, :H]


class VisualEncoder:
    """Patch projection + transformer blocks + final layernorm; width d per patch."""

    def __init__(self, patch_len: int, dim: int, blocks: int, heads: int, n_max: int,
                 seed: int, dtype=np.float32):
        if blocks < 1:
            raise ValueError("encoder needs at least one block")
        self.dim = dim
        self.heads = heads
        self.n_max = n_max
        self.dtype = dtype
        rng = rng_stream(seed, "encoder")
        self.patch_proj = init_matrix(rng, patch_len, dim, dtype)
        self.patch_bias = init_vector(rng, dim, dtype)
        self.pos = init_matrix(rng, n_max, dim, dtype)
        self.blocks = [TransformerBlock(dim, heads, rng, dtype) for _ in range(blocks)]
        self.ln_gain = init_vector(rng, dim, dtype, fill=1.0)
        self.ln_shift = init_vector(rng, dim, dtype)

    def parameters(self) -> dict[str, Tensor]:
        out = {
            "patch_proj": self.patch_proj,
            "patch_bias": self.patch_bias,
            "pos": self.pos,
        }
        for i, blk in enumerate(self.blocks):
            out.update(flatten_params(f"blocks.{i}", blk.parameters()))
        out["ln_gain"] = self.ln_gain
        out["ln_shift"] = self.ln_shift
        return out

    def last_block_parameters(self) -> dict[str, Tensor]:
        i = len(self.blocks) - 1
        return flatten_params(f"blocks.{i}", self.blocks[i].parameters())

    def encode(self, grid: PatchGrid) -> Tensor:
        """Map a patch grid to an n x d sequence of continuous representations."""
        n = grid.n
        if n > self.n_max:
            raise ValueError(f"{n} patches exceed positional capacity {self.n_max}")
        x = Tensor(grid.patches.astype(self.dtype))
        x = linear(x, self.patch_proj, self.patch_bias)
        x = add(x, slice_rows(self.pos, 0, n))
        for blk in self.blocks:
            x = blk(x)
        return layernorm(x, self.ln_gain, self.ln_shift)

    def reinit_last_block(self, seed: int) -> "VisualEncoder":
        """Redraw the final block's parameters from the init distribution, in place."""
        rng = rng_stream(seed, "reinit-last-block")
        self.blocks[-1] = TransformerBlock(self.dim, self.heads, rng, self.dtype)
        return self
