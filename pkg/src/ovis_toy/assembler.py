"""Multimodal sequence assembly.

A sample's token sequence holds at most one image-indicator token; assembly
replaces that single slot with the n visual embeddings and gathers textual
embeddings everywhere else.  The loss mask is true exactly on the target
suffix, so prompts and visual spans never contribute to the loss.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import vocab
from .tables import TextualEmbeddingTable
from .tensor import Tensor, concat


@dataclass
class MultimodalSample:
    prompt_ids: list
    target_ids: list
    image: np.ndarray | None = None  # C x W x H pixels in [0,1], present iff indicator present

    def __post_init__(self):
        indicators = [i for i, t in enumerate(self.prompt_ids) if t == vocab.IMAGE_ID]
        if len(indicators) > 1:
            raise ValueError("sample contains more than one image indicator")
        if vocab.IMAGE_ID in self.target_ids:
            raise ValueError("image indicator not allowed in the target")
        if indicators and self.image is None:
            raise ValueError("image indicator present but no image attached")
        if not indicators and self.image is not None:
            raise ValueError("image attached but no indicator in the prompt")
        self.indicator_index = indicators[0] if indicators else None


@dataclass
class AssembledInput:
    embeddings: Tensor  # (m-1+n) x d' with an image, m x d' without
    loss_mask: np.ndarray  # bool, true only on target positions
    position_ids: np.ndarray
    token_ids: np.ndarray  # -1 on visual positions
    visual_span: tuple | None = None  # (start, length) of the visual block


def assemble(sample: MultimodalSample, visual: Tensor | None,
             table: TextualEmbeddingTable) -> AssembledInput:
    """Splice visual embeddings into the indicator slot; gather text elsewhere."""
    ids = list(sample.prompt_ids) + list(sample.target_ids)
    lam = sample.indicator_index

    if lam is None:
        if visual is not None:
            raise ValueError("visual embeddings supplied for a text-only sample")
        emb = table.embed(ids)
        token_ids = np.asarray(ids, dtype=np.int64)
        span = None
    else:
        if visual is None:
            raise ValueError("sample has an image but no visual embeddings were supplied")
        n = visual.shape[0]
        before = ids[:lam]
        after = ids[lam + 1 :]
        parts = []
        if before:
            parts.append(table.embed(before))
        parts.append(visual)
        if after:
            parts.append(table.embed(after))
        emb = concat(parts, axis=0)
        token_ids = np.concatenate(
            [np.asarray(before, dtype=np.int64), np.full(n, -1, dtype=np.int64),
             np.asarray(after, dtype=np.int64)]
        )
        span = (lam, n)

    length = emb.shape[0]
    mask = np.zeros(length, dtype=bool)
    n_target = len(sample.target_ids)
    if n_target:
        mask[length - n_target :] = True
    return AssembledInput(
        embeddings=emb,
        loss_mask=mask,
        position_ids=np.arange(length, dtype=np.int64),
        token_ids=token_ids,
        visual_span=span,
    )


def build_caption_sample(image: np.ndarray, caption_ids) -> MultimodalSample:
    """Stage-1 template: prompt "<image> 's caption :", target caption + EOS."""
    caption_ids = list(caption_ids)
    if not caption_ids:
        raise ValueError("caption must be nonempty")
    prompt = [vocab.IMAGE_ID] + vocab.encode("'s caption :")
    return MultimodalSample(prompt_ids=prompt, target_ids=caption_ids + [vocab.EOS_ID], image=image)
