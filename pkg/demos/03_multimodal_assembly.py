"""How text and visual embeddings share one input sequence.

A prompt carries a single image placeholder; assembly replaces that slot with
all of the image's patch embeddings, leaving the textual tokens (and the loss
mask over the answer span) around it.
"""

import numpy as np

from ovis_toy import vocab
from ovis_toy.assembler import MultimodalSample
from ovis_toy.config import ToyConfig
from ovis_toy.data import render
from ovis_toy.model import build_model

cfg = ToyConfig()
model = build_model("ovis", cfg, seed=0)

image = render([{"shape": "square", "color": "green", "cell": [1, 0], "size": "small"}],
               cfg.image_size, cfg.channels)
sample = MultimodalSample(
    prompt_ids=[vocab.IMAGE_ID] + vocab.encode("what color is the square ?"),
    target_ids=vocab.encode("green") + [vocab.EOS_ID],
    image=image,
)
print(f"prompt ids:  {sample.prompt_ids}  (placeholder at index {sample.indicator_index})")
print(f"target ids:  {sample.target_ids}")

assembled = model.assemble_sample(sample)
n_text = len(sample.prompt_ids) + len(sample.target_ids)
print(f"\ntext length {n_text} -> assembled length {assembled.embeddings.shape[0]} "
      f"(one slot became {assembled.visual_span[1] - assembled.visual_span[0]} patch embeddings)")
print(f"visual span: {assembled.visual_span}")
print(f"token ids:   {assembled.token_ids.tolist()}  (-1 marks visual positions)")
print(f"loss mask:   {assembled.loss_mask.astype(int).tolist()}  (answer + EOS only)")

loss = model.llm.loss(assembled)
print(f"\nuntrained next-token loss: {loss.item():.4f} "
      f"(chance is ln({cfg.text_vocab}) = {np.log(cfg.text_vocab):.4f})")
