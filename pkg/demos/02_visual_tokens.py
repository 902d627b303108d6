"""From a rendered image to probabilistic visual tokens and their embeddings.

Walks the visual side of the pipeline: rasterize a scene, cut it into
patches, encode, map each patch to a probability distribution over a visual
vocabulary, and take the expectation over the embedding table.
"""

import numpy as np

from ovis_toy.config import ToyConfig
from ovis_toy.data import render
from ovis_toy.model import build_model
from ovis_toy.tokenizer import sparsity_stats

cfg = ToyConfig()
model = build_model("ovis", cfg, seed=0)

scene = [{"shape": "circle", "color": "red", "cell": [0, 0], "size": "large"},
         {"shape": "cross", "color": "white", "cell": [1, 1], "size": "small"}]
image = render(scene, cfg.image_size, cfg.channels)
print(f"image: {image.shape}, values in [{image.min():.1f}, {image.max():.1f}]")

grid = model.patches_for(image)
print(f"patches: {grid.patches.shape[0]} of length {grid.patches.shape[1]}")

reps = model.encoder.encode(grid)
tokens = model.tokenize(reps)
print(f"tokens: {tokens.shape} — each row a distribution over {cfg.visual_vocab} visual words")
sums = tokens.data.sum(axis=1)
print(f"row sums: min {sums.min():.9f}, max {sums.max():.9f} (simplex membership)")
print(f"most probable word per patch: {np.argmax(tokens.data, axis=1)}")

embedded = model.vtable.embed(tokens)
print(f"visual embeddings: {embedded.shape} — expectation over table rows")

print("\nprobability-mass buckets at an untrained head (near-uniform, so no mass")
print("clears the coarse thresholds yet — training sharpens this):")
print(sparsity_stats(tokens.data, [1e-1, 1e-2, 1e-3]).as_tsv(), end="")
