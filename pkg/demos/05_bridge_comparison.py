"""Probabilistic-token bridge vs a plain MLP connector, at matched size.

The two architectures differ only in how patch representations become LLM
inputs: a softmax over a visual vocabulary followed by an expectation over an
embedding table, versus a two-layer MLP projection. Parameter counts are kept
within 1% of each other so the comparison isolates the mechanism.
"""

from ovis_toy.config import ToyConfig
from ovis_toy.model import build_model, param_parity

cfg = ToyConfig()
print(param_parity(cfg).as_text())

for arch in ("ovis", "connector"):
    model = build_model(arch, cfg, seed=0)
    named = model.named_parameters()
    bridge = sum(p.data.size for n, p in named.items() if n.startswith("bridge."))
    total = sum(p.data.size for p in named.values())
    print(f"{arch:9s}: {bridge:6d} bridge params of {total} total")

print("\nFor trained-accuracy comparison rows, run the CLI:")
print("  ovis-toy gen-data --seed 0 --captions 300 --descriptions 300 \\")
print("      --instructions 600 --out data/")
print("  ovis-toy compare --arch ovis      --data data/ --seed 0 --out ovis.tsv")
print("  ovis-toy compare --arch connector --data data/ --seed 0 --out connector.tsv")
print("  ovis-toy compare-report --rows ovis.tsv connector.tsv")
