"""Reverse-mode autodiff on plain numpy arrays, verified by finite differences.

Builds a tiny two-layer computation, backpropagates, and compares every
gradient against 64-bit central differences.
"""

import numpy as np

from ovis_toy.gradcheck import check_gradients
from ovis_toy.tensor import Tensor, cross_entropy, gelu, matmul

rng = np.random.default_rng(0)
x = Tensor(rng.normal(size=(4, 8)))
w1 = Tensor(rng.normal(size=(8, 16)), requires_grad=True)
w2 = Tensor(rng.normal(size=(16, 5)), requires_grad=True)
targets = np.array([0, 2, 4, 1])
mask = np.array([True, True, False, True])  # third row excluded from the loss


def forward():
    logits = matmul(gelu(matmul(x, w1)), w2)
    return cross_entropy(logits, targets, mask)


loss = forward()
loss.backward()
print(f"loss = {loss.item():.6f}")
print(f"dL/dw1 norm = {np.linalg.norm(w1.grad):.6f}")
print(f"dL/dw2 norm = {np.linalg.norm(w2.grad):.6f}")

worst = check_gradients(forward, [w1, w2])
print(f"worst relative error vs central differences: {worst:.2e}  (tolerance 1e-4)")

# a second backward on the same graph is a hard error, not silent corruption
try:
    loss.backward()
except RuntimeError as exc:
    print(f"second backward correctly refused: {exc}")
