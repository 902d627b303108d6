"""Central finite-difference gradient verification.

Compares reverse-mode gradients against (f(x+h) - f(x-h)) / 2h in float64,
with the relative error measured against max(|a|, |b|, 1e-8).
"""

from __future__ import annotations

import numpy as np

from .tensor import Tensor

FD_STEP = 1e-5
REL_TOL = 1e-4
REL_FLOOR = 1e-8


def finite_difference_grad(f, x: Tensor, h: float = FD_STEP) -> np.ndarray:
    """Central-difference gradient of the scalar function f w.r.t. tensor x.

    f is called with no arguments and must read x.data; every other input it
    touches is held fixed.
    """
    flat = x.data.reshape(-1)
    grad = np.zeros_like(flat)
    for j in range(flat.size):
        orig = flat[j]
        flat[j] = orig + h
        fplus = f()
        flat[j] = orig - h
        fminus = f()
        flat[j] = orig
        grad[j] = (fplus - fminus) / (2.0 * h)
    return grad.reshape(x.shape)


def max_rel_error(a: np.ndarray, b: np.ndarray, floor: float = REL_FLOOR) -> float:
    denom = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float(np.max(np.abs(a - b) / denom))


def check_gradients(build, params, h: float = FD_STEP, tol: float = REL_TOL) -> float:
    """Verify autodiff gradients of a scalar-valued graph against finite differences.

    build() must construct a fresh forward graph (reading the current .data of
    each tensor in params) and return the scalar loss Tensor.  Returns the max
    relative error over all parameters; raises AssertionError above tol.
    """
    for p in params:
        if p.data.dtype != np.float64:
            raise TypeError("gradient checks require float64 tensors")
        p.zero_grad()
    loss = build()
    loss.backward()
    worst = 0.0
    for p in params:
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        numeric = finite_difference_grad(lambda: float(build().data), p, h=h)
        err = max_rel_error(analytic, numeric)
        worst = max(worst, err)
    if worst >= tol:
        raise AssertionError(f"gradient check failed: max relative error {worst:.3e} >= {tol:g}")
    return worst
