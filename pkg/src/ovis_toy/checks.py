"""Gradient-check suites shared by the CLI and the test suite.

Everything runs in float64: per-operation randomized checks, plus a check of
the fully composed pipeline (patchify -> encode -> bridge -> assemble ->
decode -> cross-entropy) on a miniature model.
"""

from __future__ import annotations

import numpy as np

from . import tensor as T
from .assembler import build_caption_sample
from .config import ToyConfig
from .gradcheck import check_gradients
from .model import build_model
from .rng import rng_stream


def _t(rng, *shape):
    return T.Tensor(rng.normal(size=shape), requires_grad=True, dtype=np.float64)


def _op_case_builders(rng):
    """One (name, params, build) triple per differentiable operation."""
    cases = []

    a, b = _t(rng, 3, 4), _t(rng, 4, 2)
    cases.append(("matmul", [a, b], lambda: T.sum_all(T.matmul(a, b))))

    x, y = _t(rng, 3, 5), _t(rng, 3, 5)
    cases.append(("add", [x, y], lambda: T.sum_all(T.mul(T.add(x, y), T.add(x, y)))))

    m, bias = _t(rng, 4, 3), _t(rng, 3)
    cases.append(("add_bias", [m, bias], lambda: T.sum_all(T.mul(T.add(m, bias), T.add(m, bias)))))

    p, q = _t(rng, 2, 6), _t(rng, 2, 6)
    cases.append(("mul", [p, q], lambda: T.sum_all(T.mul(p, q))))

    g = _t(rng, 3, 4)
    cases.append(("gelu", [g], lambda: T.sum_all(T.mul(T.gelu(g), g))))

    ln_x, ln_g, ln_b = _t(rng, 4, 6), _t(rng, 6), _t(rng, 6)
    cases.append(("layernorm", [ln_x, ln_g, ln_b],
                  lambda: T.sum_all(T.mul(T.layernorm(ln_x, ln_g, ln_b), ln_x))))

    s = _t(rng, 3, 5)
    sw = T.Tensor(rng.normal(size=(3, 5)), dtype=np.float64)
    cases.append(("softmax_rows", [s], lambda: T.sum_all(T.mul(T.softmax_rows(s), sw))))

    logits = _t(rng, 4, 6)
    targets = rng.integers(0, 6, size=4)
    mask = np.array([True, True, False, True])
    cases.append(("cross_entropy", [logits], lambda: T.cross_entropy(logits, targets, mask)))

    r = _t(rng, 2, 6)
    rw = T.Tensor(rng.normal(size=(3, 4)), dtype=np.float64)
    cases.append(("reshape", [r], lambda: T.sum_all(T.mul(T.reshape(r, (3, 4)), rw))))

    tr = _t(rng, 3, 5)
    cases.append(("transpose", [tr], lambda: T.sum_all(T.mul(T.transpose(tr), T.transpose(tr)))))

    sl = _t(rng, 5, 6)
    slw = T.Tensor(rng.normal(size=(2, 3)), dtype=np.float64)
    cases.append(("slice2d", [sl],
                  lambda: T.sum_all(T.mul(T.slice2d(sl, slice(1, 3), slice(2, 5)), slw))))

    c1, c2 = _t(rng, 2, 4), _t(rng, 3, 4)
    cw = T.Tensor(rng.normal(size=(5, 4)), dtype=np.float64)
    cases.append(("concat", [c1, c2], lambda: T.sum_all(T.mul(T.concat([c1, c2], axis=0), cw))))

    table = _t(rng, 5, 3)
    ids = rng.integers(0, 5, size=4)
    ew = T.Tensor(rng.normal(size=(4, 3)), dtype=np.float64)
    cases.append(("embedding_rows", [table], lambda: T.sum_all(T.mul(T.embedding_rows(table, ids), ew))))

    return cases


def run_op_checks(cases_per_op: int = 10, tol: float = 1e-4, seed: int = 0) -> dict:
    """Randomized finite-difference checks per op; returns {op: max rel err}."""
    worst: dict = {}
    for case in range(cases_per_op):
        rng = rng_stream(seed, "gradcheck-ops", case)
        for name, params, build in _op_case_builders(rng):
            err = check_gradients(build, params, tol=tol)
            worst[name] = max(worst.get(name, 0.0), err)
    return worst


def tiny_config() -> ToyConfig:
    return ToyConfig(
        image_size=8, channels=1, patch_size=4, enc_dim=8, enc_blocks=2, enc_heads=2,
        visual_vocab=6, embed_dim=8, llm_blocks=2, llm_heads=2, text_vocab=32, max_seq=32,
    )


def run_model_check(arch: str = "ovis", tol: float = 1e-4, seed: int = 0) -> float:
    """Finite-difference check of every parameter of a miniature composed model."""
    cfg = tiny_config()
    model = build_model(arch, cfg, seed=seed, dtype=np.float64)
    rng = rng_stream(seed, "gradcheck-model")
    # evaluate away from the tiny-variance init so no gradient sits below the
    # finite-difference noise floor
    for p in model.named_parameters().values():
        p.data = p.data + rng.normal(0.0, 0.5, size=p.data.shape)
    image = rng.uniform(0.0, 1.0, size=(cfg.channels, cfg.image_size, cfg.image_size))
    caption = [int(rng.integers(4, 20)) for _ in range(3)]
    sample = build_caption_sample(image, caption)

    params = list(model.named_parameters().values())
    return check_gradients(lambda: model.sample_loss(sample), params, tol=tol)
