"""Three-stage training: per-stage trainable masks, AdamW, warmup+cosine schedule,
global-norm gradient clipping and a TSV metrics log."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ToyConfig
from .data import DatasetRecord, record_to_sample
from .model import ALL_GROUPS, GROUP_BRIDGE, GROUP_ENCODER_LAST, GROUP_ENCODER_REST, GROUP_LLM, MultimodalModel
from .rng import rng_stream
from .tensor import Tensor, add, scale

STAGE_KINDS = {1: "caption", 2: "description", 3: "instruction"}
STAGE_GROUPS = {
    1: frozenset({GROUP_ENCODER_LAST, GROUP_BRIDGE}),
    2: frozenset({GROUP_ENCODER_LAST, GROUP_ENCODER_REST, GROUP_BRIDGE}),
    3: frozenset(ALL_GROUPS),
}
REINIT_SEED_OFFSET = 1  # stage-1 last-block reinit draws from seed + stage id


@dataclass
class StageConfig:
    stage: int
    dataset_kind: str
    trainable_groups: frozenset
    lr: float
    warmup_ratio: float
    steps: int
    batch_size: int
    clip_norm: float
    weight_decay: float
    beta1: float
    beta2: float
    adam_eps: float


def build_stage(stage: int, cfg: ToyConfig) -> StageConfig:
    if stage not in STAGE_KINDS:
        raise ValueError(f"unknown stage id {stage}; expected 1, 2 or 3")
    return StageConfig(
        stage=stage,
        dataset_kind=STAGE_KINDS[stage],
        trainable_groups=STAGE_GROUPS[stage],
        lr=cfg.stage_lr(stage),
        warmup_ratio=cfg.stage_warmup(stage),
        steps=cfg.stage_steps(stage),
        batch_size=cfg.batch_size,
        clip_norm=cfg.clip_norm,
        weight_decay=cfg.weight_decay,
        beta1=cfg.beta1,
        beta2=cfg.beta2,
        adam_eps=cfg.adam_eps,
    )


def lr_at(base: float, warmup_ratio: float, total: int, step: int) -> float:
    """Linear warmup from 0 to base, then cosine decay from base to 0."""
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    warmup = math.ceil(warmup_ratio * total)
    if step < warmup:
        return base * step / warmup
    if total == warmup:
        return base if step == warmup else 0.0
    progress = (step - warmup) / (total - warmup)
    return base * 0.5 * (1.0 + math.cos(math.pi * progress))


class AdamW:
    """Decoupled weight decay Adam; moments exist only for the given parameters."""

    def __init__(self, params: list, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self, lr: float):
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if g is None:
                continue
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if self.weight_decay:
                update = update + self.weight_decay * p.data
            p.data -= (lr * update).astype(p.data.dtype)


def global_grad_norm(params: list) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float(np.sum(p.grad.astype(np.float64) ** 2))
    return math.sqrt(total)


def clip_global_norm(params: list, max_norm: float) -> float:
    """Scale all grads by max_norm/norm when the global norm exceeds max_norm."""
    norm = global_grad_norm(params)
    if norm > max_norm:
        factor = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= factor
    return norm


def batch_loss(model: MultimodalModel, samples, grids) -> Tensor:
    total = None
    for sample, grid in zip(samples, grids):
        loss = model.sample_loss(sample, grid)
        total = loss if total is None else add(total, loss)
    return scale(total, 1.0 / len(samples))


@dataclass
class StageResult:
    losses: list = field(default_factory=list)
    log_lines: list = field(default_factory=list)


def train_stage(model: MultimodalModel, stage_cfg: StageConfig, records: list,
                seed: int, log_file=None, reinit_last_block: bool = True) -> StageResult:
    """Run one training stage in place on the model.

    Stage 1 re-initializes the encoder's last block before training (paper-style
    warm start is impossible here, so the redraw doubles as the stage marker).
    Frozen parameters are bitwise untouched: their requires_grad is cleared for
    the duration of the stage so no gradient is even accumulated.
    """
    if not records:
        raise ValueError("empty dataset")
    expected = stage_cfg.dataset_kind
    if any(r.kind != expected for r in records):
        raise ValueError(f"stage {stage_cfg.stage} expects {expected!r} records")

    if stage_cfg.stage == 1 and reinit_last_block:
        model.encoder.reinit_last_block(seed + REINIT_SEED_OFFSET)

    named = model.named_parameters()
    trainable, frozen = [], []
    for name, p in named.items():
        (trainable if model.group_of(name) in stage_cfg.trainable_groups else frozen).append(p)
    for p in frozen:
        p.requires_grad = False

    # pre-render and pre-patchify once; records repeat across steps
    samples = [record_to_sample(r, model.cfg.image_size, model.cfg.channels) for r in records]
    grids = [model.patches_for(s.image) if s.image is not None else None for s in samples]

    opt = AdamW(trainable, beta1=stage_cfg.beta1, beta2=stage_cfg.beta2,
                eps=stage_cfg.adam_eps, weight_decay=stage_cfg.weight_decay)
    order_rng = rng_stream(seed, "batch-order", stage_cfg.stage)
    result = StageResult()
    try:
        for step in range(stage_cfg.steps):
            idx = order_rng.integers(0, len(samples), size=stage_cfg.batch_size)
            for p in trainable:
                p.zero_grad()
            loss = batch_loss(model, [samples[i] for i in idx], [grids[i] for i in idx])
            value = loss.item()
            if not math.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss {value} at stage {stage_cfg.stage} step {step}; aborting")
            loss.backward()
            clip_global_norm(trainable, stage_cfg.clip_norm)
            lr = lr_at(stage_cfg.lr, stage_cfg.warmup_ratio, stage_cfg.steps, step)
            opt.step(lr)
            line = f"{step}\t{stage_cfg.stage}\t{lr:.8e}\t{value:.8e}"
            result.losses.append(value)
            result.log_lines.append(line)
            if log_file is not None:
                log_file.write(line + "\n")
                log_file.flush()
    finally:
        for p in frozen:
            p.requires_grad = True
    return result


def token_accuracy(model: MultimodalModel, records: list) -> float:
    """Teacher-forced next-token accuracy over target positions."""
    if not records:
        raise ValueError("empty evaluation set")
    hit = total = 0
    for rec in records:
        sample = record_to_sample(rec, model.cfg.image_size, model.cfg.channels)
        assembled = model.assemble_sample(sample)
        logits = model.llm.forward(assembled).data
        ids, mask = assembled.token_ids, assembled.loss_mask
        for p in np.nonzero(mask)[0]:
            total += 1
            if int(np.argmax(logits[p - 1])) == ids[p]:
                hit += 1
    return hit / total
