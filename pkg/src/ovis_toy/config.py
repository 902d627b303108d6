"""Flat key=value configuration with precedence: CLI flag > config file > default.

Full-scale reference values (kept here for provenance, not used at toy scale):
stage learning rates 1e-4 / 1e-4 / 2e-5, warm-up ratios 0.1 / 0.1 / 0.05,
weight decay 0, grad-norm clipping 1.0, AdamW, cosine schedule, batch sizes
8192 / 1024 / 1024, one epoch per stage, visual vocabulary 2^17.
"""

from __future__ import annotations

from dataclasses import dataclass, fields


@dataclass
class ToyConfig:
    # geometry
    image_size: int = 32
    channels: int = 1
    patch_size: int = 8
    enc_dim: int = 64
    enc_blocks: int = 2
    enc_heads: int = 4
    visual_vocab: int = 512
    embed_dim: int = 64
    llm_blocks: int = 2
    llm_heads: int = 4
    text_vocab: int = 256
    max_seq: int = 128
    # training (toy-scale step budgets; see module docstring for paper-scale values)
    batch_size: int = 32
    stage1_steps: int = 500
    stage2_steps: int = 500
    stage3_steps: int = 1000
    stage1_lr: float = 1e-3
    stage2_lr: float = 1e-3
    stage3_lr: float = 5e-4
    stage1_warmup: float = 0.1
    stage2_warmup: float = 0.1
    stage3_warmup: float = 0.05
    clip_norm: float = 1.0
    weight_decay: float = 0.0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    holdout_every: int = 10

    def stage_lr(self, stage: int) -> float:
        return getattr(self, f"stage{stage}_lr")

    def stage_warmup(self, stage: int) -> float:
        return getattr(self, f"stage{stage}_warmup")

    def stage_steps(self, stage: int) -> int:
        return getattr(self, f"stage{stage}_steps")


_FIELD_TYPES = {f.name: f.type for f in fields(ToyConfig)}


def _parse_value(key: str, raw: str):
    if key not in _FIELD_TYPES:
        raise KeyError(f"unknown config key: {key}")
    ftype = _FIELD_TYPES[key]
    return int(raw) if ftype == "int" or ftype is int else float(raw)


def parse_config_file(path: str) -> dict:
    """Parse `key = value` lines; '#' starts a comment; blank lines ignored."""
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, raw = (s.strip() for s in line.split("=", 1))
            out[key] = _parse_value(key, raw)
    return out


def load_config(path: str | None = None, overrides: dict | None = None) -> ToyConfig:
    """Build a config from defaults, then file values, then explicit overrides."""
    values = {}
    if path:
        values.update(parse_config_file(path))
    for key, raw in (overrides or {}).items():
        values[key] = _parse_value(key, raw) if isinstance(raw, str) else raw
    return ToyConfig(**values)
