"""Synthetic vision-language data: procedural shape images plus grammar-generated
captions, descriptions and instruction question/answer pairs.

Images are rendered deterministically from a compact object spec, so every
target string has an exact ground truth (the caption of a record can be
recomputed from its objects).  Records are stored one JSON object per line.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import vocab
from .assembler import MultimodalSample
from .rng import rng_stream

# single-channel color coding: each color name maps to one intensity
COLOR_LEVELS = {"red": 0.4, "green": 0.6, "blue": 0.8, "white": 1.0}
SIZE_PX = {"small": 8, "large": 14}
GRID = 2  # objects live on a GRID x GRID cell layout

KINDS = ("caption", "description", "instruction")


@dataclass
class DatasetRecord:
    kind: str
    objects: list  # [{"shape","color","cell":[cx,cy],"size"}, ...]
    prompt: str
    target: str

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind, "objects": self.objects, "prompt": self.prompt, "target": self.target},
            sort_keys=True,
        )

    @staticmethod
    def from_json(line: str) -> "DatasetRecord":
        d = json.loads(line)
        return DatasetRecord(kind=d["kind"], objects=d["objects"], prompt=d["prompt"], target=d["target"])


def position_name(cell) -> str:
    cx, cy = cell
    return ("top " if cy == 0 else "bottom ") + ("left" if cx == 0 else "right")


def render(objects, image_size: int = 32, channels: int = 1) -> np.ndarray:
    """Rasterize the object list onto a channels x W x H canvas, values in [0,1]."""
    img = np.zeros((channels, image_size, image_size), dtype=np.float32)
    cell = image_size // GRID
    for obj in objects:
        cx, cy = obj["cell"]
        level = COLOR_LEVELS[obj["color"]]
        size = SIZE_PX[obj["size"]]
        ox, oy = cx * cell + cell // 2, cy * cell + cell // 2
        half = size // 2
        if obj["shape"] == "square":
            img[:, ox - half : ox + half, oy - half : oy + half] = level
        elif obj["shape"] == "circle":
            xs, ys = np.meshgrid(np.arange(image_size), np.arange(image_size), indexing="ij")
            disk = (xs - ox) ** 2 + (ys - oy) ** 2 <= half**2
            img[:, disk] = level
        elif obj["shape"] == "cross":
            t = 2  # bar half-thickness
            img[:, ox - half : ox + half, oy - t : oy + t] = level
            img[:, ox - t : ox + t, oy - half : oy + half] = level
        else:
            raise ValueError(f"unknown shape {obj['shape']!r}")
    return np.clip(img, 0.0, 1.0)


def caption_of(obj) -> str:
    return f"{obj['color']} {obj['shape']} {position_name(obj['cell'])}"


def _random_object(rng, cell) -> dict:
    return {
        "shape": str(rng.choice(vocab.SHAPES)),
        "color": str(rng.choice(vocab.COLORS)),
        "cell": [int(cell[0]), int(cell[1])],
        "size": str(rng.choice(["small", "large"])),
    }


def _random_objects(rng, count: int) -> list:
    cells = [(x, y) for x in range(GRID) for y in range(GRID)]
    chosen = rng.choice(len(cells), size=count, replace=False)
    return [_random_object(rng, cells[i]) for i in chosen]


def make_caption_record(rng) -> DatasetRecord:
    objects = _random_objects(rng, 1)
    return DatasetRecord(
        kind="caption",
        objects=objects,
        prompt="<image> 's caption :",
        target=caption_of(objects[0]),
    )


def make_description_record(rng) -> DatasetRecord:
    objects = _random_objects(rng, int(rng.integers(1, 3)))
    parts = [f"the image shows a {caption_of(objects[0])} ."]
    for obj in objects[1:]:
        parts.append(f"and a {caption_of(obj)} .")
    parts.append(f"it is {objects[0]['size']} .")
    return DatasetRecord(
        kind="description",
        objects=objects,
        prompt="<image> describe the image",
        target=" ".join(parts),
    )


def make_instruction_record(rng) -> DatasetRecord:
    objects = _random_objects(rng, int(rng.integers(1, 4)))
    qtype = str(rng.choice(["count", "color", "where"]))
    if qtype == "count":
        shape = str(rng.choice(vocab.SHAPES))
        count = sum(1 for o in objects if o["shape"] == shape)
        plural = vocab.SHAPES_PLURAL[vocab.SHAPES.index(shape)]
        prompt, target = f"<image> how many {plural} ?", str(count)
    else:
        # pick a shape that occurs exactly once so the answer is unambiguous
        unique = [s for s in vocab.SHAPES if sum(o["shape"] == s for o in objects) == 1]
        if not unique:
            objects = _random_objects(rng, 1)
            unique = [objects[0]["shape"]]
        shape = unique[int(rng.integers(len(unique)))]
        obj = next(o for o in objects if o["shape"] == shape)
        if qtype == "color":
            prompt, target = f"<image> what color is the {shape} ?", obj["color"]
        else:
            prompt, target = f"<image> where is the {shape} ?", position_name(obj["cell"])
    return DatasetRecord(kind="instruction", objects=objects, prompt=prompt, target=target)


_MAKERS = {
    "caption": make_caption_record,
    "description": make_description_record,
    "instruction": make_instruction_record,
}


def generate_records(seed: int, kind: str, count: int) -> list:
    """Deterministic record list; record i draws from its own derived stream."""
    if count < 1:
        raise ValueError("count must be >= 1")
    return [_MAKERS[kind](rng_stream(seed, "data", kind, i)) for i in range(count)]


def write_dataset(seed: int, counts: dict, out_dir: str) -> dict:
    """Write <kind>s.jsonl per kind under out_dir; returns {kind: path}."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {}
    for kind in KINDS:
        n = counts.get(kind, 0)
        if n < 1:
            raise ValueError(f"count for {kind} must be >= 1")
        path = os.path.join(out_dir, f"{kind}s.jsonl")
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for rec in generate_records(seed, kind, n):
                f.write(rec.to_json() + "\n")
        paths[kind] = path
    return paths


def read_records(path: str) -> list:
    with open(path, encoding="utf-8") as f:
        return [DatasetRecord.from_json(line) for line in f if line.strip()]


def record_to_sample(rec: DatasetRecord, image_size: int = 32, channels: int = 1) -> MultimodalSample:
    return MultimodalSample(
        prompt_ids=vocab.encode(rec.prompt),
        target_ids=vocab.encode(rec.target) + [vocab.EOS_ID],
        image=render(rec.objects, image_size=image_size, channels=channels),
    )


def split_holdout(records: list, every: int = 10):
    """Deterministic split: every `every`-th record is held out."""
    train = [r for i, r in enumerate(records) if i % every != 0]
    held = [r for i, r in enumerate(records) if i % every == 0]
    return train, held
