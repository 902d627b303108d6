"""Binary checkpoint format: round trips, corruption detection, model loading."""

import numpy as np
import pytest

from ovis_toy.checkpoint import (
    CheckpointError,
    MAGIC,
    load_checkpoint,
    load_into_model,
    save_checkpoint,
    save_model,
)
from ovis_toy.config import ToyConfig
from ovis_toy.model import build_model


def small_cfg():
    return ToyConfig(image_size=32, patch_size=16, enc_dim=8, enc_blocks=2,
                     enc_heads=2, visual_vocab=16, embed_dim=8, llm_blocks=1,
                     llm_heads=2, text_vocab=64, max_seq=64)


class TestRoundTrip:
    def test_arrays_survive(self, tmp_path):
        arrays = {
            "a": np.arange(6, dtype=np.float32).reshape(2, 3),
            "b.c": np.array([1.5], dtype=np.float32),
            "empty-ish": np.zeros((1, 1), dtype=np.float32),
        }
        path = str(tmp_path / "ck.bin")
        save_checkpoint(path, arrays)
        loaded = load_checkpoint(path)
        assert set(loaded) == set(arrays)
        for name in arrays:
            np.testing.assert_array_equal(loaded[name], arrays[name])
            assert loaded[name].dtype == np.float32

    def test_save_load_save_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(0)
        arrays = {f"p{i}": rng.normal(size=(3, 4)).astype(np.float32) for i in range(5)}
        p1, p2 = str(tmp_path / "one.bin"), str(tmp_path / "two.bin")
        save_checkpoint(p1, arrays)
        save_checkpoint(p2, load_checkpoint(p1))
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_insertion_order_does_not_change_bytes(self, tmp_path):
        a = np.ones((2, 2), dtype=np.float32)
        b = np.zeros((1, 3), dtype=np.float32)
        p1, p2 = str(tmp_path / "one.bin"), str(tmp_path / "two.bin")
        save_checkpoint(p1, {"x": a, "y": b})
        save_checkpoint(p2, {"y": b, "x": a})
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_magic_prefix(self, tmp_path):
        path = str(tmp_path / "ck.bin")
        save_checkpoint(path, {"a": np.ones((1, 1), dtype=np.float32)})
        assert open(path, "rb").read().startswith(MAGIC)


class TestCorruption:
    def _saved(self, tmp_path):
        path = str(tmp_path / "ck.bin")
        save_checkpoint(path, {"w": np.arange(8, dtype=np.float32).reshape(2, 4)})
        return path

    def test_flipped_payload_byte_refused(self, tmp_path):
        path = self._saved(tmp_path)
        raw = bytearray(open(path, "rb").read())
        raw[-12] ^= 0xFF  # a payload byte, ahead of the 8-byte checksum
        open(path, "wb").write(bytes(raw))
        with pytest.raises(CheckpointError, match="checksum"):
            load_checkpoint(path)

    def test_bad_magic_refused(self, tmp_path):
        path = self._saved(tmp_path)
        raw = bytearray(open(path, "rb").read())
        raw[0] ^= 0xFF
        open(path, "wb").write(bytes(raw))
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_truncation_refused(self, tmp_path):
        path = self._saved(tmp_path)
        raw = open(path, "rb").read()
        open(path, "wb").write(raw[:-5])
        with pytest.raises(CheckpointError):
            load_checkpoint(path)

    def test_trailing_garbage_refused(self, tmp_path):
        path = self._saved(tmp_path)
        with open(path, "ab") as f:
            f.write(b"junk")
        with pytest.raises(CheckpointError):
            load_checkpoint(path)


class TestModelIO:
    def test_model_round_trip_bitwise(self, tmp_path):
        cfg = small_cfg()
        model = build_model("ovis", cfg, seed=3)
        path = str(tmp_path / "model.bin")
        save_model(path, model)
        other = build_model("ovis", cfg, seed=9)
        load_into_model(path, other)
        for name, p in model.named_parameters().items():
            np.testing.assert_array_equal(p.data, other.named_parameters()[name].data)

    def test_mismatched_architecture_refused(self, tmp_path):
        cfg = small_cfg()
        path = str(tmp_path / "model.bin")
        save_model(path, build_model("ovis", cfg, seed=0))
        with pytest.raises(CheckpointError):
            load_into_model(path, build_model("connector", cfg, seed=0))

    def test_mismatched_shape_refused(self, tmp_path):
        path = str(tmp_path / "model.bin")
        save_model(path, build_model("ovis", small_cfg(), seed=0))
        bigger = ToyConfig(**{**small_cfg().__dict__, "enc_dim": 16})
        with pytest.raises(CheckpointError):
            load_into_model(path, build_model("ovis", bigger, seed=0))
