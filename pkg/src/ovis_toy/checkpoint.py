"""Binary checkpoint format.

Layout (little-endian throughout):
  magic "OVIS-TOY\\0" | u32 version | u32 param count
  per param: u16 name length | name utf-8 | u8 ndim | u32 dims... | u64 payload offset
  u64 payload byte length | payload (float32) | 8-byte blake2b checksum of payload

Round-trip load -> save is byte-identical; a corrupted checksum refuses to load.
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np

MAGIC = b"OVIS-TOY\x00"
VERSION = 1


class CheckpointError(Exception):
    pass


def _checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=8).digest()


def save_checkpoint(path: str, named_arrays: dict) -> None:
    """Write named float32 arrays; entries are sorted by name so the same
    arrays always produce byte-identical files."""
    header = bytearray()
    payload = bytearray()
    header += MAGIC
    header += struct.pack("<II", VERSION, len(named_arrays))
    for name in sorted(named_arrays):
        arr = named_arrays[name]
        arr = np.ascontiguousarray(arr, dtype="<f4")
        encoded = name.encode("utf-8")
        header += struct.pack("<H", len(encoded)) + encoded
        header += struct.pack("<B", arr.ndim)
        header += struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b""
        header += struct.pack("<Q", len(payload))
        payload += arr.tobytes()
    with open(path, "wb") as f:
        f.write(bytes(header))
        f.write(struct.pack("<Q", len(payload)))
        f.write(bytes(payload))
        f.write(_checksum(bytes(payload)))


def load_checkpoint(path: str) -> dict:
    """Read a checkpoint back into {name: float32 array}; validates the checksum."""
    with open(path, "rb") as f:
        blob = f.read()
    off = 0

    def take(n):
        nonlocal off
        if off + n > len(blob):
            raise CheckpointError("checkpoint truncated")
        chunk = blob[off : off + n]
        off += n
        return chunk

    if take(len(MAGIC)) != MAGIC:
        raise CheckpointError("bad magic: not an OVIS-TOY checkpoint")
    version, count = struct.unpack("<II", take(8))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    directory = []
    for _ in range(count):
        (namelen,) = struct.unpack("<H", take(2))
        name = take(namelen).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim)) if ndim else ()
        (offset,) = struct.unpack("<Q", take(8))
        directory.append((name, shape, offset))
    (payload_len,) = struct.unpack("<Q", take(8))
    payload = take(payload_len)
    checksum = take(8)
    if off != len(blob):
        raise CheckpointError("trailing bytes after checksum")
    if _checksum(payload) != checksum:
        raise CheckpointError("payload checksum mismatch; refusing to load")

    out = {}
    for name, shape, offset in directory:
        nbytes = 4 * int(np.prod(shape, dtype=np.int64)) if shape else 4
        arr = np.frombuffer(payload[offset : offset + nbytes], dtype="<f4").reshape(shape)
        out[name] = arr.copy()
    return out


def save_model(path: str, model) -> None:
    save_checkpoint(path, {name: p.data for name, p in model.named_parameters().items()})


def load_into_model(path: str, model) -> None:
    arrays = load_checkpoint(path)
    named = model.named_parameters()
    if set(arrays) != set(named):
        missing = set(named) - set(arrays)
        extra = set(arrays) - set(named)
        raise CheckpointError(f"parameter name mismatch (missing {sorted(missing)[:3]}, extra {sorted(extra)[:3]})")
    for name, arr in arrays.items():
        p = named[name]
        if tuple(arr.shape) != tuple(p.data.shape):
            raise CheckpointError(f"shape mismatch for {name}: {arr.shape} vs {p.data.shape}")
        p.data = arr.astype(p.data.dtype)
