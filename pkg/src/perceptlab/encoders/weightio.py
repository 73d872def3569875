"""Binary weight files.

Layout (little-endian)::

    b"OSLW"  u32 version=1  u32 tensor_count
    per tensor: u16 name_len, name (UTF-8), u8 rank, u32 * rank dims, float32 data
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .c3d import EncoderConfig, WeightBundle

MAGIC = b"OSLW"
VERSION = 1


def dumps(weights: WeightBundle) -> bytes:
    parts = [MAGIC, struct.pack("<II", VERSION, len(weights))]
    for name, arr in weights.items():
        raw = name.encode("utf-8")
        arr = np.ascontiguousarray(arr, dtype="<f4")
        parts.append(struct.pack("<H", len(raw)) + raw)
        parts.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def loads(data: bytes, config: EncoderConfig | None = None) -> WeightBundle:
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    pos = 4

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(data):
            raise FormatError("weight file truncated")
        vals = struct.unpack_from(fmt, data, pos)
        pos += size
        return vals

    version, count = take("<II")
    if version != VERSION:
        raise FormatError(f"unsupported weight format version {version}")
    weights = WeightBundle()
    for _ in range(count):
        (name_len,) = take("<H")
        if pos + name_len > len(data):
            raise FormatError("weight file truncated")
        name = data[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (rank,) = take("<B")
        dims = take(f"<{rank}I") if rank else ()
        n = int(np.prod(dims)) if dims else 1
        if pos + 4 * n > len(data):
            raise FormatError(f"tensor {name} truncated")
        weights[name] = np.frombuffer(data, dtype="<f4", count=n, offset=pos).reshape(dims).astype(np.float32)
        pos += 4 * n
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after last tensor")
    if config is not None:
        try:
            weights.validate(config)
        except ValueError as exc:
            raise FormatError(f"weights do not match encoder config: {exc}") from None
    return weights


def save_weights(weights: WeightBundle, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(dumps(weights))
    return path


def load_weights(path: str | os.PathLike, config: EncoderConfig | None = None) -> WeightBundle:
    return loads(Path(path).read_bytes(), config)
