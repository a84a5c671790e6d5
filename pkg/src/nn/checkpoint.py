"""Binary checkpoint format.

Layout (little-endian):
    magic   4 bytes  b"SSCK"
    version u16
    count   u32
    count records of:
        name_len u16, name (UTF-8), rank u8, dims u32 * rank, values f32 * prod(dims)
"""

from __future__ import annotations

import struct
from collections.abc import Mapping
from pathlib import Path

import numpy as np

from src.errors import CheckpointError

MAGIC = b"SSCK"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<HI")


def encode_checkpoint(tensors: Mapping[str, np.ndarray]) -> bytes:
    """Serialise named arrays; values are stored as float32."""
    parts = [MAGIC, _HEADER.pack(FORMAT_VERSION, len(tensors))]
    for name, array in tensors.items():
        encoded = name.encode("utf-8")
        values = np.asarray(array, dtype="<f4")
        if len(encoded) > 0xFFFF or values.ndim > 0xFF:
            raise CheckpointError(f"Tensor '{name}' cannot be stored (name or rank too large)")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack(f"<B{values.ndim}I", values.ndim, *values.shape))
        parts.append(values.tobytes())
    return b"".join(parts)


def decode_checkpoint(data: bytes, source: str = "<bytes>") -> dict[str, np.ndarray]:
    """Parse checkpoint bytes into float32 arrays, in file order.

    Raises:
        CheckpointError: On bad magic, unknown version or truncated data.
    """
    if data[:4] != MAGIC:
        raise CheckpointError(f"{source}: not a checkpoint (magic {data[:4]!r})")
    try:
        version, count = _HEADER.unpack_from(data, 4)
        if version != FORMAT_VERSION:
            raise CheckpointError(f"{source}: unsupported checkpoint version {version}")
        offset = 4 + _HEADER.size
        tensors: dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", data, offset)
            offset += 2
            name = data[offset : offset + name_len].decode("utf-8")
            offset += name_len
            (rank,) = struct.unpack_from("<B", data, offset)
            offset += 1
            dims = struct.unpack_from(f"<{rank}I", data, offset)
            offset += 4 * rank
            size = int(np.prod(dims, dtype=np.int64))
            end = offset + 4 * size
            if end > len(data):
                raise CheckpointError(f"{source}: truncated tensor '{name}'")
            tensors[name] = np.frombuffer(data, dtype="<f4", count=size, offset=offset).reshape(dims).astype(
                np.float32
            )
            offset = end
    except (struct.error, UnicodeDecodeError) as e:
        raise CheckpointError(f"{source}: corrupt checkpoint ({e})") from e
    if offset != len(data):
        raise CheckpointError(f"{source}: {len(data) - offset} unexpected trailing bytes")
    return tensors


def save_checkpoint(path: Path, tensors: Mapping[str, np.ndarray]) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(encode_checkpoint(tensors))
    except OSError as e:
        raise CheckpointError(f"Cannot write checkpoint {path}: {e}") from e


def load_checkpoint(path: Path) -> dict[str, np.ndarray]:
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
    return decode_checkpoint(data, source=str(path))
