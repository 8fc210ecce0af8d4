"""Versioned binary container for model checkpoints.

Layout: magic bytes, a little-endian uint32 header length, a UTF-8 JSON
header, then the concatenated tensor payload. Every tensor is stored as
little-endian float32; the header records each tensor's name, shape,
original dtype and byte span, so integer buffers (batch-norm step
counters) survive a round trip as long as their values fit exactly in
float32.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointFormatError

GAN_MAGIC = b"PSHK-GAN\x01"
EMBEDDER_MAGIC = b"PSHK-EMB\x01"

_HEADER_LEN = struct.Struct("<I")


def write_container(path, magic: bytes, meta: dict, tensors: dict[str, np.ndarray]) -> Path:
    """Serialize meta plus named tensors; returns the written path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    entries = []
    blobs = []
    offset = 0
    for name, arr in tensors.items():
        arr = np.asarray(arr)
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": str(arr.dtype),
                "offset": offset,
                "nbytes": len(data),
            }
        )
        blobs.append(data)
        offset += len(data)

    header = dict(meta)
    header["tensors"] = entries
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(magic)
        f.write(_HEADER_LEN.pack(len(header_bytes)))
        f.write(header_bytes)
        for blob in blobs:
            f.write(blob)
    return path


def read_container(path, magic: bytes) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse a container written by write_container.

    Raises CheckpointFormatError on a wrong magic, truncation, or a
    header that does not parse.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(magic) + _HEADER_LEN.size:
        raise CheckpointFormatError(f"{path}: file too short for a checkpoint container")
    if raw[: len(magic)] != magic:
        raise CheckpointFormatError(
            f"{path}: bad magic {raw[:len(magic)]!r}, expected {magic!r}"
        )
    (header_len,) = _HEADER_LEN.unpack_from(raw, len(magic))
    header_start = len(magic) + _HEADER_LEN.size
    payload_start = header_start + header_len
    if len(raw) < payload_start:
        raise CheckpointFormatError(f"{path}: truncated header")
    try:
        header = json.loads(raw[header_start:payload_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointFormatError(f"{path}: corrupt header: {e}") from e

    tensors = {}
    for entry in header.get("tensors", []):
        begin = payload_start + entry["offset"]
        end = begin + entry["nbytes"]
        if end > len(raw):
            raise CheckpointFormatError(f"{path}: truncated tensor {entry['name']!r}")
        flat = np.frombuffer(raw[begin:end], dtype="<f4")
        arr = flat.reshape(entry["shape"]).astype(entry["dtype"])
        tensors[entry["name"]] = arr
    meta = {k: v for k, v in header.items() if k != "tensors"}
    return meta, tensors


def file_fingerprint(path) -> bytes:
    """32-byte SHA-256 of the file contents, used to tie an index to its embedder."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.digest()
