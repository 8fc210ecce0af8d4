"""Persistent embedding store over the shop catalog and exact top-k retrieval.

Entries are one per catalog image. The first image of a product keeps the
bare product id; further images get image-level ids of the form
``<product_id>#<n>``, so the parent product is always recoverable from
the entry id. Queries score every entry with plain L2 distance (monotone
with cosine distance on unit vectors), optionally dedupe to the
best-scoring image per product, and break exact ties by product id.

The on-disk format is little-endian: the magic, a uint32 entry count,
per-entry (length-prefixed UTF-8 id, length-prefixed UTF-8 category,
128 float32 components), and a trailing 32-byte embedder fingerprint.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .data.manifest import DatasetManifest
from .errors import EmptyIndexError, IndexFormatError
from .matcher.training import EmbedderCheckpoint, embed_manifest

INDEX_MAGIC = b"PSHK-IDX\x01"
FINGERPRINT_BYTES = 32

_U32 = struct.Struct("<I")
_U16 = struct.Struct("<H")


@dataclass(frozen=True)
class IndexEntry:
    entry_id: str
    category: str
    vector: np.ndarray  # float32, unit norm

    @property
    def product_id(self) -> str:
        return self.entry_id.split("#", 1)[0]


@dataclass(frozen=True)
class RankedMatch:
    product_id: str
    score: float  # L2 distance, >= 0
    rank: int  # 1-based, contiguous


@dataclass
class EmbeddingIndex:
    entries: list[IndexEntry]
    embedder_fingerprint: bytes = b"\x00" * FINGERPRINT_BYTES
    dim: int = 128

    def __post_init__(self):
        if len(self.embedder_fingerprint) != FINGERPRINT_BYTES:
            raise ValueError(f"fingerprint must be {FINGERPRINT_BYTES} bytes")
        for e in self.entries:
            if e.vector.shape != (self.dim,):
                raise ValueError(f"entry {e.entry_id!r} has vector shape {e.vector.shape}, expected ({self.dim},)")

    def __len__(self) -> int:
        return len(self.entries)

    def categories_by_product(self) -> dict[str, str]:
        return {e.product_id: e.category for e in self.entries}

    def matrix(self) -> np.ndarray:
        if not self.entries:
            return np.zeros((0, self.dim), dtype=np.float32)
        return np.stack([e.vector for e in self.entries])


def build_index(manifest: DatasetManifest, checkpoint: EmbedderCheckpoint) -> EmbeddingIndex:
    """Embed every catalog image in manifest order; one entry per image."""
    counters: dict[str, int] = {}
    entries = []
    for record, vector in embed_manifest(manifest, checkpoint):
        n = counters.get(record.product_id, 0)
        counters[record.product_id] = n + 1
        entry_id = record.product_id if n == 0 else f"{record.product_id}#{n}"
        entries.append(IndexEntry(entry_id, record.category, vector.astype(np.float32)))
    fingerprint = checkpoint.fingerprint or b"\x00" * FINGERPRINT_BYTES
    return EmbeddingIndex(entries, fingerprint, dim=checkpoint.arch.embedding_dim)


def query(
    index: EmbeddingIndex, q, k: int, dedupe_products: bool = True
) -> list[RankedMatch]:
    """Top-k entries by ascending L2 distance to the query vector.

    With product dedupe (the default) each product is represented by its
    best-scoring image before ranking. Exact ties order lexicographically
    by product id; if k exceeds what is available, everything is returned.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(index) == 0:
        raise EmptyIndexError("cannot query an empty index")
    if torch.is_tensor(q):
        q = q.detach().cpu().numpy()
    q = np.asarray(q, dtype=np.float32).reshape(-1)
    if q.shape != (index.dim,):
        raise ValueError(f"query vector must have dim {index.dim}, got {q.shape}")

    diffs = index.matrix().astype(np.float64) - q.astype(np.float64)[None, :]
    scores = np.sqrt(np.sum(diffs * diffs, axis=1))

    if dedupe_products:
        best: dict[str, float] = {}
        for entry, score in zip(index.entries, scores):
            pid = entry.product_id
            if pid not in best or score < best[pid]:
                best[pid] = float(score)
        ranked = sorted(best.items(), key=lambda kv: (kv[1], kv[0]))
    else:
        ranked = sorted(
            ((e.entry_id, float(s)) for e, s in zip(index.entries, scores)),
            key=lambda kv: (kv[1], kv[0]),
        )

    top = ranked[: min(k, len(ranked))]
    return [RankedMatch(pid, score, rank) for rank, (pid, score) in enumerate(top, start=1)]


def save_index(index: EmbeddingIndex, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = bytearray()
    out += INDEX_MAGIC
    out += _U32.pack(len(index.entries))
    for e in index.entries:
        for text in (e.entry_id, e.category):
            data = text.encode("utf-8")
            if len(data) > 0xFFFF:
                raise ValueError(f"string too long for index format: {text[:32]!r}...")
            out += _U16.pack(len(data))
            out += data
        out += np.ascontiguousarray(e.vector, dtype="<f4").tobytes()
    out += index.embedder_fingerprint
    path.write_bytes(bytes(out))
    return path


def load_index(path) -> EmbeddingIndex:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < len(INDEX_MAGIC) + _U32.size:
        raise IndexFormatError(f"{path}: file too short for an index")
    if raw[: len(INDEX_MAGIC)] != INDEX_MAGIC:
        raise IndexFormatError(f"{path}: bad magic {raw[:len(INDEX_MAGIC)]!r}")
    (count,) = _U32.unpack_from(raw, len(INDEX_MAGIC))
    pos = len(INDEX_MAGIC) + _U32.size
    dim = 128
    vec_bytes = dim * 4

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(raw):
            raise IndexFormatError(f"{path}: truncated index file")
        chunk = raw[pos : pos + n]
        pos += n
        return chunk

    entries = []
    for _ in range(count):
        (id_len,) = _U16.unpack(take(_U16.size))
        entry_id = take(id_len).decode("utf-8")
        (cat_len,) = _U16.unpack(take(_U16.size))
        category = take(cat_len).decode("utf-8")
        vector = np.frombuffer(take(vec_bytes), dtype="<f4").copy()
        entries.append(IndexEntry(entry_id, category, vector))
    fingerprint = take(FINGERPRINT_BYTES)
    if pos != len(raw):
        raise IndexFormatError(f"{path}: {len(raw) - pos} trailing bytes after index payload")
    return EmbeddingIndex(entries, fingerprint, dim=dim)
