"""Exact retrieval against a brute-force oracle, plus the binary format."""

import numpy as np
import pytest

from streetshop.errors import EmptyIndexError, IndexFormatError
from streetshop.index import (
    INDEX_MAGIC,
    EmbeddingIndex,
    IndexEntry,
    RankedMatch,
    load_index,
    query,
    save_index,
)

N_CATALOGS = 200
MAX_ENTRIES = 1000
DIM = 128


def unit(v: np.ndarray) -> np.ndarray:
    return (v / np.linalg.norm(v)).astype(np.float32)


def random_index(rng, n_entries, n_products=None, duplicate_fraction=0.0):
    n_products = n_products or max(1, n_entries // 2)
    categories = ["a", "b", "c"]
    entries = []
    base_vectors = [unit(rng.normal(size=DIM)) for _ in range(n_entries)]
    for i in range(n_entries):
        pid = f"p{rng.integers(n_products):04d}"
        entry_id = pid if not any(e.product_id == pid for e in entries) else f"{pid}#{i}"
        vec = base_vectors[i]
        if duplicate_fraction and rng.random() < duplicate_fraction and i > 0:
            vec = entries[rng.integers(len(entries))].vector  # exact tie material
        entries.append(IndexEntry(entry_id, categories[int(rng.integers(3))], vec))
    return EmbeddingIndex(entries)


def oracle_query(index, q, k, dedupe):
    """Exhaustive sort with the documented tie rule, written independently."""
    scored = []
    for e in index.entries:
        d = float(np.sqrt(((e.vector.astype(np.float64) - q.astype(np.float64)) ** 2).sum()))
        scored.append((e.product_id if dedupe else e.entry_id, d))
    if dedupe:
        best = {}
        for pid, d in scored:
            if pid not in best or d < best[pid]:
                best[pid] = d
        scored = list(best.items())
    scored.sort(key=lambda t: (t[1], t[0]))
    return scored[: min(k, len(scored))]


def test_query_matches_oracle_over_random_catalogs():
    rng = np.random.default_rng(55)
    for trial in range(N_CATALOGS):
        n = int(rng.integers(1, MAX_ENTRIES + 1))
        dup = 0.3 if trial % 3 == 0 else 0.0
        index = random_index(rng, n, duplicate_fraction=dup)
        q = unit(rng.normal(size=DIM))
        k = int(rng.integers(1, n + 5))
        dedupe = bool(trial % 2)
        got = query(index, q, k, dedupe_products=dedupe)
        want = oracle_query(index, q, k, dedupe)
        assert [m.product_id for m in got] == [pid for pid, _ in want], f"trial {trial}"
        np.testing.assert_allclose(
            [m.score for m in got], [d for _, d in want], rtol=1e-6, atol=1e-9
        )
        assert [m.rank for m in got] == list(range(1, len(got) + 1))


def test_exact_ties_resolve_by_product_id():
    v = unit(np.ones(DIM))
    entries = [IndexEntry(pid, "a", v.copy()) for pid in ("zz", "mm", "aa")]
    got = query(EmbeddingIndex(entries), v, 3)
    assert [m.product_id for m in got] == ["aa", "mm", "zz"]
    assert all(m.score == got[0].score for m in got)


def test_dedupe_keeps_best_image_per_product():
    q = unit(np.ones(DIM))
    near = q
    far = unit(np.concatenate([[1.0], -np.ones(DIM - 1)]))
    entries = [
        IndexEntry("p1", "a", far.copy()),
        IndexEntry("p1#1", "a", near.copy()),
        IndexEntry("p2", "a", unit(np.arange(1, DIM + 1.0))),
    ]
    got = query(EmbeddingIndex(entries), q, 5)
    assert len(got) == 2  # p1 appears once
    assert got[0].product_id == "p1"
    assert got[0].score == pytest.approx(0.0, abs=1e-6)

    raw = query(EmbeddingIndex(entries), q, 5, dedupe_products=False)
    assert len(raw) == 3


def test_k_larger_than_catalog_returns_all():
    rng = np.random.default_rng(1)
    index = random_index(rng, 7, n_products=7)
    got = query(index, unit(rng.normal(size=DIM)), 100)
    assert len(got) == len({e.product_id for e in index.entries})


def test_empty_index_raises():
    with pytest.raises(EmptyIndexError):
        query(EmbeddingIndex([]), np.zeros(DIM, dtype=np.float32), 1)


def test_k_and_dim_validation():
    rng = np.random.default_rng(2)
    index = random_index(rng, 3)
    with pytest.raises(ValueError):
        query(index, unit(rng.normal(size=DIM)), 0)
    with pytest.raises(ValueError):
        query(index, np.zeros(64, dtype=np.float32), 1)


def test_entry_parent_product():
    assert IndexEntry("p12", "a", np.zeros(DIM, dtype=np.float32)).product_id == "p12"
    assert IndexEntry("p12#3", "a", np.zeros(DIM, dtype=np.float32)).product_id == "p12"


def test_save_load_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(77)
    index = random_index(rng, 50)
    index.embedder_fingerprint = bytes(rng.integers(0, 256, size=32, dtype=np.uint8))
    path = save_index(index, tmp_path / "catalog.idx")
    loaded = load_index(path)
    assert len(loaded) == len(index)
    assert loaded.embedder_fingerprint == index.embedder_fingerprint
    for a, b in zip(index.entries, loaded.entries):
        assert a.entry_id == b.entry_id
        assert a.category == b.category
        assert a.vector.tobytes() == b.vector.tobytes()


def test_save_load_unicode_ids(tmp_path):
    v = unit(np.ones(DIM))
    entries = [IndexEntry("pé-1", "Bridal Dress", v)]
    path = save_index(EmbeddingIndex(entries), tmp_path / "u.idx")
    loaded = load_index(path)
    assert loaded.entries[0].entry_id == "pé-1"
    assert loaded.entries[0].category == "Bridal Dress"


def test_corrupt_magic_rejected(tmp_path):
    rng = np.random.default_rng(3)
    path = save_index(random_index(rng, 4), tmp_path / "x.idx")
    blob = bytearray(path.read_bytes())
    blob[:4] = b"JUNK"
    bad = tmp_path / "bad.idx"
    bad.write_bytes(bytes(blob))
    with pytest.raises(IndexFormatError):
        load_index(bad)


def test_truncated_file_rejected(tmp_path):
    rng = np.random.default_rng(4)
    path = save_index(random_index(rng, 6), tmp_path / "x.idx")
    blob = path.read_bytes()
    for cut in (len(INDEX_MAGIC) + 2, len(blob) // 2, len(blob) - 7):
        bad = tmp_path / f"cut{cut}.idx"
        bad.write_bytes(blob[:cut])
        with pytest.raises(IndexFormatError):
            load_index(bad)


def test_trailing_garbage_rejected(tmp_path):
    rng = np.random.default_rng(5)
    path = save_index(random_index(rng, 2), tmp_path / "x.idx")
    bad = tmp_path / "pad.idx"
    bad.write_bytes(path.read_bytes() + b"\x00\x01")
    with pytest.raises(IndexFormatError):
        load_index(bad)


def test_ranked_match_fields():
    m = RankedMatch("p1", 0.25, 1)
    assert (m.product_id, m.score, m.rank) == ("p1", 0.25, 1)
