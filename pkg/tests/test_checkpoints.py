"""Container format and checkpoint round trips, bit-exact."""

import json

import numpy as np
import pytest
import torch

from streetshop.container import (
    EMBEDDER_MAGIC,
    GAN_MAGIC,
    file_fingerprint,
    read_container,
    write_container,
)
from streetshop.errors import CheckpointFormatError
from streetshop.gan.training import GanCheckpoint
from streetshop.matcher.training import EmbedderCheckpoint


def sample_tensors(rng):
    return {
        "w": rng.normal(size=(4, 3, 5, 5)).astype(np.float32),
        "b": rng.normal(size=(4,)).astype(np.float32),
        "counter": np.array(7, dtype=np.int64),
    }


def test_container_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(8)
    tensors = sample_tensors(rng)
    meta = {"kind": "gan", "nested": {"a": [1, 2, 3]}}
    path = write_container(tmp_path / "c.bin", GAN_MAGIC, meta, tensors)
    meta2, tensors2 = read_container(path, GAN_MAGIC)
    assert meta2["kind"] == "gan"
    assert meta2["nested"] == {"a": [1, 2, 3]}
    for name, arr in tensors.items():
        assert tensors2[name].dtype == arr.dtype
        assert tensors2[name].shape == arr.shape
        assert tensors2[name].tobytes() == arr.tobytes()


def test_container_wrong_magic_rejected(tmp_path):
    path = write_container(tmp_path / "c.bin", GAN_MAGIC, {}, {})
    with pytest.raises(CheckpointFormatError):
        read_container(path, EMBEDDER_MAGIC)


def test_container_corrupt_magic_rejected(tmp_path):
    path = write_container(tmp_path / "c.bin", GAN_MAGIC, {}, {})
    blob = bytearray(path.read_bytes())
    blob[0] ^= 0xFF
    bad = tmp_path / "bad.bin"
    bad.write_bytes(bytes(blob))
    with pytest.raises(CheckpointFormatError):
        read_container(bad, GAN_MAGIC)


def test_container_truncation_rejected(tmp_path):
    rng = np.random.default_rng(9)
    path = write_container(tmp_path / "c.bin", GAN_MAGIC, {"k": 1}, sample_tensors(rng))
    blob = path.read_bytes()
    for cut in (4, len(blob) // 3, len(blob) - 3):
        bad = tmp_path / f"cut{cut}.bin"
        bad.write_bytes(blob[:cut])
        with pytest.raises(CheckpointFormatError):
            read_container(bad, GAN_MAGIC)


def test_container_garbage_header_rejected(tmp_path):
    import struct

    bad = tmp_path / "bad.bin"
    payload = b"{not json}"
    bad.write_bytes(GAN_MAGIC + struct.pack("<I", len(payload)) + payload)
    with pytest.raises(CheckpointFormatError):
        read_container(bad, GAN_MAGIC)


def test_fingerprint_is_file_sha256(tmp_path):
    import hashlib

    path = tmp_path / "f.bin"
    path.write_bytes(b"abc123")
    assert file_fingerprint(path) == hashlib.sha256(b"abc123").digest()
    assert len(file_fingerprint(path)) == 32


def test_gan_checkpoint_round_trip(gan_checkpoint, tmp_path):
    path = tmp_path / "gan.bin"
    gan_checkpoint.save(path)
    assert gan_checkpoint.fingerprint == file_fingerprint(path)

    loaded = GanCheckpoint.load(path)
    assert loaded.arch == gan_checkpoint.arch
    assert loaded.step_count == gan_checkpoint.step_count
    assert loaded.seed == gan_checkpoint.seed
    assert len(loaded.loss_history) == len(gan_checkpoint.loss_history)
    for state_name in ("converter_state", "d_r_state", "d_a_state"):
        a, b = getattr(gan_checkpoint, state_name), getattr(loaded, state_name)
        assert set(a) == set(b)
        for key in a:
            assert a[key].tobytes() == b[key].tobytes(), f"{state_name}/{key}"

    # loading restores a runnable converter producing identical outputs
    x = torch.rand(1, 3, 64, 64) * 2 - 1
    with torch.no_grad():
        y1 = gan_checkpoint.build_converter()(x)
        y2 = loaded.build_converter()(x)
    assert torch.equal(y1, y2)


def test_embedder_checkpoint_round_trip(embedder_checkpoint, tmp_path):
    path = tmp_path / "emb.bin"
    embedder_checkpoint.save(path)
    loaded = EmbedderCheckpoint.load(path)
    assert loaded.arch == embedder_checkpoint.arch
    assert loaded.class_table == embedder_checkpoint.class_table
    assert loaded.lam == embedder_checkpoint.lam
    assert loaded.alpha == embedder_checkpoint.alpha
    assert loaded.class_granularity == embedder_checkpoint.class_granularity
    assert loaded.centers.tobytes() == embedder_checkpoint.centers.tobytes()
    for key in embedder_checkpoint.embedder_state:
        assert (
            loaded.embedder_state[key].tobytes()
            == embedder_checkpoint.embedder_state[key].tobytes()
        )
    for key in embedder_checkpoint.head_state:
        assert loaded.head_state[key].tobytes() == embedder_checkpoint.head_state[key].tobytes()

    x = torch.rand(2, 3, 64, 64) * 2 - 1
    with torch.no_grad():
        v1 = embedder_checkpoint.build_embedder()(x)
        v2 = loaded.build_embedder()(x)
    assert torch.equal(v1, v2)


def test_checkpoint_kind_mismatch_rejected(gan_checkpoint, embedder_checkpoint, tmp_path):
    gan_path = tmp_path / "gan.bin"
    emb_path = tmp_path / "emb.bin"
    gan_checkpoint.save(gan_path)
    embedder_checkpoint.save(emb_path)
    with pytest.raises(CheckpointFormatError):
        GanCheckpoint.load(emb_path)
    with pytest.raises(CheckpointFormatError):
        EmbedderCheckpoint.load(gan_path)


def test_header_layout(tmp_path):
    path = write_container(tmp_path / "c.bin", GAN_MAGIC, {"zz": 1, "aa": 2}, {})
    blob = path.read_bytes()
    assert blob.startswith(GAN_MAGIC)
    header_len = int.from_bytes(blob[len(GAN_MAGIC) : len(GAN_MAGIC) + 4], "little")
    raw = blob[len(GAN_MAGIC) + 4 : len(GAN_MAGIC) + 4 + header_len]
    header = json.loads(raw)
    assert header["zz"] == 1
    assert header["aa"] == 2
    assert header["tensors"] == []
    assert raw == json.dumps(header, sort_keys=True).encode()  # canonical key order
