"""HTTP service contracts: endpoints, errors, sessions, determinism."""

import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient
from PIL import Image

from streetshop.service import ServiceConfig, _SessionStore, QuerySession, create_app


@pytest.fixture(scope="module")
def service_config(
    gan_checkpoint_path, embedder_checkpoint_path, catalog_index_path, shopping_catalog, workspace
):
    return ServiceConfig(
        gan_checkpoint=str(gan_checkpoint_path),
        embedder_checkpoint=str(embedder_checkpoint_path),
        index_path=str(catalog_index_path),
        catalog_manifest=str(shopping_catalog.base_dir / "shopping_manifest.jsonl"),
        spool_dir=str(workspace / "spool"),
        session_capacity=4,
    )


@pytest.fixture(scope="module")
def client(service_config):
    return TestClient(create_app(service_config))


@pytest.fixture(scope="module")
def street_photo_bytes(paired_dataset):
    record = next(r for r in paired_dataset.records if r.role == "street")
    return paired_dataset.resolve(record.image_path).read_bytes()


def post_query(client, payload, k=None):
    url = "/api/query" if k is None else f"/api/query?k={k}"
    return client.post(url, files={"photo": ("street.png", payload, "image/png")})


def test_health_reports_ok_and_index_size(client, catalog_index):
    body = client.get("/api/health").json()
    assert body["status"] == "ok"
    assert body["fingerprint_match"] is True
    assert body["index_size"] == len(catalog_index)
    assert body["uptime_seconds"] >= 0
    assert len(body["fingerprints"]["embedder"]) == 64  # hex sha256


def test_query_returns_ranked_matches(client, street_photo_bytes):
    body = post_query(client, street_photo_bytes, k=5).json()
    assert body["k"] == 5
    assert len(body["matches"]) == 5
    ranks = [m["rank"] for m in body["matches"]]
    scores = [m["score"] for m in body["matches"]]
    assert ranks == [1, 2, 3, 4, 5]
    assert scores == sorted(scores)
    for m in body["matches"]:
        assert m["category"]
        assert m["image_url"].startswith("/api/products/")
    assert body["garment_url"].endswith("/garment.png")


def test_query_default_k(client, street_photo_bytes, service_config):
    body = post_query(client, street_photo_bytes).json()
    assert body["k"] == service_config.default_k
    assert len(body["matches"]) == service_config.default_k


def test_query_deterministic_for_fixed_inputs(client, street_photo_bytes):
    a = post_query(client, street_photo_bytes, k=4).json()
    b = post_query(client, street_photo_bytes, k=4).json()
    assert [(m["product_id"], m["score"]) for m in a["matches"]] == [
        (m["product_id"], m["score"]) for m in b["matches"]
    ]


def test_garment_image_retrievable_and_valid_png(client, street_photo_bytes):
    body = post_query(client, street_photo_bytes, k=1).json()
    r = client.get(body["garment_url"])
    assert r.status_code == 200
    assert r.headers["content-type"] == "image/png"
    im = Image.open(io.BytesIO(r.content))
    assert im.size == (64, 64)


def test_every_result_resolves_via_products_endpoint(client, street_photo_bytes):
    body = post_query(client, street_photo_bytes, k=8).json()
    for m in body["matches"]:
        detail = client.get(f"/api/products/{m['product_id']}")
        assert detail.status_code == 200
        assert detail.json()["category"] == m["category"]
        image = client.get(detail.json()["image_url"])
        assert image.status_code == 200
        assert "immutable" in image.headers.get("cache-control", "")


def test_unknown_product_and_query_are_404(client):
    r = client.get("/api/products/no-such-product")
    assert r.status_code == 404
    assert r.json()["code"] == "unknown_product"
    r = client.get("/api/query/deadbeef/garment.png")
    assert r.status_code == 404
    assert r.json()["code"] == "unknown_query"


def test_k_out_of_range_rejected(client, street_photo_bytes):
    for k in (0, 51, -3):
        r = post_query(client, street_photo_bytes, k=k)
        assert r.status_code == 400
        assert r.json()["code"] == "invalid_k"


def test_undecodable_image_rejected(client):
    r = post_query(client, b"definitely not an image", k=3)
    assert r.status_code == 400
    body = r.json()
    assert body["code"] == "invalid_image"
    assert "message" in body


def test_oversized_upload_rejected(
    gan_checkpoint_path, embedder_checkpoint_path, catalog_index_path, shopping_catalog
):
    config = ServiceConfig(
        gan_checkpoint=str(gan_checkpoint_path),
        embedder_checkpoint=str(embedder_checkpoint_path),
        index_path=str(catalog_index_path),
        catalog_manifest=str(shopping_catalog.base_dir / "shopping_manifest.jsonl"),
        max_upload_bytes=1000,
    )
    tiny_client = TestClient(create_app(config))
    r = post_query(tiny_client, b"\x89PNG" + b"\x00" * 5000, k=1)
    assert r.status_code == 413
    assert r.json()["code"] == "payload_too_large"


def test_garment_urls_are_per_session(client, street_photo_bytes):
    a = post_query(client, street_photo_bytes, k=1).json()
    b = post_query(client, street_photo_bytes, k=1).json()
    assert a["query_id"] != b["query_id"]
    assert a["garment_url"] != b["garment_url"]


def test_session_lru_evicts_oldest(client, street_photo_bytes, service_config):
    ids = [post_query(client, street_photo_bytes, k=1).json()["query_id"] for _ in range(5)]
    # capacity is 4: the first session is gone, the last four remain
    assert client.get(f"/api/query/{ids[0]}/garment.png").status_code == 404
    for qid in ids[-4:]:
        assert client.get(f"/api/query/{qid}/garment.png").status_code == 200


def test_session_store_ttl(tmp_path):
    store = _SessionStore(capacity=10, ttl=0.05)
    f = tmp_path / "g.png"
    f.write_bytes(b"png")
    store.put(QuerySession("q1", 1, [], f, time.monotonic()))
    assert store.get("q1") is not None
    time.sleep(0.08)
    assert store.get("q1") is None
    assert not f.exists()


def test_config_validation():
    with pytest.raises(ValueError):
        ServiceConfig("a", "b", "c", product_root="x", default_k=0)
    with pytest.raises(ValueError):
        ServiceConfig("a", "b", "c", product_root="x", default_k=51)
    with pytest.raises(ValueError):
        ServiceConfig("a", "b", "c")  # no product source at all


def test_config_json_and_env_overrides(tmp_path):
    cfg = {
        "gan_checkpoint": "g.bin",
        "embedder_checkpoint": "e.bin",
        "index_path": "c.idx",
        "product_root": str(tmp_path),
        "port": 9000,
    }
    path = tmp_path / "service.json"
    path.write_text(json.dumps(cfg))
    config = ServiceConfig.from_json(path)
    assert config.port == 9000
    overridden = config.with_env_overrides(
        {"STREETSHOP_PORT": "9100", "STREETSHOP_DEFAULT_K": "9"}
    )
    assert overridden.port == 9100
    assert overridden.default_k == 9
    assert overridden.gan_checkpoint == "g.bin"
    # unrelated variables are ignored
    assert config.with_env_overrides({"PATH": "/usr/bin"}).port == 9000


def test_missing_files_fail_startup(tmp_path):
    config = ServiceConfig(
        gan_checkpoint=str(tmp_path / "nope.bin"),
        embedder_checkpoint=str(tmp_path / "nope2.bin"),
        index_path=str(tmp_path / "nope.idx"),
        product_root=str(tmp_path),
    )
    with pytest.raises(FileNotFoundError):
        create_app(config)


def test_degraded_health_on_fingerprint_mismatch(
    gan_checkpoint_path, embedder_checkpoint_path, shopping_catalog, embedder_checkpoint, workspace
):
    from streetshop.index import build_index, save_index

    index = build_index(shopping_catalog, embedder_checkpoint)
    index.embedder_fingerprint = b"\x13" * 32
    stale = workspace / "stale.idx"
    save_index(index, stale)
    config = ServiceConfig(
        gan_checkpoint=str(gan_checkpoint_path),
        embedder_checkpoint=str(embedder_checkpoint_path),
        index_path=str(stale),
        catalog_manifest=str(shopping_catalog.base_dir / "shopping_manifest.jsonl"),
    )
    body = TestClient(create_app(config)).get("/api/health").json()
    assert body["status"] == "degraded"
    assert body["fingerprint_match"] is False


def test_concurrent_queries_are_consistent(service_config, street_photo_bytes):
    import threading

    client = TestClient(create_app(service_config))
    results = [None] * 6
    errors = []

    def worker(i):
        try:
            r = post_query(client, street_photo_bytes, k=3)
            results[i] = [(m["product_id"], m["score"]) for m in r.json()["matches"]]
        except Exception as e:  # surfaced after join
            errors.append(e)

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(6)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert all(r == results[0] for r in results)
    # health stays reachable under load
    assert client.get("/api/health").status_code == 200
