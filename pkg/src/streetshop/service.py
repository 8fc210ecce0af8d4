"""HTTP query service: street photo in, generated garment plus ranked
shop matches out.

All model state (converter, embedder, index) is loaded once at startup
and treated as immutable; request handling shares it read-only under a
lock around inference. Recent query sessions live in a bounded LRU so
the UI can fetch the generated garment image, with spool files cleaned
up on eviction or TTL expiry. Errors are JSON bodies of the form
{"code": ..., "message": ...}.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
import threading
import time
import uuid
from collections import OrderedDict
from dataclasses import dataclass, replace
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import FileResponse, JSONResponse
from PIL import Image

from .data.augment import tensor_to_image
from .data.manifest import load_manifest
from .gan.training import GanCheckpoint, generate_garment
from .index import EmbeddingIndex, load_index, query
from .matcher.networks import embed
from .matcher.training import EmbedderCheckpoint

ENV_PREFIX = "STREETSHOP_"
MAX_K = 50


@dataclass(frozen=True)
class ServiceConfig:
    gan_checkpoint: str
    embedder_checkpoint: str
    index_path: str
    product_root: str = ""
    catalog_manifest: str = ""
    host: str = "127.0.0.1"
    port: int = 8765
    default_k: int = 5
    max_upload_bytes: int = 8 * 1024 * 1024
    session_capacity: int = 64
    spool_dir: str = ""
    spool_ttl_seconds: float = 3600.0

    def __post_init__(self):
        if not 1 <= self.default_k <= MAX_K:
            raise ValueError(f"default_k must be in [1, {MAX_K}], got {self.default_k}")
        if self.max_upload_bytes < 1:
            raise ValueError("max_upload_bytes must be positive")
        if self.session_capacity < 1:
            raise ValueError("session_capacity must be positive")
        if self.spool_ttl_seconds <= 0:
            raise ValueError("spool_ttl_seconds must be positive")
        if not self.product_root and not self.catalog_manifest:
            raise ValueError("config needs product_root or catalog_manifest to serve product images")

    @classmethod
    def from_dict(cls, d: dict) -> "ServiceConfig":
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ServiceConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def with_env_overrides(self, env=None) -> "ServiceConfig":
        """Apply STREETSHOP_<FIELD> environment overrides, e.g. STREETSHOP_PORT."""
        env = os.environ if env is None else env
        changes = {}
        for name, f in self.__dataclass_fields__.items():
            raw = env.get(ENV_PREFIX + name.upper())
            if raw is None:
                continue
            kind = f.type if isinstance(f.type, type) else type(getattr(self, name))
            changes[name] = kind(raw) if kind is not bool else raw.lower() in ("1", "true", "yes")
        return replace(self, **changes) if changes else self

    def validate_paths(self):
        for label, p in (
            ("gan_checkpoint", self.gan_checkpoint),
            ("embedder_checkpoint", self.embedder_checkpoint),
            ("index_path", self.index_path),
        ):
            if not Path(p).is_file():
                raise FileNotFoundError(f"{label}: no such file: {p}")
        if self.catalog_manifest and not Path(self.catalog_manifest).is_file():
            raise FileNotFoundError(f"catalog_manifest: no such file: {self.catalog_manifest}")
        if self.product_root and not Path(self.product_root).is_dir():
            raise FileNotFoundError(f"product_root: no such directory: {self.product_root}")


@dataclass
class QuerySession:
    query_id: str
    k: int
    matches: list  # RankedMatch, sorted by rank
    garment_path: Path
    created: float


class _SessionStore:
    """Bounded LRU of recent sessions; evictions delete spool files."""

    def __init__(self, capacity: int, ttl: float):
        self.capacity = capacity
        self.ttl = ttl
        self._lock = threading.Lock()
        self._sessions: OrderedDict[str, QuerySession] = OrderedDict()

    @staticmethod
    def _drop(session: QuerySession):
        try:
            session.garment_path.unlink()
        except OSError:
            pass

    def put(self, session: QuerySession):
        with self._lock:
            now = time.monotonic()
            expired = [k for k, s in self._sessions.items() if now - s.created > self.ttl]
            for k in expired:
                self._drop(self._sessions.pop(k))
            self._sessions[session.query_id] = session
            while len(self._sessions) > self.capacity:
                self._drop(self._sessions.popitem(last=False)[1])

    def get(self, query_id: str) -> QuerySession | None:
        with self._lock:
            session = self._sessions.get(query_id)
            if session is None:
                return None
            if time.monotonic() - session.created > self.ttl:
                self._drop(self._sessions.pop(query_id))
                return None
            self._sessions.move_to_end(query_id)
            return session

    def __len__(self) -> int:
        with self._lock:
            return len(self._sessions)


def _error(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message})


class ServiceState:
    """Immutable model/index state shared by all requests."""

    def __init__(self, config: ServiceConfig):
        config.validate_paths()
        self.config = config
        self.gan = GanCheckpoint.load(config.gan_checkpoint)
        self.converter = self.gan.build_converter()
        self.embedder_ckpt = EmbedderCheckpoint.load(config.embedder_checkpoint)
        self.embedder = self.embedder_ckpt.build_embedder()
        self.index: EmbeddingIndex = load_index(config.index_path)
        self.product_category = self.index.categories_by_product()
        self.product_images = self._image_table(config)
        self.spool = Path(config.spool_dir) if config.spool_dir else Path(tempfile.mkdtemp(prefix="streetshop-"))
        self.spool.mkdir(parents=True, exist_ok=True)
        self.sessions = _SessionStore(config.session_capacity, config.spool_ttl_seconds)
        self.inference_lock = threading.Lock()
        self.started = time.time()

    @staticmethod
    def _image_table(config: ServiceConfig) -> dict:
        table: dict[str, Path] = {}
        if config.catalog_manifest:
            manifest = load_manifest(config.catalog_manifest)
            for record in manifest.records:
                if record.role == "product" and record.product_id not in table:
                    table[record.product_id] = manifest.resolve(record.image_path)
        return table

    def product_image_path(self, product_id: str) -> Path | None:
        path = self.product_images.get(product_id)
        if path is None and self.config.product_root:
            candidate = Path(self.config.product_root) / f"{product_id}.png"
            path = candidate if candidate.is_file() else None
        return path

    def fingerprints_match(self) -> bool:
        a = self.index.embedder_fingerprint
        b = self.embedder_ckpt.fingerprint
        return a == b and a != b"\x00" * 32

    def run_query(self, photo: Image.Image, k: int) -> QuerySession:
        with self.inference_lock:
            garment = generate_garment(photo, self.gan, converter=self.converter)
            vector = embed(garment, self.embedder).numpy()
        matches = query(self.index, vector, k)
        query_id = uuid.uuid4().hex[:16]
        garment_path = self.spool / f"{query_id}.png"
        tensor_to_image(garment).save(garment_path)
        session = QuerySession(query_id, k, matches, garment_path, time.monotonic())
        self.sessions.put(session)
        return session


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="streetshop", docs_url=None, redoc_url=None)
    app.state.service = state

    @app.post("/api/query")
    async def handle_query(request: Request, photo: UploadFile, k: int | None = None):
        if k is None:
            k = state.config.default_k
        if not 1 <= k <= MAX_K:
            return _error(400, "invalid_k", f"k must be between 1 and {MAX_K}, got {k}")
        raw = await photo.read(state.config.max_upload_bytes + 1)
        if len(raw) > state.config.max_upload_bytes:
            return _error(413, "payload_too_large", f"upload exceeds {state.config.max_upload_bytes} bytes")
        try:
            image = Image.open(io.BytesIO(raw))
            image.load()
        except Exception:
            return _error(400, "invalid_image", "could not decode the uploaded photo")
        session = state.run_query(image.convert("RGB"), k)
        return {
            "query_id": session.query_id,
            "k": session.k,
            "garment_url": f"/api/query/{session.query_id}/garment.png",
            "matches": [
                {
                    "product_id": m.product_id,
                    "category": state.product_category.get(m.product_id, ""),
                    "score": m.score,
                    "rank": m.rank,
                    "image_url": f"/api/products/{m.product_id}/image.png",
                }
                for m in session.matches
            ],
        }

    @app.get("/api/query/{query_id}/garment.png")
    def get_garment(query_id: str):
        session = state.sessions.get(query_id)
        if session is None or not session.garment_path.is_file():
            return _error(404, "unknown_query", f"no active session {query_id!r}")
        return FileResponse(session.garment_path, media_type="image/png")

    @app.get("/api/products/{product_id}")
    def get_product(product_id: str):
        category = state.product_category.get(product_id)
        if category is None:
            return _error(404, "unknown_product", f"no product {product_id!r} in the index")
        return {
            "product_id": product_id,
            "category": category,
            "image_url": f"/api/products/{product_id}/image.png",
        }

    @app.get("/api/products/{product_id}/image.png")
    def get_product_image(product_id: str):
        if product_id not in state.product_category:
            return _error(404, "unknown_product", f"no product {product_id!r} in the index")
        path = state.product_image_path(product_id)
        if path is None:
            return _error(404, "missing_image", f"no image file for product {product_id!r}")
        return FileResponse(
            path,
            media_type="image/png",
            headers={"Cache-Control": "public, max-age=31536000, immutable"},
        )

    @app.get("/api/health")
    def health():
        match = state.fingerprints_match()
        return {
            "status": "ok" if match else "degraded",
            "index_size": len(state.index),
            "sessions": len(state.sessions),
            "uptime_seconds": time.time() - state.started,
            "fingerprint_match": match,
            "fingerprints": {
                "embedder": (state.embedder_ckpt.fingerprint or b"").hex(),
                "index_embedder": state.index.embedder_fingerprint.hex(),
                "gan": (state.gan.fingerprint or b"").hex(),
            },
        }

    return app


def run_service(config: ServiceConfig):
    """Serve until interrupted; blocks the calling thread."""
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
