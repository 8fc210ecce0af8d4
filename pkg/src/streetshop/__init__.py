"""Street-to-shop garment search.

Two-stage pipeline: a converter GAN extracts a clean 64x64 garment image
from a street photo, a fine-tuned embedder maps images onto the 128-d unit
hypersphere, and an exact L2 index retrieves the top-k closest catalog
products. Ships with dataset tooling, a precision@k evaluation harness,
an HTTP query service, and an operator CLI.
"""

__version__ = "0.1.0"

from . import errors
from .container import file_fingerprint, read_container, write_container
from .evaluation import (
    EvalReport,
    RelevanceJudgment,
    evaluate,
    precision_at_k,
    relevance,
)
from .index import (
    EmbeddingIndex,
    IndexEntry,
    RankedMatch,
    build_index,
    load_index,
    query,
    save_index,
)

__all__ = [
    "errors",
    "file_fingerprint",
    "read_container",
    "write_container",
    "EvalReport",
    "RelevanceJudgment",
    "evaluate",
    "precision_at_k",
    "relevance",
    "EmbeddingIndex",
    "IndexEntry",
    "RankedMatch",
    "build_index",
    "load_index",
    "query",
    "save_index",
    "__version__",
]
