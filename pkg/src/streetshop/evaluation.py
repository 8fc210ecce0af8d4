"""Ranking evaluation: binary category relevance and mean precision@k.

A result is relevant when its product's category equals the query's
category; precision@k is the relevant fraction of the first k results.
The report aggregates an unweighted mean over queries and renders both a
two-row table (k on the first row, precision to three decimals on the
second) and per-query line-delimited records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .data.manifest import DatasetManifest
from .errors import FingerprintMismatchError
from .index import EmbeddingIndex, query
from .matcher.training import EmbedderCheckpoint, embed_manifest

DEFAULT_KS = tuple(range(1, 16))

_ZERO_FINGERPRINT = b"\x00" * 32


def relevance(query_category: str, result_category: str, categories=None) -> int:
    """1 iff the two labels are equal, else 0.

    When the declared category set is supplied, labels outside it raise.
    """
    if categories is not None:
        for label in (query_category, result_category):
            if label not in categories:
                raise ValueError(f"unknown category label {label!r}")
    return 1 if query_category == result_category else 0


@dataclass(frozen=True)
class RelevanceJudgment:
    rel: int  # binary relevance of the result at this rank
    rank: int  # 1-based position in the ranking

    def __post_init__(self):
        if self.rel not in (0, 1):
            raise ValueError(f"rel must be 0 or 1, got {self.rel!r}")
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")


def _rels(judgments) -> list:
    return [j.rel if isinstance(j, RelevanceJudgment) else int(j) for j in judgments]


def precision_at_k(judgments: Sequence, k: int) -> float:
    """Relevant count among the first k results, divided by k."""
    rels = _rels(judgments)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(rels) < k:
        raise ValueError(f"need at least {k} judgments, got {len(rels)}")
    for r in rels[:k]:
        if r not in (0, 1):
            raise ValueError(f"relevance values must be binary, got {r!r}")
    return sum(rels[:k]) / k


@dataclass
class QueryResult:
    """Outcome of one evaluated query, including any truncation."""

    query_id: str
    image_path: str
    category: str
    result_product_ids: list
    relevances: list
    available: int  # products retrievable for this query
    truncated: bool  # True when available < max requested k
    precision: dict = field(default_factory=dict)  # k -> value at min(k, available)

    def to_dict(self) -> dict:
        return {
            "query_id": self.query_id,
            "image_path": self.image_path,
            "category": self.category,
            "results": list(self.result_product_ids),
            "relevance": list(self.relevances),
            "available": self.available,
            "truncated": self.truncated,
            "precision": {str(k): v for k, v in sorted(self.precision.items())},
        }


@dataclass
class EvalReport:
    ks: list
    precision: dict  # k -> mean precision over queries
    per_query: list  # QueryResult in query order
    query_count: int

    def __post_init__(self):
        for k, p in self.precision.items():
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"precision@{k} = {p} outside [0, 1]")

    def table_text(self) -> str:
        """Two aligned rows: k values, then precision to 3 decimals."""
        header = ["k"] + [str(k) for k in self.ks]
        values = ["precision@k"] + [f"{self.precision[k]:.3f}" for k in self.ks]
        widths = [max(len(a), len(b)) for a, b in zip(header, values)]
        top = "  ".join(cell.rjust(w) for cell, w in zip(header, widths))
        bottom = "  ".join(cell.rjust(w) for cell, w in zip(values, widths))
        return top + "\n" + bottom

    def to_tsv(self) -> str:
        lines = ["k\tprecision"]
        lines += [f"{k}\t{self.precision[k]:.6f}" for k in self.ks]
        return "\n".join(lines) + "\n"

    def per_query_jsonl(self) -> str:
        return "\n".join(json.dumps(q.to_dict(), sort_keys=True) for q in self.per_query) + "\n"

    def to_dict(self) -> dict:
        return {
            "query_count": self.query_count,
            "ks": list(self.ks),
            "precision": {str(k): self.precision[k] for k in self.ks},
        }


def check_fingerprints(index: EmbeddingIndex, checkpoint: EmbedderCheckpoint, allow_mismatch: bool = False) -> bool:
    """True when index and checkpoint fingerprints are known and equal.

    A zero or missing fingerprint (an in-memory artifact never written to
    disk) is treated as unknown and skips the check.
    """
    a = index.embedder_fingerprint
    b = checkpoint.fingerprint
    if a == _ZERO_FINGERPRINT or b is None or b == _ZERO_FINGERPRINT:
        return False
    if a != b and not allow_mismatch:
        raise FingerprintMismatchError(
            "index was built with a different embedder checkpoint "
            f"(index {a.hex()[:12]}..., checkpoint {b.hex()[:12]}...)"
        )
    return a == b


def evaluate(
    index: EmbeddingIndex,
    test_manifest: DatasetManifest,
    checkpoint: EmbedderCheckpoint,
    ks: Iterable[int] = DEFAULT_KS,
    allow_fingerprint_mismatch: bool = False,
    dedupe_products: bool = True,
) -> EvalReport:
    """Embed each test image, retrieve top max(ks), judge by category.

    Queries with fewer retrievable products than k are scored at the
    available depth and flagged truncated in the per-query records. The
    aggregate per k is the unweighted mean over all queries.
    """
    ks = sorted(set(int(k) for k in ks))
    if not ks or ks[0] < 1:
        raise ValueError(f"ks must be a nonempty list of integers >= 1, got {ks}")
    if not test_manifest.records:
        raise ValueError("test manifest has no image references to evaluate")
    check_fingerprints(index, checkpoint, allow_fingerprint_mismatch)

    categories = set(test_manifest.categories)
    product_category = index.categories_by_product()
    k_max = ks[-1]

    per_query = []
    for record, vector in embed_manifest(test_manifest, checkpoint):
        matches = query(index, vector, k_max, dedupe_products=dedupe_products)
        rels = [
            relevance(record.category, product_category[m.product_id], categories)
            for m in matches
        ]
        judgments = [RelevanceJudgment(rel, m.rank) for rel, m in zip(rels, matches)]
        available = len(judgments)
        result = QueryResult(
            query_id=record.product_id,
            image_path=record.image_path,
            category=record.category,
            result_product_ids=[m.product_id for m in matches],
            relevances=rels,
            available=available,
            truncated=available < k_max,
        )
        for k in ks:
            result.precision[k] = precision_at_k(judgments, min(k, available))
        per_query.append(result)

    mean = {k: sum(q.precision[k] for q in per_query) / len(per_query) for k in ks}
    return EvalReport(ks=ks, precision=mean, per_query=per_query, query_count=len(per_query))
