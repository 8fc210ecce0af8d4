"""Line-delimited dataset manifests and the product-level train/test split.

A manifest is JSON-lines: the first line is a header declaring ``kind``
(``shopping`` or ``paired``) and the category set, every following line is
one image record with ``product_id``, ``category``, ``role`` and
``image_path``. Paths are stored relative to the manifest file so the
dataset directory can be moved as a unit.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ManifestFormatError, ManifestValidationError, StratificationError

VALID_KINDS = ("shopping", "paired")
ROLES_BY_KIND = {"shopping": ("product", "augmented"), "paired": ("product", "street")}
RECORD_FIELDS = ("product_id", "category", "role", "image_path")


@dataclass(frozen=True)
class ManifestRecord:
    """One image reference: a single line of the manifest body."""

    product_id: str
    category: str
    role: str
    image_path: str


@dataclass(frozen=True)
class ProductRecord:
    """All image references of one shop product, original first."""

    product_id: str
    category: str
    image_paths: tuple[str, ...]


@dataclass(frozen=True)
class PairedSample:
    """A (street photo, clean product photo) pair for adversarial training."""

    product_id: str
    source_path: str
    target_path: str


@dataclass
class DatasetManifest:
    kind: str
    categories: tuple[str, ...]
    records: list[ManifestRecord]
    base_dir: Path = field(default_factory=Path)

    def resolve(self, image_path: str) -> Path:
        p = Path(image_path)
        return p if p.is_absolute() else self.base_dir / p

    def product_ids(self) -> list[str]:
        seen: dict[str, None] = {}
        for r in self.records:
            seen.setdefault(r.product_id, None)
        return list(seen)

    def products(self) -> list[ProductRecord]:
        """Group records into per-product views, the product shot first."""
        by_id: dict[str, list[ManifestRecord]] = {}
        for r in self.records:
            by_id.setdefault(r.product_id, []).append(r)
        out = []
        for pid, recs in by_id.items():
            recs = sorted(recs, key=lambda r: (r.role != "product", r.image_path))
            out.append(
                ProductRecord(pid, recs[0].category, tuple(r.image_path for r in recs))
            )
        return out

    def paired_samples(self) -> list[PairedSample]:
        """Street records joined to their product's clean target image."""
        if self.kind != "paired":
            raise ManifestValidationError(f"manifest kind is {self.kind!r}, not paired")
        target = {r.product_id: r.image_path for r in self.records if r.role == "product"}
        pairs = []
        for r in self.records:
            if r.role != "street":
                continue
            if r.product_id not in target:
                raise ManifestValidationError(
                    f"street record {r.product_id!r} has no product image"
                )
            pairs.append(PairedSample(r.product_id, r.image_path, target[r.product_id]))
        return pairs

    def subset(self, product_ids) -> "DatasetManifest":
        keep = set(product_ids)
        return DatasetManifest(
            kind=self.kind,
            categories=self.categories,
            records=[r for r in self.records if r.product_id in keep],
            base_dir=self.base_dir,
        )


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0,1), got {self.train_fraction}")


def _parse_header(line: str) -> tuple[str, tuple[str, ...]]:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as e:
        raise ManifestFormatError(f"manifest header is not valid JSON: {e}") from e
    if not isinstance(header, dict) or "kind" not in header or "categories" not in header:
        raise ManifestFormatError("manifest header must declare 'kind' and 'categories'")
    kind = header["kind"]
    if kind not in VALID_KINDS:
        raise ManifestFormatError(f"unknown manifest kind {kind!r}")
    categories = tuple(header["categories"])
    if not categories:
        raise ManifestFormatError("manifest declares an empty category set")
    return kind, categories


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Parse and validate a manifest file.

    Raises ManifestFormatError on malformed lines and
    ManifestValidationError when the parsed content breaks an invariant
    (unknown category, duplicate records, missing image files).
    """
    path = Path(path)
    if not path.exists():
        raise ManifestValidationError(f"manifest file not found: {path}")
    lines = [ln for ln in path.read_text().splitlines() if ln.strip()]
    if not lines:
        raise ManifestFormatError(f"empty manifest: {path}")
    kind, categories = _parse_header(lines[0])
    roles = ROLES_BY_KIND[kind]

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestFormatError(f"{path}:{lineno}: not valid JSON: {e}") from e
        missing = [f for f in RECORD_FIELDS if f not in obj]
        if missing:
            raise ManifestFormatError(f"{path}:{lineno}: missing fields {missing}")
        if obj["role"] not in roles:
            raise ManifestFormatError(
                f"{path}:{lineno}: role {obj['role']!r} not valid for kind {kind!r}"
            )
        records.append(
            ManifestRecord(
                product_id=str(obj["product_id"]),
                category=str(obj["category"]),
                role=str(obj["role"]),
                image_path=str(obj["image_path"]),
            )
        )

    manifest = DatasetManifest(kind, categories, records, base_dir=path.parent)
    validate_manifest(manifest, check_files=check_files)
    return manifest


def validate_manifest(manifest: DatasetManifest, check_files: bool = True) -> None:
    bad_category = [r.product_id for r in manifest.records if r.category not in manifest.categories]
    if bad_category:
        raise ManifestValidationError(
            f"records with undeclared categories: {sorted(set(bad_category))}"
        )

    seen_paths: set[tuple[str, str]] = set()
    primary_count: dict[str, int] = {}
    for r in manifest.records:
        key = (r.product_id, r.image_path)
        if key in seen_paths:
            raise ManifestValidationError(f"duplicate record for product_id {r.product_id!r}")
        seen_paths.add(key)
        if r.role == "product":
            primary_count[r.product_id] = primary_count.get(r.product_id, 0) + 1
    dupes = sorted(pid for pid, n in primary_count.items() if n > 1)
    if dupes:
        raise ManifestValidationError(f"duplicate product_id (multiple product rows): {dupes}")

    categories_of: dict[str, str] = {}
    for r in manifest.records:
        prev = categories_of.setdefault(r.product_id, r.category)
        if prev != r.category:
            raise ManifestValidationError(
                f"product {r.product_id!r} appears under categories {prev!r} and {r.category!r}"
            )

    if check_files:
        missing = sorted(
            {r.product_id for r in manifest.records if not manifest.resolve(r.image_path).exists()}
        )
        if missing:
            raise ManifestValidationError(f"missing image files for product ids: {missing}")


def save_manifest(manifest: DatasetManifest, path) -> Path:
    """Write a manifest, relativizing image paths against the output directory."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out_dir = path.parent.resolve()
    lines = [json.dumps({"kind": manifest.kind, "categories": list(manifest.categories)})]
    for r in manifest.records:
        p = manifest.resolve(r.image_path).resolve()
        try:
            rel = p.relative_to(out_dir)
            stored = str(rel)
        except ValueError:
            stored = os.path.relpath(p, out_dir)
        lines.append(
            json.dumps(
                {
                    "product_id": r.product_id,
                    "category": r.category,
                    "role": r.role,
                    "image_path": stored,
                }
            )
        )
    path.write_text("\n".join(lines) + "\n")
    return path


def split_train_test(
    manifest: DatasetManifest, spec: SplitSpec
) -> tuple[DatasetManifest, DatasetManifest]:
    """Stratified per-category product split.

    Products (not individual images) are assigned to a side, so augmented
    or street views of one product never straddle the split. Train takes
    floor(fraction * n) products per category, the remainder goes to test.
    """
    by_category: dict[str, list[str]] = {c: [] for c in manifest.categories}
    seen = set()
    for r in manifest.records:
        if r.product_id not in seen:
            seen.add(r.product_id)
            by_category[r.category].append(r.product_id)

    short = sorted(c for c, pids in by_category.items() if 0 < len(pids) < 2)
    if short:
        raise StratificationError(f"categories with fewer than 2 products: {short}")

    rng = np.random.default_rng(spec.seed)
    train_ids: list[str] = []
    test_ids: list[str] = []
    for category in manifest.categories:
        pids = sorted(by_category[category])
        if not pids:
            continue
        order = rng.permutation(len(pids))
        n_train = int(len(pids) * spec.train_fraction)
        shuffled = [pids[i] for i in order]
        train_ids.extend(shuffled[:n_train])
        test_ids.extend(shuffled[n_train:])

    return manifest.subset(train_ids), manifest.subset(test_ids)


def split_street_views(
    manifest: DatasetManifest, holdout_per_product: int = 1, seed: int = 0
) -> tuple[DatasetManifest, DatasetManifest]:
    """Hold out street views per product from a paired manifest.

    Every product keeps at least one street view on the training side; the
    held-out views are new poses of garments the converter has seen, which
    is what query-time traffic looks like.
    """
    if manifest.kind != "paired":
        raise ManifestValidationError("street-view split requires a paired manifest")
    rng = np.random.default_rng(seed)
    streets: dict[str, list[ManifestRecord]] = {}
    for r in manifest.records:
        if r.role == "street":
            streets.setdefault(r.product_id, []).append(r)

    held = set()
    for pid in sorted(streets):
        views = sorted(streets[pid], key=lambda r: r.image_path)
        n_hold = min(holdout_per_product, len(views) - 1)
        if n_hold <= 0:
            continue
        picks = rng.choice(len(views), size=n_hold, replace=False)
        held.update((pid, views[int(i)].image_path) for i in picks)

    keep_products = [r for r in manifest.records if r.role == "product"]
    train_records = keep_products + [
        r for r in manifest.records
        if r.role == "street" and (r.product_id, r.image_path) not in held
    ]
    test_records = keep_products + [
        r for r in manifest.records
        if r.role == "street" and (r.product_id, r.image_path) in held
    ]
    mk = lambda recs: DatasetManifest(manifest.kind, manifest.categories, recs, manifest.base_dir)
    return mk(train_records), mk(test_records)
