"""Dataset ingestion, augmentation, splitting and preprocessing."""

from .manifest import (
    DatasetManifest,
    ManifestRecord,
    PairedSample,
    ProductRecord,
    SplitSpec,
    load_manifest,
    save_manifest,
    split_street_views,
    split_train_test,
)
from .augment import augment_product, load_image, preprocess, tensor_to_image
from .synthetic import DEFAULT_CATEGORIES, generate_synthetic_paired_dataset

__all__ = [
    "DEFAULT_CATEGORIES",
    "DatasetManifest",
    "ManifestRecord",
    "PairedSample",
    "ProductRecord",
    "SplitSpec",
    "augment_product",
    "generate_synthetic_paired_dataset",
    "load_image",
    "load_manifest",
    "preprocess",
    "save_manifest",
    "split_street_views",
    "split_train_test",
    "tensor_to_image",
]
