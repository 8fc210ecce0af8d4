"""Shared fixtures: a small synthetic dataset and cheaply trained artifacts.

Session-scoped so the expensive pieces (two short training runs) happen
once; individual tests treat them as read-only.
"""

from __future__ import annotations

import numpy as np
import pytest
import torch

from streetshop.data.augment import augment_product, load_image
from streetshop.data.manifest import (
    DatasetManifest,
    ManifestRecord,
    SplitSpec,
    save_manifest,
    split_train_test,
)
from streetshop.data.synthetic import generate_synthetic_paired_dataset
from streetshop.gan.networks import GanArchitecture
from streetshop.gan.training import GanTrainConfig, train_gan
from streetshop.index import build_index, save_index
from streetshop.matcher.networks import EmbedderArchitecture
from streetshop.matcher.training import MatcherTrainConfig, fine_tune

SEED = 11

SMALL_GAN_ARCH = GanArchitecture(widths=(8, 16, 32, 64))
SMALL_EMB_ARCH = EmbedderArchitecture(widths=(8, 16, 32, 64))


@pytest.fixture(scope="session")
def workspace(tmp_path_factory):
    return tmp_path_factory.mktemp("streetshop")


@pytest.fixture(scope="session")
def paired_dataset(workspace) -> DatasetManifest:
    return generate_synthetic_paired_dataset(
        12, seed=SEED, out_dir=workspace / "paired", streets_per_product=4
    )


@pytest.fixture(scope="session")
def shopping_catalog(paired_dataset, workspace) -> DatasetManifest:
    """Shop-side manifest: each product's clean image plus two variants."""
    out = workspace / "shop"
    (out / "images").mkdir(parents=True)
    records = []
    for i, product in enumerate(paired_dataset.products()):
        image = load_image(paired_dataset.resolve(product.image_paths[0]))
        pid = product.product_id
        image.save(out / "images" / f"{pid}.png")
        records.append(ManifestRecord(pid, product.category, "product", f"images/{pid}.png"))
        for j, variant in enumerate(augment_product(image, count=2, seed=SEED + i), start=1):
            variant.save(out / "images" / f"{pid}_a{j:02d}.png")
            records.append(
                ManifestRecord(pid, product.category, "augmented", f"images/{pid}_a{j:02d}.png")
            )
    manifest = DatasetManifest("shopping", paired_dataset.categories, records, base_dir=out)
    save_manifest(manifest, out / "shopping_manifest.jsonl")
    return manifest


@pytest.fixture(scope="session")
def catalog_split(shopping_catalog):
    return split_train_test(shopping_catalog, SplitSpec(0.8, SEED))


@pytest.fixture(scope="session")
def gan_checkpoint(paired_dataset, workspace):
    config = GanTrainConfig(steps=30, batch_size=8, seed=SEED, arch=SMALL_GAN_ARCH)
    checkpoint = train_gan(paired_dataset, config)
    checkpoint.save(workspace / "gan_checkpoint.bin")
    return checkpoint


@pytest.fixture(scope="session")
def gan_checkpoint_path(gan_checkpoint, workspace):
    return workspace / "gan_checkpoint.bin"


@pytest.fixture(scope="session")
def embedder_checkpoint(shopping_catalog, workspace):
    config = MatcherTrainConfig(epochs=2, batch_size=16, seed=SEED, arch=SMALL_EMB_ARCH)
    checkpoint = fine_tune(shopping_catalog, config)
    checkpoint.save(workspace / "embedder_checkpoint.bin")
    return checkpoint


@pytest.fixture(scope="session")
def embedder_checkpoint_path(embedder_checkpoint, workspace):
    return workspace / "embedder_checkpoint.bin"


@pytest.fixture(scope="session")
def catalog_index(shopping_catalog, embedder_checkpoint, workspace):
    index = build_index(shopping_catalog, embedder_checkpoint)
    save_index(index, workspace / "catalog.idx")
    return index


@pytest.fixture(scope="session")
def catalog_index_path(catalog_index, workspace):
    return workspace / "catalog.idx"


@pytest.fixture()
def rng():
    return np.random.default_rng(SEED)


@pytest.fixture(autouse=True)
def _torch_single_thread():
    torch.set_num_threads(1)
