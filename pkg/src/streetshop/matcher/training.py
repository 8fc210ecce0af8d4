"""Fine-tuning under joint softmax + center supervision, and checkpoint I/O."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..container import EMBEDDER_MAGIC, file_fingerprint, read_container, write_container
from ..data.augment import load_image, preprocess
from ..data.manifest import DatasetManifest
from ..errors import CheckpointFormatError, TrainingDivergedError
from ..gan.networks import gaussian_init
from ..params import load_state, state_to_numpy
from .losses import CenterBank, center_loss, joint_loss, softmax_loss, update_centers
from .networks import ClassifierHead, Embedder, EmbedderArchitecture, embed


@dataclass(frozen=True)
class MatcherTrainConfig:
    epochs: int = 10
    lam: float = 0.95
    batch_size: int = 32
    lr: float = 1e-4
    alpha: float = 0.5
    seed: int = 0
    class_granularity: str = "product"  # or "category"
    arch: EmbedderArchitecture = field(default_factory=EmbedderArchitecture)
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"learning rate must be > 0, got {self.lr}")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.class_granularity not in ("product", "category"):
            raise ValueError(f"class_granularity must be 'product' or 'category', got {self.class_granularity!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "MatcherTrainConfig":
        d = dict(d)
        if "arch" in d:
            d["arch"] = EmbedderArchitecture.from_dict(d["arch"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "MatcherTrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class EmbedderCheckpoint:
    """Embedder parameters, classifier head, centers and the class table."""

    arch: EmbedderArchitecture
    embedder_state: dict
    head_state: dict
    centers: np.ndarray
    class_table: list  # class index -> product_id (or category label)
    lam: float
    alpha: float
    epochs: int
    seed: int
    loss_history: list  # rows of (epoch, step, l_s, l_c, joint)
    class_granularity: str = "product"
    fingerprint: bytes | None = None

    def save(self, path) -> Path:
        tensors = {f"embedder/{k}": v for k, v in self.embedder_state.items()}
        tensors.update({f"head/{k}": v for k, v in self.head_state.items()})
        tensors["centers"] = self.centers
        meta = {
            "format_version": 1,
            "kind": "embedder",
            "arch": self.arch.to_dict(),
            "class_table": list(self.class_table),
            "class_granularity": self.class_granularity,
            "lambda": self.lam,
            "alpha": self.alpha,
            "epochs": self.epochs,
            "seed": self.seed,
            "loss_history": [list(row) for row in self.loss_history],
        }
        out = write_container(path, EMBEDDER_MAGIC, meta, tensors)
        self.fingerprint = file_fingerprint(out)
        return out

    @classmethod
    def load(cls, path) -> "EmbedderCheckpoint":
        meta, tensors = read_container(path, EMBEDDER_MAGIC)
        if meta.get("kind") != "embedder":
            raise CheckpointFormatError(f"{path}: container kind {meta.get('kind')!r} is not 'embedder'")
        embedder_state, head_state = {}, {}
        centers = None
        for name, arr in tensors.items():
            if name == "centers":
                centers = arr
            elif name.startswith("embedder/"):
                embedder_state[name.split("/", 1)[1]] = arr
            elif name.startswith("head/"):
                head_state[name.split("/", 1)[1]] = arr
            else:
                raise CheckpointFormatError(f"{path}: unexpected tensor {name!r}")
        if centers is None:
            raise CheckpointFormatError(f"{path}: missing centers tensor")
        ckpt = cls(
            arch=EmbedderArchitecture.from_dict(meta["arch"]),
            embedder_state=embedder_state,
            head_state=head_state,
            centers=centers,
            class_table=list(meta["class_table"]),
            lam=float(meta["lambda"]),
            alpha=float(meta["alpha"]),
            epochs=int(meta["epochs"]),
            seed=int(meta["seed"]),
            loss_history=[tuple(row) for row in meta.get("loss_history", [])],
            class_granularity=meta.get("class_granularity", "product"),
        )
        ckpt.fingerprint = file_fingerprint(path)
        return ckpt

    def build_embedder(self) -> Embedder:
        net = Embedder(self.arch)
        load_state(net, self.embedder_state)
        net.eval()
        return net

    def build_head(self) -> ClassifierHead:
        head = ClassifierHead(self.arch.embedding_dim, len(self.class_table))
        load_state(head, self.head_state)
        head.eval()
        return head


def _load_labeled_images(manifest: DatasetManifest, config: MatcherTrainConfig):
    records = sorted(manifest.records, key=lambda r: (r.product_id, r.role != "product", r.image_path))
    key = (lambda r: r.product_id) if config.class_granularity == "product" else (lambda r: r.category)
    class_table = sorted({key(r) for r in records})
    index = {label: i for i, label in enumerate(class_table)}
    images = np.stack(
        [preprocess(load_image(manifest.resolve(r.image_path)), config.arch.input_size) for r in records]
    ).transpose(0, 3, 1, 2)
    labels = np.array([index[key(r)] for r in records], dtype=np.int64)
    return torch.from_numpy(images), torch.from_numpy(labels), class_table


def fine_tune(manifest: DatasetManifest, config: MatcherTrainConfig) -> EmbedderCheckpoint:
    """Train the embedder and head under L = L_softmax + lambda * L_center.

    One class per product (or per category when configured); centers are
    updated after every optimizer step with the batch's detached features.
    Raises TrainingDivergedError on a non-finite loss.
    """
    if config.deterministic:
        torch.set_num_threads(1)
    g = torch.Generator().manual_seed(config.seed)

    images, labels, class_table = _load_labeled_images(manifest, config)
    if len(class_table) < 2:
        raise ValueError(f"need at least 2 classes to fine-tune, got {len(class_table)}")
    n = len(images)

    model = Embedder(config.arch)
    head = ClassifierHead(config.arch.embedding_dim, len(class_table))
    gaussian_init(model, g)
    gaussian_init(head, g)
    model.train()
    head.train()
    bank = CenterBank.zeros(len(class_table), config.arch.embedding_dim, config.alpha)

    opt = torch.optim.Adam(list(model.parameters()) + list(head.parameters()), lr=config.lr)

    history = []
    step = 0
    for epoch in range(config.epochs):
        order = torch.randperm(n, generator=g)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            x, y = images[idx], labels[idx]
            opt.zero_grad()
            features = model(x)
            l_s = softmax_loss(features, y, head)
            l_c = center_loss(features, y, bank.centers)
            loss = joint_loss(l_s, l_c, config.lam)
            loss.backward()
            opt.step()
            bank = update_centers(bank, features, y)

            row = (epoch, step, l_s.detach().item(), l_c.detach().item(), loss.detach().item())
            if not all(math.isfinite(v) for v in row[2:]):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch} step {step}: l_s={row[2]}, l_c={row[3]}"
                )
            history.append(row)
            step += 1

    return EmbedderCheckpoint(
        arch=config.arch,
        embedder_state=state_to_numpy(model),
        head_state=state_to_numpy(head),
        centers=bank.centers.detach().cpu().numpy().copy(),
        class_table=class_table,
        lam=config.lam,
        alpha=config.alpha,
        epochs=config.epochs,
        seed=config.seed,
        loss_history=history,
        class_granularity=config.class_granularity,
    )


def embed_manifest(manifest: DatasetManifest, checkpoint: EmbedderCheckpoint, batch_size: int = 64):
    """Embed every image reference of a manifest in manifest order.

    Yields (record, unit vector) pairs; images are preprocessed to the
    embedder's input size.
    """
    model = checkpoint.build_embedder()
    records = list(manifest.records)
    for start in range(0, len(records), batch_size):
        chunk = records[start : start + batch_size]
        batch = np.stack(
            [preprocess(load_image(manifest.resolve(r.image_path)), checkpoint.arch.input_size) for r in chunk]
        ).transpose(0, 3, 1, 2)
        vectors = embed(torch.from_numpy(batch), model)
        for record, vec in zip(chunk, vectors):
            yield record, vec.numpy()
