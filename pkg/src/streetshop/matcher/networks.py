"""Embedding networks mapping garment images onto the 128-d unit hypersphere.

The backbone is pluggable: the compact CNN is the self-contained default,
the residual variant is a deeper option, and externally trained weights
can be imported through the checkpoint container as long as they produce
a 128-d embedding. The final L2 normalization is part of the model, so
every embedding has unit norm and L2 distances are monotone with cosine
distances.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

EMBEDDING_DIM = 128


@dataclass(frozen=True)
class EmbedderArchitecture:
    backbone: str = "compact"
    input_size: int = 64
    embedding_dim: int = EMBEDDING_DIM
    widths: tuple[int, ...] = (32, 64, 128, 256)

    def __post_init__(self):
        if self.backbone not in BACKBONES:
            raise ValueError(f"unknown backbone {self.backbone!r}; choices: {sorted(BACKBONES)}")
        if self.input_size % (2 ** len(self.widths)) != 0:
            raise ValueError(f"input_size {self.input_size} not divisible by 2^{len(self.widths)}")

    def to_dict(self) -> dict:
        return {
            "backbone": self.backbone,
            "input_size": self.input_size,
            "embedding_dim": self.embedding_dim,
            "widths": list(self.widths),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmbedderArchitecture":
        base = cls()
        return cls(
            backbone=d.get("backbone", base.backbone),
            input_size=int(d.get("input_size", base.input_size)),
            embedding_dim=int(d.get("embedding_dim", base.embedding_dim)),
            widths=tuple(int(w) for w in d.get("widths", base.widths)),
        )


class CompactEmbedder(nn.Module):
    """Four stride-2 conv blocks, global average pool, linear projection."""

    def __init__(self, arch: EmbedderArchitecture):
        super().__init__()
        blocks: list[nn.Module] = []
        prev = 3
        for w in arch.widths:
            blocks += [
                nn.Conv2d(prev, w, kernel_size=3, stride=2, padding=1),
                nn.BatchNorm2d(w),
                nn.ReLU(),
            ]
            prev = w
        self.features = nn.Sequential(*blocks)
        self.project = nn.Linear(prev, arch.embedding_dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = self.features(x).mean(dim=(2, 3))
        return self.project(h)


class _ResidualBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, stride: int):
        super().__init__()
        self.conv1 = nn.Conv2d(in_ch, out_ch, 3, stride=stride, padding=1)
        self.bn1 = nn.BatchNorm2d(out_ch)
        self.conv2 = nn.Conv2d(out_ch, out_ch, 3, padding=1)
        self.bn2 = nn.BatchNorm2d(out_ch)
        self.skip = (
            nn.Sequential(nn.Conv2d(in_ch, out_ch, 1, stride=stride), nn.BatchNorm2d(out_ch))
            if (stride != 1 or in_ch != out_ch)
            else nn.Identity()
        )

    def forward(self, x):
        h = F.relu(self.bn1(self.conv1(x)))
        h = self.bn2(self.conv2(h))
        return F.relu(h + self.skip(x))


class ResidualEmbedder(nn.Module):
    """Deeper residual backbone with the same embedding contract."""

    def __init__(self, arch: EmbedderArchitecture):
        super().__init__()
        w = arch.widths
        self.stem = nn.Sequential(nn.Conv2d(3, w[0], 3, stride=2, padding=1), nn.BatchNorm2d(w[0]), nn.ReLU())
        blocks = []
        prev = w[0]
        for width in w[1:]:
            blocks.append(_ResidualBlock(prev, width, stride=2))
            prev = width
        self.blocks = nn.Sequential(*blocks)
        self.project = nn.Linear(prev, arch.embedding_dim)

    def forward(self, x):
        h = self.blocks(self.stem(x)).mean(dim=(2, 3))
        return self.project(h)


BACKBONES = {"compact": CompactEmbedder, "residual": ResidualEmbedder}


class Embedder(nn.Module):
    """Backbone plus the unit-norm constraint."""

    def __init__(self, arch: EmbedderArchitecture = EmbedderArchitecture()):
        super().__init__()
        self.arch = arch
        self.backbone = BACKBONES[arch.backbone](arch)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return F.normalize(self.backbone(x), p=2, dim=-1)


class ClassifierHead(nn.Module):
    """Per-class linear logits over the embedding; one class per product."""

    def __init__(self, embedding_dim: int, n_classes: int):
        super().__init__()
        if n_classes < 1:
            raise ValueError(f"need at least 1 class, got {n_classes}")
        self.linear = nn.Linear(embedding_dim, n_classes)

    @property
    def n_classes(self) -> int:
        return self.linear.out_features

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.linear(x)


def _as_batch(image, size: int) -> tuple[torch.Tensor, bool]:
    t = torch.as_tensor(np.asarray(image), dtype=torch.float32) if not torch.is_tensor(image) else image.float()
    if t.dim() == 3:
        if t.shape == (size, size, 3):
            t = t.permute(2, 0, 1)
        if t.shape != (3, size, size):
            raise ValueError(f"expected image of shape ({size},{size},3), got {tuple(t.shape)}")
        return t.unsqueeze(0), True
    if t.dim() == 4:
        if t.shape[1:] == (size, size, 3):
            t = t.permute(0, 3, 1, 2)
        if t.shape[1:] != (3, size, size):
            raise ValueError(f"expected batched 3x{size}x{size} images, got {tuple(t.shape)}")
        return t, False
    raise ValueError(f"expected 3-d or 4-d image input, got {t.dim()}-d")


def embed(image, model: Embedder) -> torch.Tensor:
    """Unit-norm embedding(s) for a preprocessed image or batch."""
    batch, single = _as_batch(image, model.arch.input_size)
    model.eval()
    with torch.no_grad():
        v = model(batch)
    return v.squeeze(0) if single else v
