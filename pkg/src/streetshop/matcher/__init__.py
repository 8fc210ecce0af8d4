"""Clothes matching network: hypersphere embedder and joint-supervision training."""

from .networks import (
    ClassifierHead,
    CompactEmbedder,
    Embedder,
    EmbedderArchitecture,
    ResidualEmbedder,
    embed,
)
from .losses import CenterBank, center_loss, joint_loss, softmax_loss, update_centers
from .training import EmbedderCheckpoint, MatcherTrainConfig, embed_manifest, fine_tune

__all__ = [
    "CenterBank",
    "ClassifierHead",
    "CompactEmbedder",
    "Embedder",
    "EmbedderArchitecture",
    "EmbedderCheckpoint",
    "MatcherTrainConfig",
    "ResidualEmbedder",
    "center_loss",
    "embed",
    "embed_manifest",
    "fine_tune",
    "joint_loss",
    "softmax_loss",
    "update_centers",
]
