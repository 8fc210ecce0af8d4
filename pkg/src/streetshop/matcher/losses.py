"""Joint supervision losses: softmax for inter-class spread, center loss
for intra-class compactness, and the per-class center update rule."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .networks import ClassifierHead


def _check_labels(labels: torch.Tensor, n_classes: int) -> torch.Tensor:
    labels = torch.as_tensor(labels, dtype=torch.long)
    if labels.dim() != 1:
        raise ValueError(f"labels must be a 1-d vector, got shape {tuple(labels.shape)}")
    if labels.numel() and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{int(labels.min())}, {int(labels.max())}]"
        )
    return labels


def softmax_loss(features: torch.Tensor, labels, head: ClassifierHead) -> torch.Tensor:
    """Summed cross entropy of the linear head over the batch.

    Stabilized through log-softmax, so it stays finite for any finite
    logits; exactly 0 when there is a single class.
    """
    labels = _check_labels(labels, head.n_classes)
    if features.dim() != 2:
        raise ValueError(f"features must be (batch, dim), got shape {tuple(features.shape)}")
    logits = head(features)
    log_probs = torch.log_softmax(logits, dim=1)
    return -log_probs.gather(1, labels.view(-1, 1)).sum()


def center_loss(features: torch.Tensor, labels, centers: torch.Tensor) -> torch.Tensor:
    """Half the summed squared distance of each feature to its class center."""
    labels = _check_labels(labels, len(centers))
    diff = features - centers[labels]
    return 0.5 * (diff * diff).sum()


def joint_loss(l_s, l_c, lam: float):
    """Balanced combination: softmax loss plus lam times center loss."""
    return l_s + lam * l_c


@dataclass
class CenterBank:
    """One learned center per class, moved toward batch features at rate alpha."""

    centers: torch.Tensor
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")

    @classmethod
    def zeros(cls, n_classes: int, dim: int, alpha: float = 0.5, dtype=torch.float32) -> "CenterBank":
        return cls(torch.zeros(n_classes, dim, dtype=dtype), alpha)


def update_centers(bank: CenterBank, features: torch.Tensor, labels) -> CenterBank:
    """Move each class center toward the mean of its batch features.

    c_j <- c_j - alpha * sum_i 1[y_i = j] (c_j - x_i) / (1 + count_j);
    classes absent from the batch keep their center unchanged.
    """
    labels = _check_labels(labels, len(bank.centers))
    features = features.detach().to(bank.centers.dtype)
    n, dim = bank.centers.shape
    counts = torch.zeros(n, dtype=bank.centers.dtype)
    counts.index_add_(0, labels, torch.ones(len(labels), dtype=bank.centers.dtype))
    residual = bank.centers[labels] - features
    delta = torch.zeros_like(bank.centers)
    delta.index_add_(0, labels, residual)
    delta = delta / (1.0 + counts).view(-1, 1)
    return CenterBank(bank.centers - bank.alpha * delta, bank.alpha)
