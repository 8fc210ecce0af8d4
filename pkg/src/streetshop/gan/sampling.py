"""Three-way target sampling for the domain discriminator.

Each training pair contributes a candidate image drawn uniformly from
{ground-truth target, converter inference, irrelevant target}; the
associated flag is 1 only for the ground truth.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
import torch

from ..errors import TargetSamplingError


class TargetClass(str, Enum):
    GROUND_TRUTH = "ground_truth"
    INFERENCE = "inference"
    IRRELEVANT = "irrelevant"


_CLASSES = (TargetClass.GROUND_TRUTH, TargetClass.INFERENCE, TargetClass.IRRELEVANT)
UNIFORM_PROBS = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)


def target_flag(cls: TargetClass) -> int:
    """Associated-pair flag: 1 iff the candidate is the ground truth."""
    return 1 if cls is TargetClass.GROUND_TRUTH else 0


def draw_target_class(rng: np.random.Generator, probs=UNIFORM_PROBS) -> TargetClass:
    probs = np.asarray(probs, dtype=np.float64)
    if probs.shape != (3,) or np.any(probs < 0) or not np.isclose(probs.sum(), 1.0):
        raise ValueError(f"target probabilities must be 3 nonnegative values summing to 1, got {probs}")
    return _CLASSES[int(rng.choice(3, p=probs))]


def sample_training_target(
    source: torch.Tensor,
    target: torch.Tensor,
    irrelevant_pool: torch.Tensor,
    converter,
    rng: np.random.Generator,
    probs=UNIFORM_PROBS,
) -> tuple[torch.Tensor, int, TargetClass]:
    """Draw one candidate image for the domain discriminator.

    irrelevant_pool holds target images of other products; it must be
    nonempty, which means the dataset needs at least two products.
    Returns (candidate image, flag, class).
    """
    cls = draw_target_class(rng, probs)
    if cls is TargetClass.GROUND_TRUTH:
        return target, 1, cls
    if cls is TargetClass.INFERENCE:
        converter.eval()
        with torch.no_grad():
            fake = converter(source.unsqueeze(0)).squeeze(0)
        return fake, 0, cls
    if len(irrelevant_pool) == 0:
        raise TargetSamplingError(
            "cannot draw an irrelevant target: dataset has a single product"
        )
    idx = int(rng.integers(len(irrelevant_pool)))
    return irrelevant_pool[idx], 0, cls
