"""Adversarial losses for the converter and its two discriminators.

Both discriminators use the same binary cross entropy kernel on their
output probability; the converter loss is the negated half-sum of the two
discriminator losses evaluated on its own inference with the "not
real / not associated" flag, so minimizing it drags both discriminator
outputs toward certainty in the converter's favor.
"""

from __future__ import annotations

import torch

from .networks import CLAMP_EPS, clamp_probability


def _bce(p, t):
    if not torch.is_tensor(p):
        p = torch.as_tensor(p, dtype=torch.float64)
    p = clamp_probability(p)
    t = torch.as_tensor(t, dtype=p.dtype, device=p.device)
    return -t * torch.log(p) - (1.0 - t) * torch.log(1.0 - p)


def loss_real_fake(p, t) -> torch.Tensor:
    """Binary cross entropy for the real/fake discriminator.

    t is 1 for a real catalog image and 0 for a converter inference.
    Probabilities are clamped to [eps, 1-eps] before the logs, so the
    value is always finite and nonnegative.
    """
    return _bce(p, t)


def loss_domain(p, t) -> torch.Tensor:
    """Binary cross entropy for the domain discriminator.

    Same kernel as loss_real_fake; t is 1 only when the candidate is the
    ground-truth garment for the source photo.
    """
    return _bce(p, t)


def loss_converter(p_real_fake, p_domain) -> torch.Tensor:
    """Adversarial objective of the converter on its own inference.

    Equals -(L_real_fake(p, t=0) + L_domain(p, t=0)) / 2; the minimum is
    approached as both discriminators are fooled into outputting 1.
    """
    return -0.5 * loss_real_fake(p_real_fake, 0.0) - 0.5 * loss_domain(p_domain, 0.0)


__all__ = ["CLAMP_EPS", "loss_converter", "loss_domain", "loss_real_fake"]
