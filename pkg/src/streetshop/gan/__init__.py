"""Converter GAN: encoder/decoder generator and its two adversaries."""

from .networks import (
    CLAMP_EPS,
    Converter,
    Decoder,
    Discriminator,
    Encoder,
    GanArchitecture,
    clamp_probability,
    decode,
    discriminate_domain,
    discriminate_real_fake,
    encode,
)
from .losses import loss_converter, loss_domain, loss_real_fake
from .sampling import TargetClass, draw_target_class, sample_training_target, target_flag
from .training import GanCheckpoint, GanTrainConfig, generate_garment, train_gan

__all__ = [
    "CLAMP_EPS",
    "Converter",
    "Decoder",
    "Discriminator",
    "Encoder",
    "GanArchitecture",
    "GanCheckpoint",
    "GanTrainConfig",
    "TargetClass",
    "clamp_probability",
    "decode",
    "discriminate_domain",
    "discriminate_real_fake",
    "draw_target_class",
    "encode",
    "generate_garment",
    "loss_converter",
    "loss_domain",
    "loss_real_fake",
    "sample_training_target",
    "target_flag",
    "train_gan",
]
