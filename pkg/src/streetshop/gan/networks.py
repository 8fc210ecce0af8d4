"""Converter (encoder + decoder) and discriminator networks.

All nets share one conv trunk family: 5x5 stride-2 convolutions walking
64x64x3 down to 4x4 at the widest filter count, then a full-spatial-extent
convolution collapsing to the output vector (64-d latent for the encoder,
1 logit for the discriminators). The decoder mirrors the encoder with
transpose convolutions and a tanh output, so generated pixels always live
in [-1, 1]. The domain discriminator takes the source and candidate
images channel-concatenated (6 input channels).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

CLAMP_EPS = 1e-7
LEAKY_SLOPE = 0.2
INIT_STD = 0.02


def clamp_probability(p: torch.Tensor, eps: float = CLAMP_EPS) -> torch.Tensor:
    """Keep probabilities strictly inside (0,1) so logs stay finite."""
    return p.clamp(eps, 1.0 - eps)


@dataclass(frozen=True)
class GanArchitecture:
    """Structural parameters shared by converter and discriminators.

    Default widths follow the reference layer tables; narrower widths keep
    the same topology (same depth, latent size and resolution) for
    CPU-budget training runs.
    """

    image_size: int = 64
    latent_dim: int = 64
    widths: tuple[int, ...] = (128, 256, 512, 1024)

    def __post_init__(self):
        if not self.widths:
            raise ValueError("widths must name at least one conv layer")
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        size = self.image_size
        for _ in self.widths:
            if size % 2 != 0:
                raise ValueError(f"image_size {self.image_size} not divisible by 2^{len(self.widths)}")
            size //= 2
        if size < 1:
            raise ValueError("too many stride-2 layers for the image size")

    @property
    def bottleneck_size(self) -> int:
        return self.image_size // (2 ** len(self.widths))

    def shape_chain(self) -> list[tuple[int, ...]]:
        """Expected activation shapes from input image to latent and back."""
        chain = [(self.image_size, self.image_size, 3)]
        size = self.image_size
        for w in self.widths:
            size //= 2
            chain.append((size, size, w))
        chain.append((self.latent_dim,))
        for w_prev, size_mult in zip(reversed(self.widths), range(len(self.widths))):
            s = self.bottleneck_size * (2 ** size_mult)
            chain.append((s, s, w_prev))
        chain.append((self.image_size, self.image_size, 3))
        return chain

    def to_dict(self) -> dict:
        return {
            "image_size": self.image_size,
            "latent_dim": self.latent_dim,
            "widths": list(self.widths),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GanArchitecture":
        base = cls()
        return cls(
            image_size=int(d.get("image_size", base.image_size)),
            latent_dim=int(d.get("latent_dim", base.latent_dim)),
            widths=tuple(int(w) for w in d.get("widths", base.widths)),
        )


def gaussian_init(module: nn.Module, generator: torch.Generator, std: float = INIT_STD) -> None:
    """Zero-mean Gaussian init, batch-norm scales centered at 1."""
    for m in module.modules():
        if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
            with torch.no_grad():
                m.weight.copy_(torch.randn(m.weight.shape, generator=generator) * std)
                if m.bias is not None:
                    m.bias.zero_()
        elif isinstance(m, nn.BatchNorm2d):
            with torch.no_grad():
                m.weight.copy_(1.0 + torch.randn(m.weight.shape, generator=generator) * std)
                m.bias.zero_()


class Encoder(nn.Module):
    """Stride-2 conv trunk condensing a 64x64x3 image to the latent vector."""

    def __init__(self, arch: GanArchitecture):
        super().__init__()
        self.arch = arch
        layers: list[nn.Module] = []
        prev = 3
        for w in arch.widths:
            layers += [
                nn.Conv2d(prev, w, kernel_size=5, stride=2, padding=2),
                nn.BatchNorm2d(w),
                nn.LeakyReLU(LEAKY_SLOPE),
            ]
            prev = w
        self.trunk = nn.Sequential(*layers)
        self.project = nn.Conv2d(prev, arch.latent_dim, kernel_size=arch.bottleneck_size)
        assert arch.shape_chain()[len(arch.widths)][-1] == arch.widths[-1]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.project(self.trunk(x)).flatten(1)


class Decoder(nn.Module):
    """Latent vector back to a 64x64x3 image through transpose convolutions."""

    def __init__(self, arch: GanArchitecture):
        super().__init__()
        self.arch = arch
        widths = tuple(reversed(arch.widths))
        s = arch.bottleneck_size
        self.bottleneck = (widths[0], s, s)
        self.project = nn.Linear(arch.latent_dim, widths[0] * s * s)
        self.project_bn = nn.BatchNorm2d(widths[0])
        layers: list[nn.Module] = []
        for i in range(len(widths) - 1):
            layers += [
                nn.ConvTranspose2d(
                    widths[i], widths[i + 1], kernel_size=5, stride=2,
                    padding=2, output_padding=1,
                ),
                nn.BatchNorm2d(widths[i + 1]),
                nn.ReLU(),
            ]
        layers += [
            nn.ConvTranspose2d(
                widths[-1], 3, kernel_size=5, stride=2, padding=2, output_padding=1
            ),
            nn.Tanh(),
        ]
        self.trunk = nn.Sequential(*layers)

    def forward(self, z: torch.Tensor) -> torch.Tensor:
        c, s, _ = self.bottleneck
        h = torch.relu(self.project_bn(self.project(z).view(-1, c, s, s)))
        return self.trunk(h)


class Converter(nn.Module):
    """Encoder plus decoder; the generator of the street-to-garment transfer."""

    def __init__(self, arch: GanArchitecture = GanArchitecture()):
        super().__init__()
        self.arch = arch
        self.encoder = Encoder(arch)
        self.decoder = Decoder(arch)
        self._assert_shape_chain()

    def _assert_shape_chain(self):
        chain = self.arch.shape_chain()
        assert chain[0] == (self.arch.image_size, self.arch.image_size, 3)
        assert chain[len(self.arch.widths) + 1] == (self.arch.latent_dim,)
        assert chain[-1] == chain[0]

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.decoder(self.encoder(x))


class Discriminator(nn.Module):
    """Shared trunk scoring an image (or a 6-channel image pair) as a probability.

    No batch norm on the input layer; output is a clamped sigmoid so the
    probability is strictly inside (0,1).
    """

    def __init__(self, arch: GanArchitecture = GanArchitecture(), in_channels: int = 3):
        super().__init__()
        self.arch = arch
        self.in_channels = in_channels
        layers: list[nn.Module] = []
        prev = in_channels
        for i, w in enumerate(arch.widths):
            layers.append(nn.Conv2d(prev, w, kernel_size=5, stride=2, padding=2))
            if i > 0:
                layers.append(nn.BatchNorm2d(w))
            layers.append(nn.LeakyReLU(LEAKY_SLOPE))
            prev = w
        self.trunk = nn.Sequential(*layers)
        self.score = nn.Conv2d(prev, 1, kernel_size=arch.bottleneck_size)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        logit = self.score(self.trunk(x)).flatten(1).squeeze(1)
        return clamp_probability(torch.sigmoid(logit))


def _as_image_batch(image, image_size: int, channels: int = 3) -> tuple[torch.Tensor, bool]:
    """Accept HWC numpy / CHW tensor, single or batched; return NCHW + single flag."""
    t = torch.as_tensor(np.asarray(image), dtype=torch.float32) if not torch.is_tensor(image) else image.float()
    if t.dim() == 3:
        if t.shape == (image_size, image_size, channels):
            t = t.permute(2, 0, 1)
        if t.shape != (channels, image_size, image_size):
            raise ValueError(
                f"expected image of shape ({image_size},{image_size},{channels}), got {tuple(t.shape)}"
            )
        return t.unsqueeze(0), True
    if t.dim() == 4:
        if t.shape[1:] == (image_size, image_size, channels):
            t = t.permute(0, 3, 1, 2)
        if t.shape[1:] != (channels, image_size, image_size):
            raise ValueError(f"expected batched {channels}x{image_size}x{image_size} images, got {tuple(t.shape)}")
        return t, False
    raise ValueError(f"expected 3-d or 4-d image input, got {t.dim()}-d")


def encode(image, converter: Converter) -> torch.Tensor:
    """Inference-mode latent for a preprocessed image (or batch)."""
    batch, single = _as_image_batch(image, converter.arch.image_size)
    converter.eval()
    with torch.no_grad():
        z = converter.encoder(batch)
    return z.squeeze(0) if single else z


def decode(latent, converter: Converter) -> torch.Tensor:
    """Inference-mode image for a latent vector (or batch of latents)."""
    t = torch.as_tensor(np.asarray(latent), dtype=torch.float32) if not torch.is_tensor(latent) else latent.float()
    single = t.dim() == 1
    if single:
        t = t.unsqueeze(0)
    if t.dim() != 2 or t.shape[1] != converter.arch.latent_dim:
        raise ValueError(f"expected latent of length {converter.arch.latent_dim}, got {tuple(t.shape)}")
    converter.eval()
    with torch.no_grad():
        img = converter.decoder(t)
    return img.squeeze(0) if single else img


def discriminate_real_fake(image, discriminator: Discriminator) -> torch.Tensor:
    """Probability that an image is a real catalog photo."""
    batch, single = _as_image_batch(image, discriminator.arch.image_size)
    discriminator.eval()
    with torch.no_grad():
        p = discriminator(batch)
    return p.squeeze(0) if single else p


def discriminate_domain(source, candidate, discriminator: Discriminator) -> torch.Tensor:
    """Probability that candidate is the garment associated with source.

    The pair is fed channel-concatenated, so the discriminator input has
    six channels.
    """
    src, single_s = _as_image_batch(source, discriminator.arch.image_size)
    cand, single_c = _as_image_batch(candidate, discriminator.arch.image_size)
    if src.shape[0] != cand.shape[0]:
        raise ValueError(f"source batch {src.shape[0]} != candidate batch {cand.shape[0]}")
    discriminator.eval()
    with torch.no_grad():
        p = discriminator(torch.cat([src, cand], dim=1))
    return p.squeeze(0) if (single_s and single_c) else p
