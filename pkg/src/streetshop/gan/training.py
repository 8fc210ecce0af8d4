"""Adversarial training loop, checkpointing and garment generation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import torch

from ..container import GAN_MAGIC, file_fingerprint, read_container, write_container
from ..data.augment import load_image, preprocess
from ..data.manifest import DatasetManifest
from ..errors import CheckpointFormatError, TargetSamplingError, TrainingDivergedError
from ..params import load_state, state_to_numpy
from .losses import loss_converter, loss_domain, loss_real_fake
from .networks import Converter, Discriminator, GanArchitecture, gaussian_init
from .sampling import UNIFORM_PROBS


@dataclass(frozen=True)
class GanTrainConfig:
    steps: int = 2000
    batch_size: int = 64
    lr_converter: float = 2e-4
    lr_discriminator: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    seed: int = 0
    target_probs: tuple[float, float, float] = UNIFORM_PROBS
    arch: GanArchitecture = field(default_factory=GanArchitecture)
    deterministic: bool = True

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr_converter <= 0 or self.lr_discriminator <= 0:
            raise ValueError("learning rates must be > 0")
        p = np.asarray(self.target_probs, dtype=np.float64)
        if p.shape != (3,) or np.any(p < 0) or not np.isclose(p.sum(), 1.0):
            raise ValueError(f"target_probs must be 3 nonnegative values summing to 1, got {self.target_probs}")

    @classmethod
    def from_dict(cls, d: dict) -> "GanTrainConfig":
        d = dict(d)
        if "arch" in d:
            d["arch"] = GanArchitecture.from_dict(d["arch"])
        if "target_probs" in d:
            d["target_probs"] = tuple(d["target_probs"])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "GanTrainConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class GanCheckpoint:
    """Parameters of all three networks plus the run that produced them."""

    arch: GanArchitecture
    converter_state: dict
    d_r_state: dict
    d_a_state: dict
    step_count: int
    seed: int
    loss_history: list  # rows of (step, loss_r, loss_a, loss_c)
    fingerprint: bytes | None = None

    def save(self, path) -> Path:
        tensors = {}
        for prefix, state in (
            ("converter", self.converter_state),
            ("d_r", self.d_r_state),
            ("d_a", self.d_a_state),
        ):
            for name, value in state.items():
                tensors[f"{prefix}/{name}"] = value
        meta = {
            "format_version": 1,
            "kind": "gan",
            "arch": self.arch.to_dict(),
            "step_count": self.step_count,
            "seed": self.seed,
            "loss_history": [list(row) for row in self.loss_history],
        }
        out = write_container(path, GAN_MAGIC, meta, tensors)
        self.fingerprint = file_fingerprint(out)
        return out

    @classmethod
    def load(cls, path) -> "GanCheckpoint":
        meta, tensors = read_container(path, GAN_MAGIC)
        if meta.get("kind") != "gan":
            raise CheckpointFormatError(f"{path}: container kind {meta.get('kind')!r} is not 'gan'")
        states: dict[str, dict] = {"converter": {}, "d_r": {}, "d_a": {}}
        for name, arr in tensors.items():
            prefix, _, key = name.partition("/")
            if prefix not in states or not key:
                raise CheckpointFormatError(f"{path}: unexpected tensor {name!r}")
            states[prefix][key] = arr
        ckpt = cls(
            arch=GanArchitecture.from_dict(meta["arch"]),
            converter_state=states["converter"],
            d_r_state=states["d_r"],
            d_a_state=states["d_a"],
            step_count=int(meta["step_count"]),
            seed=int(meta["seed"]),
            loss_history=[tuple(row) for row in meta.get("loss_history", [])],
        )
        ckpt.fingerprint = file_fingerprint(path)
        return ckpt

    def build_converter(self) -> Converter:
        net = Converter(self.arch)
        load_state(net, self.converter_state)
        net.eval()
        return net

    def build_discriminators(self) -> tuple[Discriminator, Discriminator]:
        d_r = Discriminator(self.arch, in_channels=3)
        d_a = Discriminator(self.arch, in_channels=6)
        load_state(d_r, self.d_r_state)
        load_state(d_a, self.d_a_state)
        d_r.eval()
        d_a.eval()
        return d_r, d_a


def _load_paired_tensors(manifest: DatasetManifest, image_size: int):
    """Stack (sources, per-pair target index) and the unique target images."""
    pairs = manifest.paired_samples()
    if not pairs:
        raise ValueError("paired manifest has no street/product pairs")
    product_ids = sorted({p.product_id for p in pairs})
    if len(product_ids) < 2:
        raise TargetSamplingError("adversarial training needs at least 2 products")
    pid_index = {pid: i for i, pid in enumerate(product_ids)}

    target_imgs = {}
    for p in pairs:
        if p.product_id not in target_imgs:
            target_imgs[p.product_id] = preprocess(load_image(manifest.resolve(p.target_path)), image_size)
    targets = torch.from_numpy(
        np.stack([target_imgs[pid] for pid in product_ids]).transpose(0, 3, 1, 2)
    )
    sources = torch.from_numpy(
        np.stack([preprocess(load_image(manifest.resolve(p.source_path)), image_size) for p in pairs])
        .transpose(0, 3, 1, 2)
    )
    pair_target = torch.tensor([pid_index[p.product_id] for p in pairs], dtype=torch.long)
    return sources, targets, pair_target


def _sample_classes(g: torch.Generator, n: int, probs) -> torch.Tensor:
    """Per-sample class ids 0=ground truth, 1=inference, 2=irrelevant."""
    p = torch.tensor(probs, dtype=torch.float64)
    return torch.multinomial(p.expand(n, 3), 1, generator=g).squeeze(1)


def train_gan(manifest: DatasetManifest, config: GanTrainConfig) -> GanCheckpoint:
    """Alternate one discriminator step (both adversaries) with one converter step.

    The discriminators minimize binary cross entropy on real/fake batches
    and on three-way sampled (source, candidate) pairs; the converter
    minimizes its adversarial loss on fresh inferences. Raises
    TrainingDivergedError if any loss goes non-finite.
    """
    if config.deterministic:
        torch.set_num_threads(1)
    g = torch.Generator().manual_seed(config.seed)

    sources, targets, pair_target = _load_paired_tensors(manifest, config.arch.image_size)
    n_pairs, n_products = len(sources), len(targets)

    converter = Converter(config.arch)
    d_r = Discriminator(config.arch, in_channels=3)
    d_a = Discriminator(config.arch, in_channels=6)
    for net in (converter, d_r, d_a):
        gaussian_init(net, g)
        net.train()

    opt_c = torch.optim.Adam(
        converter.parameters(), lr=config.lr_converter, betas=(config.beta1, config.beta2)
    )
    opt_d = torch.optim.Adam(
        list(d_r.parameters()) + list(d_a.parameters()),
        lr=config.lr_discriminator,
        betas=(config.beta1, config.beta2),
    )

    history = []
    for step in range(config.steps):
        idx = torch.randint(n_pairs, (config.batch_size,), generator=g)
        src = sources[idx]
        tgt_idx = pair_target[idx]
        tgt = targets[tgt_idx]

        # --- discriminator step (both adversaries) ---
        with torch.no_grad():
            fake = converter(src)
        opt_d.zero_grad()

        p_r = d_r(torch.cat([tgt, fake]))
        t_r = torch.cat([torch.ones(len(tgt)), torch.zeros(len(fake))])
        l_r = loss_real_fake(p_r, t_r).mean()

        cls = _sample_classes(g, config.batch_size, config.target_probs)
        irrelevant_idx = (
            tgt_idx + 1 + torch.randint(n_products - 1, (config.batch_size,), generator=g)
        ) % n_products
        candidate = torch.where(
            (cls == 0).view(-1, 1, 1, 1), tgt,
            torch.where((cls == 1).view(-1, 1, 1, 1), fake, targets[irrelevant_idx]),
        )
        p_a = d_a(torch.cat([src, candidate], dim=1))
        l_a = loss_domain(p_a, (cls == 0).float()).mean()

        (l_r + l_a).backward()
        opt_d.step()

        # --- converter step ---
        opt_c.zero_grad()
        inference = converter(src)
        p_rf = d_r(inference)
        p_dom = d_a(torch.cat([src, inference], dim=1))
        l_c = loss_converter(p_rf, p_dom).mean()
        l_c.backward()
        opt_c.step()

        row = (step, l_r.detach().item(), l_a.detach().item(), l_c.detach().item())
        if not all(math.isfinite(v) for v in row[1:]):
            raise TrainingDivergedError(
                f"non-finite loss at step {step}: loss_r={row[1]}, loss_a={row[2]}, loss_c={row[3]}"
            )
        history.append(row)

    return GanCheckpoint(
        arch=config.arch,
        converter_state=state_to_numpy(converter),
        d_r_state=state_to_numpy(d_r),
        d_a_state=state_to_numpy(d_a),
        step_count=config.steps,
        seed=config.seed,
        loss_history=history,
    )


def generate_garment(photo, checkpoint: GanCheckpoint, converter: Converter | None = None) -> np.ndarray:
    """Street photo (PIL image, array, or path) to a clean 64x64x3 garment image.

    Returns an HWC float32 array in [-1, 1]. Pass a prebuilt converter to
    amortize model construction over many calls.
    """
    if isinstance(photo, (str, Path)):
        photo = load_image(photo)
    x = preprocess(photo, checkpoint.arch.image_size)
    net = converter if converter is not None else checkpoint.build_converter()
    net.eval()
    with torch.no_grad():
        out = net(torch.from_numpy(x.transpose(2, 0, 1)).unsqueeze(0))
    return out.squeeze(0).permute(1, 2, 0).numpy()
