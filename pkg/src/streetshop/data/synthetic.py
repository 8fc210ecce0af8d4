"""Desk-scale synthetic paired dataset: textured garments on clean vs street backgrounds.

Each synthetic product is a colored, textured garment silhouette. The
clean product render sits centered on white; street renders composite the
same garment onto cluttered backgrounds with translation, occlusion,
brightness shift and sensor-style noise. Category determines the color
family so category-level retrieval relevance is learnable.
"""

from __future__ import annotations

import colorsys
from pathlib import Path

import numpy as np
from PIL import Image

from .manifest import DatasetManifest, ManifestRecord, save_manifest

DEFAULT_CATEGORIES = (
    "Blue T-Shirts",
    "Red Sweaters",
    "Bridal Dress",
    "Yellow T-Shirts",
    "Others",
)

SIZE = 64

# (hue range, saturation range, value range, garment silhouette)
_CATEGORY_STYLE = {
    "Blue T-Shirts": ((0.55, 0.65), (0.55, 0.95), (0.55, 0.95), "tshirt"),
    "Red Sweaters": ((0.97, 1.02), (0.65, 0.95), (0.5, 0.85), "sweater"),
    "Bridal Dress": ((0.0, 1.0), (0.0, 0.08), (0.88, 1.0), "dress"),
    "Yellow T-Shirts": ((0.12, 0.17), (0.6, 0.95), (0.75, 1.0), "tshirt"),
    "Others": ((0.25, 0.5), (0.5, 0.9), (0.5, 0.9), "any"),
}
_FALLBACK_STYLE = ((0.0, 1.0), (0.4, 0.9), (0.4, 0.9), "any")


def _garment_mask(shape: str, rng: np.random.Generator) -> np.ndarray:
    mask = np.zeros((SIZE, SIZE), dtype=bool)
    bw = int(rng.integers(12, 17))  # body half-width
    if shape == "dress":
        top, bottom = 12, 58
        top_hw, bot_hw = int(rng.integers(8, 11)), int(rng.integers(16, 23))
        for row in range(top, bottom):
            f = (row - top) / (bottom - top)
            hw = int(round(top_hw + f * (bot_hw - top_hw)))
            mask[row, 32 - hw : 32 + hw] = True
        mask[8:14, 32 - top_hw : 32 + top_hw] = True
    else:
        top, bottom = 14, 56
        mask[top:bottom, 32 - bw : 32 + bw] = True
        sleeve_len = 52 if shape == "sweater" else 30
        sw = int(rng.integers(5, 9))
        mask[top : min(sleeve_len, bottom), 32 - bw - sw : 32 - bw] = True
        mask[top : min(sleeve_len, bottom), 32 + bw : 32 + bw + sw] = True
        # neckline notch
        mask[top : top + 4, 32 - 4 : 32 + 4] = False
    return mask


def _texture(base_rgb: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Stripe/check/dot pattern mixing the base color with a darker shade."""
    kind = rng.choice(["stripes_h", "stripes_v", "checks", "dots", "plain"])
    second = np.clip(base_rgb * float(rng.uniform(0.45, 0.75)), 0, 255)
    period = int(rng.integers(4, 11))
    yy, xx = np.mgrid[0:SIZE, 0:SIZE]
    if kind == "stripes_h":
        sel = (yy // period) % 2 == 0
    elif kind == "stripes_v":
        sel = (xx // period) % 2 == 0
    elif kind == "checks":
        sel = ((yy // period) + (xx // period)) % 2 == 0
    elif kind == "dots":
        sel = ((yy % period) < 2) & ((xx % period) < 2)
        sel = ~sel
    else:
        sel = np.ones((SIZE, SIZE), dtype=bool)
    img = np.where(sel[..., None], base_rgb, second)
    return img


def _street_background(rng: np.random.Generator) -> np.ndarray:
    """Low-frequency color field plus clutter blocks."""
    corners = rng.uniform(30, 225, size=(2, 2, 3))
    small = np.asarray(
        Image.fromarray(corners.astype(np.uint8)).resize((SIZE, SIZE), Image.BILINEAR),
        dtype=np.float32,
    )
    for _ in range(int(rng.integers(2, 6))):
        x, y = int(rng.integers(0, SIZE - 8)), int(rng.integers(0, SIZE - 8))
        w, h = int(rng.integers(6, 20)), int(rng.integers(6, 20))
        color = rng.uniform(0, 255, size=3)
        small[y : y + h, x : x + w] = color
    return small


def _render_street(garment: np.ndarray, mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    bg = _street_background(rng)
    dx, dy = int(rng.integers(-6, 7)), int(rng.integers(-6, 7))
    shifted_mask = np.zeros_like(mask)
    shifted = np.zeros_like(garment)
    ys, xs = np.nonzero(mask)
    ys2, xs2 = np.clip(ys + dy, 0, SIZE - 1), np.clip(xs + dx, 0, SIZE - 1)
    shifted_mask[ys2, xs2] = True
    shifted[ys2, xs2] = garment[ys, xs]

    brightness = float(rng.uniform(0.75, 1.2))
    out = np.where(shifted_mask[..., None], shifted * brightness, bg)

    if rng.random() < 0.7:  # partial occlusion
        ow, oh = int(rng.integers(6, 14)), int(rng.integers(10, 26))
        ox = int(rng.integers(8, SIZE - ow - 8))
        oy = int(rng.integers(8, SIZE - oh - 8))
        out[oy : oy + oh, ox : ox + ow] = rng.uniform(0, 255, size=3)

    out = out + rng.normal(0.0, 6.0, size=out.shape)
    return np.clip(out, 0, 255)


def _save_png(pixels: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(pixels.astype(np.uint8)).save(path, format="PNG")


def generate_synthetic_paired_dataset(
    n_products: int,
    seed: int = 0,
    out_dir="synthetic",
    streets_per_product: int = 6,
    categories: tuple[str, ...] = DEFAULT_CATEGORIES,
) -> DatasetManifest:
    """Write product and street images plus a paired manifest under out_dir.

    Products cycle through the category set; every product gets one clean
    image under products/ and `streets_per_product` street renderings
    under street/. Deterministic given the seed.
    """
    if n_products < 1:
        raise ValueError(f"n_products must be >= 1, got {n_products}")
    if streets_per_product < 2:
        raise ValueError(f"streets_per_product must be >= 2, got {streets_per_product}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    records = []
    for i in range(n_products):
        pid = f"p{i:03d}"
        category = categories[i % len(categories)]
        (h_rng, s_rng, v_rng, shape) = _CATEGORY_STYLE.get(category, _FALLBACK_STYLE)
        if shape == "any":
            shape = str(rng.choice(["tshirt", "sweater", "dress"]))
        hue = float(rng.uniform(*h_rng)) % 1.0
        sat = float(rng.uniform(*s_rng))
        val = float(rng.uniform(*v_rng))
        base = np.array(colorsys.hsv_to_rgb(hue, sat, val)) * 255.0

        mask = _garment_mask(shape, rng)
        textured = _texture(base, rng)
        product = np.where(mask[..., None], textured, 255.0)

        product_rel = f"products/{pid}.png"
        _save_png(product, out_dir / product_rel)
        records.append(ManifestRecord(pid, category, "product", product_rel))

        for s in range(streets_per_product):
            street = _render_street(textured * mask[..., None], mask, rng)
            street_rel = f"street/{pid}_s{s:02d}.png"
            _save_png(street, out_dir / street_rel)
            records.append(ManifestRecord(pid, category, "street", street_rel))

    manifest = DatasetManifest("paired", tuple(categories), records, base_dir=out_dir)
    save_manifest(manifest, out_dir / "paired_manifest.jsonl")
    return manifest
