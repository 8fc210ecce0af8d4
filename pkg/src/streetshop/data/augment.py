"""Image loading, preprocessing to the working resolution, and augmentation."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageEnhance

from ..errors import ImageDecodeError

WORKING_SIZE = 64


def load_image(path) -> Image.Image:
    """Open a PNG/JPEG file as an RGB image."""
    path = Path(path)
    try:
        with Image.open(path) as im:
            return im.convert("RGB")
    except FileNotFoundError:
        raise
    except Exception as e:
        raise ImageDecodeError(f"cannot decode image {path}: {e}") from e


def _as_rgb_array(image) -> np.ndarray:
    if isinstance(image, Image.Image):
        if image.mode != "RGB":
            raise ImageDecodeError(f"expected an RGB image, got mode {image.mode!r}")
        arr = np.asarray(image)
    else:
        arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ImageDecodeError(f"expected HxWx3 RGB pixels, got shape {arr.shape}")
    return arr


def preprocess(image, size: int = WORKING_SIZE) -> np.ndarray:
    """Center-crop to square, resize, and map pixel values to [-1, 1].

    Returns a float32 array of shape (size, size, 3). White maps to 1.0
    and black to -1.0, pairing with a tanh generator output.
    """
    arr = _as_rgb_array(image)
    h, w = arr.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    arr = arr[top : top + side, left : left + side]
    if side != size:
        pil = Image.fromarray(arr).resize((size, size), Image.BILINEAR)
        arr = np.asarray(pil)
    return arr.astype(np.float32) / 127.5 - 1.0


def tensor_to_image(tensor) -> Image.Image:
    """Map a (3,H,W) or (H,W,3) array in [-1,1] back to an RGB image."""
    arr = np.asarray(tensor, dtype=np.float32)
    if arr.ndim != 3:
        raise ImageDecodeError(f"expected a 3-d tensor, got shape {arr.shape}")
    if arr.shape[0] == 3 and arr.shape[2] != 3:
        arr = np.transpose(arr, (1, 2, 0))
    pixels = np.clip((arr + 1.0) * 127.5, 0, 255).round().astype(np.uint8)
    return Image.fromarray(pixels)


def augment_product(image: Image.Image, count: int = 8, seed: int = 0) -> list[Image.Image]:
    """Generate `count` label-preserving variants of a product image.

    Each variant applies a random subset of: horizontal flip, rotation
    within +/-10 degrees, scale jitter within +/-10%, brightness/contrast
    jitter, and a small translation. Output size equals the input size and
    the result is a pure function of (image, count, seed).
    """
    if count < 1:
        raise ValueError(f"augmentation count must be >= 1, got {count}")
    _as_rgb_array(image)  # shape/mode check only
    rng = np.random.default_rng(seed)
    w, h = image.size
    fill = (255, 255, 255)
    out = []
    for _ in range(count):
        im = image
        if rng.random() < 0.5:
            im = im.transpose(Image.FLIP_LEFT_RIGHT)
        angle = float(rng.uniform(-10.0, 10.0))
        im = im.rotate(angle, resample=Image.BILINEAR, fillcolor=fill)
        scale = float(rng.uniform(0.9, 1.1))
        sw, sh = max(1, round(w * scale)), max(1, round(h * scale))
        im = im.resize((sw, sh), Image.BILINEAR)
        if scale >= 1.0:
            left, top = (sw - w) // 2, (sh - h) // 2
            im = im.crop((left, top, left + w, top + h))
        else:
            canvas = Image.new("RGB", (w, h), fill)
            canvas.paste(im, ((w - sw) // 2, (h - sh) // 2))
            im = canvas
        dx = int(rng.integers(-max(1, w // 16), max(1, w // 16) + 1))
        dy = int(rng.integers(-max(1, h // 16), max(1, h // 16) + 1))
        if dx or dy:
            im = im.transform(
                (w, h), Image.AFFINE, (1, 0, -dx, 0, 1, -dy),
                resample=Image.NEAREST, fillcolor=fill,
            )
        im = ImageEnhance.Brightness(im).enhance(float(rng.uniform(0.85, 1.15)))
        im = ImageEnhance.Contrast(im).enhance(float(rng.uniform(0.85, 1.15)))
        out.append(im)
    return out
