"""Binary PGM (P5) / PPM (P6) reading and writing via Pillow."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image


def read_image(path) -> np.ndarray:
    """Load a grayscale (H, W) or RGB (H, W, 3) image as float64 in [0, 255]."""
    with Image.open(path) as im:
        im.load()
        if im.mode not in ("L", "RGB"):
            im = im.convert("RGB" if len(im.getbands()) >= 3 else "L")
        return np.asarray(im, dtype=np.float64)


def to_uint8(image) -> np.ndarray:
    return np.clip(np.rint(np.asarray(image, dtype=float)), 0, 255).astype(np.uint8)


def write_image(path, image) -> Path:
    """Write as P5 for 2-D arrays and P6 for (H, W, 3); values are rounded."""
    path = Path(path)
    data = to_uint8(image)
    if not (data.ndim == 2 or (data.ndim == 3 and data.shape[2] == 3)):
        raise ValueError(f"unsupported image shape {data.shape}")
    Image.fromarray(data).save(path, format="PPM")
    return path


def write_heatmap(path, values) -> Path:
    """Scale a [0, 1] map to 8-bit grayscale; NaN pixels become black."""
    v = np.nan_to_num(np.asarray(values, dtype=float), nan=0.0)
    return write_image(path, 255.0 * np.clip(v, 0.0, 1.0))
