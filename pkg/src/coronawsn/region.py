"""Region-growing smoothing and noise-weighted fusion with the denoiser output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

# 4-connectivity
_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass
class IntensityBins:
    bin_count: int
    width: float
    assignment: np.ndarray  # 0-based bin index per pixel

    def mask(self, b: int) -> np.ndarray:
        return self.assignment == b

    def nonempty(self) -> list[int]:
        return np.unique(self.assignment).tolist()


def intensity_group(value: float, bin_count: int = 64) -> int:
    """1-based group number of an intensity: 0-3 -> 1, 4-7 -> 2 for 64 bins."""
    return int(bin_index(np.asarray(value, dtype=float), bin_count)) + 1


def bin_index(values: np.ndarray, bin_count: int) -> np.ndarray:
    if bin_count < 2:
        raise ValueError("bin_count must be >= 2")
    width = 256.0 / bin_count
    idx = np.floor(np.asarray(values, dtype=float) / width).astype(int)
    return np.clip(idx, 0, bin_count - 1)


def bin_pixels(image, bin_count: int = 64) -> IntensityBins:
    return IntensityBins(bin_count, 256.0 / bin_count, bin_index(image, bin_count))


def region_grow_smooth(image, bin_count: int = 64, min_component: int = 32) -> np.ndarray:
    """Replace every 4-connected same-bin component of at least ``min_component``
    pixels by its mean intensity."""
    if min_component < 1:
        raise ValueError("min_component must be >= 1")
    image = np.asarray(image, dtype=float)
    bins = bin_pixels(image, bin_count)
    out = image.copy()
    for b in bins.nonempty():
        labels, n = ndimage.label(bins.mask(b), structure=_CROSS)
        if n == 0:
            continue
        sizes = np.bincount(labels.ravel(), minlength=n + 1)
        means = np.concatenate([[0.0], ndimage.mean(image, labels, index=np.arange(1, n + 1))])
        big = sizes >= min_component
        big[0] = False
        sel = big[labels]
        out[sel] = means[labels[sel]]
    return np.clip(out, 0.0, 255.0)


@dataclass(frozen=True)
class FusionWeights:
    denoiser: float
    region: float

    @classmethod
    def for_noise(cls, sigma_n: float) -> "FusionWeights":
        region = min(0.5, max(0.0, float(sigma_n)) / 100.0)
        return cls(1.0 - region, region)


def fuse(x_d, x_r, sigma_n: float) -> np.ndarray:
    x_d = np.asarray(x_d, dtype=float)
    x_r = np.asarray(x_r, dtype=float)
    if x_d.shape != x_r.shape:
        raise ValueError(f"shape mismatch: {x_d.shape} vs {x_r.shape}")
    w = FusionWeights.for_noise(sigma_n)
    if w.region == 0.0:
        return x_d.copy()
    return w.denoiser * x_d + w.region * x_r
