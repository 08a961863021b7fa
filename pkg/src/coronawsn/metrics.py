"""Image quality metrics and a normality check for aggregated noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class QualityScore:
    psnr: float
    ssim: float


def _same_shape(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(reference, candidate, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; ``inf`` for identical inputs."""
    a, b = _same_shape(reference, candidate)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse)


def gaussian_taps(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax**2) / (2 * sigma * sigma))
    return g / g.sum()


def gaussian_window(size: int = 11, sigma: float = 1.5) -> np.ndarray:
    g = gaussian_taps(size, sigma)
    return np.outer(g, g)


def ssim_map(reference, candidate, peak: float = 255.0, window: int = 11, sigma: float = 1.5) -> np.ndarray:
    """Local SSIM over every fully contained Gaussian window ("valid" region)."""
    x, y = _same_shape(reference, candidate)
    if x.ndim != 2:
        raise ValueError("ssim_map expects a 2-D image")
    if min(x.shape) < window:
        raise ValueError(f"image smaller than the {window}x{window} window")
    g = gaussian_taps(window, sigma)
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2

    def filt(img):
        # separable weighted mean over each valid window
        rows = np.lib.stride_tricks.sliding_window_view(img, window, axis=0) @ g
        return np.lib.stride_tricks.sliding_window_view(rows, window, axis=1) @ g

    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return num / den


def ssim(reference, candidate, peak: float = 255.0) -> float:
    """Mean SSIM (11x11 Gaussian window, sigma 1.5, k1=0.01, k2=0.03).

    Colour images are scored per channel and averaged.
    """
    x, y = _same_shape(reference, candidate)
    if np.array_equal(x, y):
        return 1.0
    if x.ndim == 3:
        return float(np.mean([ssim_map(x[..., c], y[..., c], peak).mean() for c in range(x.shape[2])]))
    return float(ssim_map(x, y, peak).mean())


def quality(reference, candidate) -> QualityScore:
    return QualityScore(psnr(reference, candidate), ssim(reference, candidate))


@dataclass(frozen=True)
class GaussianityReport:
    n: int
    variance: float
    expected_variance: float
    skewness: float
    excess_kurtosis: float
    variance_ok: bool
    skew_ok: bool
    kurtosis_ok: bool

    @property
    def passed(self) -> bool:
        return self.variance_ok and self.skew_ok and self.kurtosis_ok


def gaussianity_check(
    samples,
    expected_variance: float,
    var_rtol: float = 0.02,
    moment_tol: float = 0.05,
) -> GaussianityReport:
    """Check sample variance against ``expected_variance`` and that the third and
    fourth standardised moments match a normal law."""
    z = np.asarray(samples, dtype=float).ravel()
    if z.size < 10_000:
        raise ValueError("need at least 10^4 samples")
    var = float(z.var(ddof=1))
    if var == 0.0:
        skew = kurt = math.nan
    else:
        skew = float(stats.skew(z))
        kurt = float(stats.kurtosis(z, fisher=True))
    return GaussianityReport(
        n=z.size,
        variance=var,
        expected_variance=float(expected_variance),
        skewness=skew,
        excess_kurtosis=kurt,
        variance_ok=abs(var - expected_variance) <= var_rtol * abs(expected_variance),
        skew_ok=abs(skew) <= moment_tol,
        kurtosis_ok=abs(kurt) <= moment_tol,
    )
