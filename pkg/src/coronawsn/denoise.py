"""Patch-based collaborative denoising.

Pipeline: overlapping patches -> mean removal -> Haar coefficients ->
per-patch Bernoulli-Gaussian posterior -> pooling of active-tap
probabilities over groups of correlated patches -> inverse transform and
overlap averaging.

Patch similarity is the absolute Pearson correlation of the mean-removed
patches, so a darker or inverted copy of a structure still counts as similar.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse as sp

from .region import fuse, region_grow_smooth
from .sparse import (
    Dictionary,
    SparseEstimate,
    decorrelate_dictionary,
    estimate_orthonormal,
    haar_dictionary,
)


@dataclass(frozen=True)
class DenoiseParams:
    patch: int = 8
    stride: int = 2
    group: int = 16
    r_min: float = 0.85
    tau: float = 0.95
    prior: float = 0.5
    q_floor: float = 0.05
    bins: int = 64
    min_component: int = 32
    reference_channel: int = 0


@dataclass
class Patch:
    origin: tuple[int, int]
    vector: np.ndarray
    mean: float
    channel: int = 0


@dataclass
class PatchGroup:
    reference: int
    members: list[int]
    weights: np.ndarray = field(default_factory=lambda: np.ones(1))


def patch_origins(shape: tuple[int, int], p: int, s: int) -> np.ndarray:
    """Top-left corners of all p*p blocks at stride s, plus edge-aligned blocks."""
    h, w = shape
    if p > min(h, w):
        raise ValueError(f"patch size {p} exceeds image size {shape}")
    if not 1 <= s <= p:
        raise ValueError("stride must satisfy 1 <= s <= p")

    def axis(n):
        pos = list(range(0, n - p + 1, s))
        if pos[-1] != n - p:
            pos.append(n - p)
        return pos

    rows, cols = axis(h), axis(w)
    return np.array([(r, c) for r in rows for c in cols], dtype=int)


def patch_matrix(image: np.ndarray, p: int, s: int) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(origins, X)`` with one flattened patch per row of ``X``."""
    image = np.asarray(image, dtype=float)
    origins = patch_origins(image.shape, p, s)
    windows = np.lib.stride_tricks.sliding_window_view(image, (p, p))
    X = windows[origins[:, 0], origins[:, 1]].reshape(len(origins), p * p)
    return origins, X


def extract_patches(image, p: int = 8, s: int = 4, channel: int = 0) -> list[Patch]:
    origins, X = patch_matrix(image, p, s)
    means = X.mean(axis=1)
    return [
        Patch((int(r), int(c)), x - m, float(m), channel)
        for (r, c), x, m in zip(origins, X, means)
    ]


def correlation(a, b) -> float:
    """Pearson correlation; 0 when either input has zero variance."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape or a.size < 2:
        raise ValueError("inputs must have equal length >= 2")
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt((a @ a) * (b @ b))
    if den == 0.0:
        return 0.0
    return float(np.clip((a @ b) / den, -1.0, 1.0))


def _unit_rows(X: np.ndarray) -> np.ndarray:
    Z = X - X.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(Z, axis=1, keepdims=True)
    return np.divide(Z, norms, out=np.zeros_like(Z), where=norms > 0)


def _rank_members(absr: np.ndarray, ref: int, G: int, r_min: float):
    absr = absr.copy()
    absr[ref] = 1.0
    cand = np.flatnonzero(absr >= r_min)
    cand = cand[cand != ref]
    order = np.lexsort((cand, -absr[cand]))[: G - 1]
    members = np.concatenate([[ref], cand[order]]).astype(int)
    w = absr[members]
    return members, w / w.sum()


def group_similar(patches, reference: int, G: int = 16, r_min: float = 0.7) -> PatchGroup:
    """Up to ``G`` patches most correlated (in absolute value) with ``reference``."""
    X = np.stack([np.asarray(p.vector if isinstance(p, Patch) else p, dtype=float) for p in patches])
    Z = _unit_rows(X)
    absr = np.abs(Z @ Z[reference])
    members, w = _rank_members(absr, reference, G, r_min)
    return PatchGroup(reference, members.tolist(), w)


def group_all(X: np.ndarray, G: int, r_min: float, chunk: int = 512) -> sp.csr_matrix:
    """Row-stochastic sparse weight matrix: row i holds patch i's group weights."""
    Z = _unit_rows(np.asarray(X, dtype=float))
    n = len(Z)
    rows, cols, vals = [], [], []
    for start in range(0, n, chunk):
        block = np.abs(Z[start : start + chunk] @ Z.T)
        for off, absr in enumerate(block):
            i = start + off
            absr[i] = -1.0
            k = min(G - 1, n - 1)
            if k > 0:
                top = np.argpartition(-absr, k - 1)[:k]
                top = top[absr[top] >= r_min]
                top = top[np.lexsort((top, -absr[top]))]
            else:
                top = np.zeros(0, dtype=int)
            members = np.concatenate([[i], top])
            w = np.concatenate([[1.0], absr[top]])
            rows.append(np.full(len(members), i))
            cols.append(members)
            vals.append(w / w.sum())
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )


def build_dictionary(p: int, tau: float) -> Dictionary:
    return decorrelate_dictionary(haar_dictionary(p), tau)


@dataclass
class PatchEstimates:
    """Batched :class:`SparseEstimate` for all patches of one channel."""

    origins: np.ndarray
    means: np.ndarray
    coeffs: np.ndarray
    theta: np.ndarray
    q: np.ndarray
    signal_var: np.ndarray
    noise_var: float

    @property
    def gain(self) -> np.ndarray:
        total = self.signal_var + self.noise_var
        return np.divide(self.signal_var, total, out=np.zeros_like(total), where=total > 0)

    def estimate(self, i: int) -> SparseEstimate:
        return SparseEstimate(
            self.theta[i], self.q[i], self.coeffs[i], float(self.signal_var[i]), self.noise_var
        )


def estimate_patches(image, dictionary: Dictionary, sigma_n: float, params: DenoiseParams) -> tuple[PatchEstimates, np.ndarray]:
    origins, X = patch_matrix(image, params.patch, params.stride)
    means = X.mean(axis=1)
    Xc = X - means[:, None]
    if not dictionary.orthonormal:
        raise ValueError("the image pipeline expects an orthonormal dictionary")
    theta, q, c, sv = estimate_orthonormal(Xc, dictionary.matrix, sigma_n, params.prior)
    return PatchEstimates(origins, means, c, theta, q, sv, float(sigma_n) ** 2), Xc


def refine_all(est: PatchEstimates, W: sp.csr_matrix, q_floor: float, q_pool=None) -> np.ndarray:
    """Collaborative refinement for every reference patch at once.

    ``q_pool`` defaults to ``est.q``; rows of ``W`` index into it. When a
    pooled (cross-channel) ``q_pool`` is given, singleton groups still pool.
    Returns the refined coefficient matrix.
    """
    if est.noise_var == 0.0:
        return est.theta.copy()
    q_bar = np.asarray(W @ (est.q if q_pool is None else q_pool))
    theta = q_bar * est.coeffs * est.gain[:, None]
    theta[q_bar < q_floor] = 0.0
    if q_pool is None:
        singleton = np.diff(W.indptr) <= 1
        theta[singleton] = est.theta[singleton]
    return theta


def reconstruct(theta: np.ndarray, means: np.ndarray, origins: np.ndarray, dictionary: Dictionary, shape) -> np.ndarray:
    """Inverse transform every patch, re-add its mean and average the overlaps."""
    p = int(round(np.sqrt(dictionary.matrix.shape[0])))
    blocks = (theta @ dictionary.matrix.T + means[:, None]).reshape(-1, p, p)
    acc = np.zeros(shape)
    cnt = np.zeros(shape)
    for (r, c), blk in zip(origins, blocks):
        acc[r : r + p, c : c + p] += blk
        cnt[r : r + p, c : c + p] += 1.0
    if np.any(cnt == 0):
        raise ValueError("some pixels are not covered by any patch")
    return np.clip(acc / cnt, 0.0, 255.0)


def denoise_gray(image, sigma_n: float, params: DenoiseParams = DenoiseParams()) -> np.ndarray:
    """Sparse collaborative denoising of one channel; returns the partial
    estimate before region smoothing."""
    image = np.asarray(image, dtype=float)
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    dictionary = build_dictionary(params.patch, params.tau)
    est, Xc = estimate_patches(image, dictionary, sigma_n, params)
    if sigma_n == 0:
        theta = est.theta
    else:
        W = group_all(Xc, params.group, params.r_min)
        theta = refine_all(est, W, params.q_floor)
    return reconstruct(theta, est.means, est.origins, dictionary, image.shape)


def denoise_color(image, sigma_n: float, params: DenoiseParams = DenoiseParams()) -> np.ndarray:
    """Denoise an (H, W, 3) image channel by channel.

    Groups are found once on the reference channel and reused for the
    co-located patches of every channel; each reference patch pools the
    active-tap probabilities of all 3*G members.
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 3:
        raise ValueError("expected an (H, W, C) image")
    dictionary = build_dictionary(params.patch, params.tau)
    per_channel = [
        estimate_patches(image[..., ch], dictionary, sigma_n, params)
        for ch in range(image.shape[2])
    ]
    out = np.empty_like(image)
    if sigma_n == 0:
        for ch, (est, _) in enumerate(per_channel):
            out[..., ch] = reconstruct(est.theta, est.means, est.origins, dictionary, image.shape[:2])
        return out
    W = group_all(per_channel[params.reference_channel][1], params.group, params.r_min)
    q_pool = np.mean([est.q for est, _ in per_channel], axis=0)
    for ch, (est, _) in enumerate(per_channel):
        theta = refine_all(est, W, params.q_floor, q_pool)
        out[..., ch] = reconstruct(theta, est.means, est.origins, dictionary, image.shape[:2])
    return out


def denoise_pipeline(noisy, sigma_n: float, params: DenoiseParams = DenoiseParams()):
    """Full receiver chain. Returns ``(partial, region, final)`` float images:
    the sparse estimate, its region-grown smoothing and their fusion."""
    noisy = np.asarray(noisy, dtype=float)
    if noisy.ndim == 3:
        partial = denoise_color(noisy, sigma_n, params)
        region = np.stack(
            [region_grow_smooth(partial[..., c], params.bins, params.min_component) for c in range(noisy.shape[2])],
            axis=-1,
        )
    else:
        partial = denoise_gray(noisy, sigma_n, params)
        region = region_grow_smooth(partial, params.bins, params.min_component)
    return partial, region, fuse(partial, region, sigma_n)
