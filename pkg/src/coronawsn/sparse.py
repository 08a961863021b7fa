"""Sparse coding under a Bernoulli-Gaussian prior.

Each coefficient is active with probability ``prior`` and then drawn from
N(0, signal_var); observations carry N(0, noise_var) noise. For an orthonormal
dictionary the posterior factorises per coefficient and is evaluated in closed
form. For redundant dictionaries a greedy Bayesian pursuit explores supports
one column at a time and averages over every support it scored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp


@dataclass(frozen=True)
class Dictionary:
    matrix: np.ndarray  # (M, N), unit-norm columns
    tau: float = 1.0
    kept: tuple[int, ...] | None = None  # column indices retained from the raw matrix

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def orthonormal(self) -> bool:
        m, n = self.matrix.shape
        if m != n:
            return False
        return bool(np.allclose(self.matrix.T @ self.matrix, np.eye(n), atol=1e-10))


@dataclass
class SparseEstimate:
    theta: np.ndarray
    active_prob: np.ndarray
    coeffs: np.ndarray  # unshrunk coefficients: theta = active_prob * coeffs * gain
    signal_var: float
    noise_var: float

    @property
    def gain(self) -> float:
        total = self.signal_var + self.noise_var
        return self.signal_var / total if total > 0 else 0.0

    @property
    def sparsity(self) -> float:
        """Expected number of active taps."""
        return float(self.active_prob.sum())


def haar_matrix(n: int) -> np.ndarray:
    """Orthonormal 1-D Haar analysis matrix (rows are basis vectors)."""
    if n < 1 or n & (n - 1):
        raise ValueError(f"Haar size must be a power of two, got {n}")
    h = np.array([[1.0]])
    while h.shape[0] < n:
        m = h.shape[0]
        top = np.kron(h, [1.0, 1.0])
        bottom = np.kron(np.eye(m), [1.0, -1.0])
        h = np.vstack([top, bottom]) / math.sqrt(2.0)
    return h


def haar_dictionary(p: int) -> np.ndarray:
    """Columns are the 2-D separable Haar atoms for a row-major p*p patch."""
    h = haar_matrix(p)
    return np.kron(h, h).T


def decorrelate_dictionary(raw: np.ndarray, tau: float) -> Dictionary:
    """Drop columns whose |inner product| with an already kept column exceeds tau.

    Columns are scanned left to right, so the first of any correlated pair wins.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    raw = np.asarray(raw, dtype=float)
    norms = np.linalg.norm(raw, axis=0)
    if not np.allclose(norms, 1.0, atol=1e-9):
        raise ValueError("dictionary columns must have unit norm")
    kept: list[int] = []
    for j in range(raw.shape[1]):
        if not kept or np.max(np.abs(raw[:, kept].T @ raw[:, j])) <= tau:
            kept.append(j)
    return Dictionary(raw[:, kept].copy(), tau, tuple(kept))


def active_probability(coeffs, signal_var, noise_var, prior: float):
    """Posterior P(active | c) for each coefficient; vectorised over rows.

    ``signal_var`` and ``noise_var`` broadcast against ``coeffs``.
    """
    c2 = np.asarray(coeffs, dtype=float) ** 2
    sv = np.asarray(signal_var, dtype=float)
    nv = np.asarray(noise_var, dtype=float)
    if np.any(nv <= 0):
        raise ValueError("noise_var must be positive; handle the noiseless case separately")
    total = sv + nv
    log_odds = (
        math.log(prior) - math.log1p(-prior)
        - 0.5 * np.log(total / nv)
        + 0.5 * c2 * (1.0 / nv - 1.0 / total)
    )
    return expit(log_odds)


def estimate_orthonormal(X: np.ndarray, basis: np.ndarray, sigma_n: float, prior: float = 0.1):
    """Batch posterior for rows of ``X`` (n, M) on an orthonormal ``basis``.

    Returns ``(theta, q, coeffs, signal_var)``; ``signal_var`` is per row.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    coeffs = X @ basis
    noise_var = float(sigma_n) ** 2
    signal_var = np.maximum(0.0, coeffs.var(axis=1) - noise_var)
    silent = signal_var <= 0.0
    if noise_var == 0.0:
        # roundoff from the transform is not signal
        tol = 1e-12 * np.linalg.norm(X, axis=1, keepdims=True)
        q = ((np.abs(coeffs) > tol) & ~silent[:, None]).astype(float)
        gain = np.where(silent, 0.0, 1.0)
    else:
        q = active_probability(coeffs, signal_var[:, None], noise_var, prior)
        q[silent] = 0.0
        gain = signal_var / (signal_var + noise_var)
    theta = q * coeffs * gain[:, None]
    return theta, q, coeffs, signal_var


# --- greedy Bayesian pursuit for redundant dictionaries -----------------------


class _Pursuit:
    """Greedy support search scored by the Bernoulli-Gaussian marginal likelihood.

    Several greedy paths are grown, each seeded with one of the best single
    atoms. Every support scored along the way is remembered once.
    """

    def __init__(self, y, A, noise_var, signal_var, prior):
        self.A = A
        self.m, self.n = A.shape
        self.nv = noise_var
        self.rho = noise_var / signal_var
        self.yy = float(y @ y)
        self.beta = A.T @ y
        self.log_on = math.log(prior)
        self.log_off = math.log1p(-prior)
        self.const = -0.5 * self.m * math.log(2 * math.pi * noise_var)
        self.explored: dict[tuple[int, ...], tuple[float, np.ndarray]] = {}

    def score(self, s, logdet_a, quad):
        # logdet C = M log nv + logdet(A_S^T A_S + rho I) - s log rho
        return (
            self.const
            - 0.5 * (logdet_a - s * math.log(self.rho))
            - 0.5 * (self.yy - quad) / self.nv
            + s * self.log_on
            + (self.n - s) * self.log_off
        )

    def extensions(self, support, gram_inv, theta_s, logdet, quad):
        """Score every one-atom extension of ``support`` in O(M N s)."""
        V = self.A[:, support].T @ self.A if support else np.zeros((0, self.n))
        GV = gram_inv @ V
        delta = np.maximum(1.0 + self.rho - np.einsum("ij,ij->j", V, GV), 1e-300)
        u = self.beta - theta_s @ V
        quads = quad + u * u / delta
        logdets = logdet + np.log(delta)
        scores = self.score(len(support) + 1, logdets, quads)
        scores[support] = -np.inf
        new_coef = u / delta
        for j in np.flatnonzero(np.isfinite(scores)):
            key = tuple(sorted(support + [int(j)]))
            if key not in self.explored:
                th = np.append(theta_s - GV[:, j] * new_coef[j], new_coef[j])
                order = np.argsort(support + [int(j)])
                self.explored[key] = (float(scores[j]), th[order])
        return scores, GV, delta, new_coef, quads, logdets

    def grow(self, first: int | None, max_active: int):
        support: list[int] = []
        gram_inv = np.zeros((0, 0))
        theta_s = np.zeros(0)
        logdet = quad = 0.0
        current = self.score(0, 0.0, 0.0)
        self.explored.setdefault((), (current, np.zeros(0)))
        while len(support) < max_active:
            scores, GV, delta, new_coef, quads, logdets = self.extensions(
                support, gram_inv, theta_s, logdet, quad
            )
            best = int(np.argmax(scores)) if first is None or support else first
            if not scores[best] > current:
                break
            # block-inverse update of (A_S^T A_S + rho I)^-1
            g, d = GV[:, best], delta[best]
            gram_inv = np.block(
                [[gram_inv + np.outer(g, g) / d, -g[:, None] / d], [-g[None, :] / d, np.array([[1.0 / d]])]]
            )
            theta_s = np.append(theta_s - g * new_coef[best], new_coef[best])
            support.append(best)
            logdet, quad, current = logdets[best], quads[best], float(scores[best])

    def run(self, max_active: int, paths: int):
        scores = self.extensions([], np.zeros((0, 0)), np.zeros(0), 0.0, 0.0)[0]
        seeds = np.argsort(-scores, kind="stable")[: max(1, paths)]
        for j in seeds:
            self.grow(int(j), max_active)
        return self.explored


def sparse_estimate(
    patch,
    dictionary: Dictionary | np.ndarray,
    sigma_n: float,
    prior: float = 0.1,
    max_active: int | None = None,
    paths: int = 4,
) -> SparseEstimate:
    """Support-agnostic Bayesian estimate of the coefficients of ``patch``.

    Orthonormal dictionaries use the closed-form per-coefficient posterior with
    ``signal_var = max(0, var(c) - sigma_n**2)``. Otherwise a greedy pursuit
    scores supports by their marginal likelihood; ``active_prob`` and ``theta``
    are posterior averages over all supports it visited. Each of the ``paths``
    greedy paths costs O(M N s) per step for s pursuit steps.
    """
    if sigma_n < 0:
        raise ValueError("sigma_n must be non-negative")
    if not 0.0 < prior < 1.0:
        raise ValueError("prior must lie in (0, 1)")
    if not isinstance(dictionary, Dictionary):
        dictionary = Dictionary(np.asarray(dictionary, dtype=float))
    A = dictionary.matrix
    y = np.asarray(patch, dtype=float).ravel()
    m, n = A.shape
    noise_var = float(sigma_n) ** 2

    if dictionary.orthonormal:
        theta, q, c, sv = estimate_orthonormal(y[None, :], A, sigma_n, prior)
        return SparseEstimate(theta[0], q[0], c[0], float(sv[0]), noise_var)

    # E||y||^2 = M nv + prior N sv for unit-norm atoms
    signal_var = max(0.0, float(y @ y) - m * noise_var) / max(1.0, prior * n)
    if signal_var <= 0.0:
        return SparseEstimate(np.zeros(n), np.zeros(n), A.T @ y, 0.0, noise_var)
    # numerically noiseless data still needs a finite likelihood scale
    work_var = max(noise_var, 1e-14 * signal_var)
    if max_active is None:
        max_active = max(1, min(m - 1, n))
    explored = _Pursuit(y, A, work_var, signal_var, prior).run(max_active, paths)
    supports = list(explored)
    logp = np.array([explored[s][0] for s in supports])
    w = np.exp(logp - logsumexp(logp))
    q = np.zeros(n)
    theta = np.zeros(n)
    for supp, wi in zip(supports, w):
        th = explored[supp][1]
        if supp and wi > 0:
            idx = list(supp)
            q[idx] += wi
            theta[idx] += wi * th
    np.clip(q, 0.0, 1.0, out=q)
    est = SparseEstimate(theta, q, np.zeros(n), signal_var, noise_var)
    # store the conditional (given active) mean, undoing the prior shrinkage
    active = q > 0
    est.coeffs[active] = theta[active] / q[active] / est.gain
    return est


def collaborative_refine(
    reference: SparseEstimate,
    members: list[SparseEstimate],
    weights,
    q_floor: float = 0.05,
) -> SparseEstimate:
    """Re-estimate the reference using the weighted mean of the group's
    active-tap probabilities."""
    weights = np.asarray(weights, dtype=float)
    if len(members) != len(weights):
        raise ValueError("one weight per member required")
    if len(members) <= 1 or reference.noise_var == 0.0:
        return reference
    q_bar = np.tensordot(weights / weights.sum(), np.stack([m.active_prob for m in members]), axes=1)
    theta = q_bar * reference.coeffs * reference.gain
    theta[q_bar < q_floor] = 0.0
    return SparseEstimate(theta, q_bar, reference.coeffs, reference.signal_var, reference.noise_var)
