"""Accuracy metrics: Gaussian 2-Wasserstein distance, MSEs, held-out NLL."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .potentials import softplus

__all__ = [
    "GaussianSummary",
    "bures_w2",
    "gradient_mse",
    "potential_mse",
    "test_nll",
]


@dataclass(frozen=True)
class GaussianSummary:
    """Mean vector and covariance matrix of a Gaussian fit."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValueError("mean must be a vector and cov a matching square matrix")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10 * max(1.0, np.abs(cov).max())):
            raise ValueError("covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @classmethod
    def from_samples(cls, samples):
        samples = np.atleast_2d(np.asarray(samples, dtype=float))
        if samples.shape[0] < 2:
            raise ValueError("need at least two samples to fit a covariance")
        mean = samples.mean(axis=0)
        centered = samples - mean
        cov = centered.T @ centered / (samples.shape[0] - 1)
        return cls(mean=mean, cov=cov)


def _sqrtm_psd(matrix):
    # symmetric square root via eigendecomposition, clamping the tiny
    # negative eigenvalues that sample covariances produce
    eigvals, eigvecs = np.linalg.eigh(matrix)
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def bures_w2(a: GaussianSummary, b: GaussianSummary) -> float:
    """2-Wasserstein distance between Gaussians.

    W2^2 = ||mu_a - mu_b||^2
           + tr(C_a + C_b - 2 (C_a^{1/2} C_b C_a^{1/2})^{1/2}).

    The formula is evaluated after ordering the arguments by a canonical
    byte key, so the result is exactly symmetric in its inputs despite the
    asymmetric-looking cross term.
    """
    if a.mean.size != b.mean.size:
        raise ValueError("summaries have mismatched dimensions")
    key_a = (a.mean.tobytes(), a.cov.tobytes())
    key_b = (b.mean.tobytes(), b.cov.tobytes())
    if key_b < key_a:
        a, b = b, a
    root_a = _sqrtm_psd(a.cov)
    cross = _sqrtm_psd(root_a @ b.cov @ root_a)
    shift = a.mean - b.mean
    w2_sq = float(shift @ shift + np.trace(a.cov) + np.trace(b.cov) - 2.0 * np.trace(cross))
    return float(np.sqrt(max(w2_sq, 0.0)))


def gradient_mse(record):
    """Time-averaged squared gradient error over post-burn-in recorded steps."""
    if record.grad_err_sq is None:
        raise ValueError("run was recorded without gradient diagnostics")
    mask = record.iterations >= record.burn_in
    if not mask.any():
        raise ValueError("no recorded steps past burn-in")
    return float(record.grad_err_sq[mask].mean())


def potential_mse(records, reference):
    """Mean squared error of per-chain time-averaged potentials.

    reference is the true mean potential under the target; each chain
    contributes (its post-burn-in time average - reference)^2.
    """
    if not records:
        raise ValueError("no run records given")
    deviations = [record.mean_potential - reference for record in records]
    return float(np.mean(np.square(deviations)))


def test_nll(features, labels, samples):
    """Average held-out negative log-likelihood per data point.

    Averages log(1 + exp(-y a^T x)) over all test rows and all posterior
    samples x. The prior term is deliberately excluded.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if features.shape[0] != labels.shape[0]:
        raise ValueError("features and labels disagree on the number of rows")
    if features.shape[0] == 0 or samples.shape[0] == 0:
        raise ValueError("need at least one test row and one sample")
    margins = labels[None, :] * (samples @ features.T)
    return float(softplus(-margins).mean())
