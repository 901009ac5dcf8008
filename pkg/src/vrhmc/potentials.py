"""Finite-sum potentials for smooth, strongly log-concave targets.

A potential is f(x) = sum_i f_i(x) over n_components smooth terms. The
samplers in this package touch a target only through component gradients,
full gradients, and potential values, so new targets plug in by
subclassing PotentialModel and implementing the component-level methods.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PotentialModel",
    "QuadraticPotential",
    "LogisticPotential",
    "sigmoid",
    "softplus",
]


def sigmoid(t):
    """Logistic function, evaluated without overflow for large |t|."""
    return 0.5 * (1.0 + np.tanh(0.5 * t))


def softplus(t):
    """log(1 + exp(t)) via max(t, 0) + log1p(exp(-|t|)), stable for large |t|."""
    return np.maximum(t, 0.0) + np.log1p(np.exp(-np.abs(t)))


class PotentialModel:
    """Base class for finite-sum potentials f(x) = sum_i f_i(x).

    Attributes
    ----------
    n_components : int
        Number of summands N.
    dimension : int
        Dimension d of the state space.
    smoothness : float
        Lipschitz constant L of the full gradient.
    strong_convexity : float
        Strong convexity constant m of f (0 when the model is only convex).
    """

    n_components: int
    dimension: int
    smoothness: float
    strong_convexity: float

    @property
    def condition_number(self):
        return self.smoothness / self.strong_convexity

    def gradient_component(self, i, x):
        """Gradient of the single component f_i at x."""
        raise NotImplementedError

    def gradient_batch(self, indices, x):
        """Component gradients stacked into a (len(indices), d) array.

        Subclasses override this with a vectorized version; the default
        just loops over gradient_component.
        """
        x = self._check_point(x)
        return np.stack([self.gradient_component(i, x) for i in indices])

    def gradient_full(self, x):
        """Gradient of the full potential, sum_i grad f_i(x)."""
        x = self._check_point(x)
        return self.gradient_batch(np.arange(self.n_components), x).sum(axis=0)

    def potential_component(self, i, x):
        """Value of the single component f_i at x."""
        raise NotImplementedError

    def potential_full(self, x):
        """Value of the full potential f(x)."""
        x = self._check_point(x)
        return float(
            sum(self.potential_component(i, x) for i in range(self.n_components))
        )

    def _check_point(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(
                f"point has shape {x.shape}, expected ({self.dimension},)"
            )
        return x

    def _check_index(self, i):
        i = int(i)
        if not 0 <= i < self.n_components:
            raise IndexError(
                f"component index {i} out of range [0, {self.n_components})"
            )
        return i


class QuadraticPotential(PotentialModel):
    """Quadratic finite sum f(x) = sum_i (1/N) (d_i - x)^T P (d_i - x).

    P is a symmetric positive-definite precision-like matrix shared by all
    components and d_i are anchor points. The normalized density
    exp(-f(x)) is Gaussian with mean equal to the anchor average and
    covariance P^{-1} / 2; both are available analytically, which makes
    this model the reference target for integrator and estimator checks.

    Because the Hessian of f is 2P, the model reports smoothness 2*max
    eigenvalue of P and strong convexity 2*min eigenvalue of P.
    """

    def __init__(self, data, precision):
        data = np.atleast_2d(np.asarray(data, dtype=float))
        precision = np.asarray(precision, dtype=float)
        n, d = data.shape
        if precision.shape != (d, d):
            raise ValueError(
                f"precision has shape {precision.shape}, expected ({d}, {d})"
            )
        if not np.allclose(precision, precision.T, rtol=0.0, atol=1e-12):
            raise ValueError("precision matrix must be symmetric")
        eigvals, eigvecs = np.linalg.eigh(precision)
        if eigvals[0] <= 0.0:
            raise ValueError("precision matrix must be positive definite")

        self.data = data
        self.precision = precision
        self.n_components = n
        self.dimension = d
        self.smoothness = 2.0 * float(eigvals[-1])
        self.strong_convexity = 2.0 * float(eigvals[0])
        self._anchor_mean = data.mean(axis=0)
        # covariance of exp(-f): P^{-1} / 2, assembled from the eigenbasis
        self._covariance = (eigvecs / eigvals) @ eigvecs.T / 2.0
        # f(x) = (x - dbar)^T P (x - dbar) + spread, cross terms cancel
        centered = data - self._anchor_mean
        self._potential_offset = float(
            np.sum((centered @ precision) * centered)
        ) / n

    @classmethod
    def random(
        cls,
        n_components,
        dimension,
        max_eigenvalue=10.0,
        min_eigenvalue=1.0,
        seed=0,
        anchor_mean=2.0,
        anchor_variance=2.0,
    ):
        """Draw a random instance with a controlled precision spectrum.

        Anchors are sampled i.i.d. from N(anchor_mean, anchor_variance * I).
        The precision matrix has a random orthogonal eigenbasis; its
        spectrum is pinned to [min_eigenvalue, max_eigenvalue] at the
        endpoints with any interior eigenvalues drawn log-uniformly in
        between. With dimension 1 the single eigenvalue is max_eigenvalue.
        """
        if not 0.0 < min_eigenvalue <= max_eigenvalue:
            raise ValueError("need 0 < min_eigenvalue <= max_eigenvalue")
        rng = np.random.default_rng(seed)
        data = anchor_mean + np.sqrt(anchor_variance) * rng.standard_normal(
            (n_components, dimension)
        )
        if dimension == 1:
            eigvals = np.array([max_eigenvalue])
        else:
            interior = np.exp(
                rng.uniform(
                    np.log(min_eigenvalue), np.log(max_eigenvalue), dimension - 2
                )
            )
            eigvals = np.sort(
                np.concatenate([[min_eigenvalue, max_eigenvalue], interior])
            )
        basis, _ = np.linalg.qr(rng.standard_normal((dimension, dimension)))
        precision = (basis * eigvals) @ basis.T
        precision = 0.5 * (precision + precision.T)
        return cls(data, precision)

    def gradient_component(self, i, x):
        i = self._check_index(i)
        x = self._check_point(x)
        return (2.0 / self.n_components) * (self.precision @ (x - self.data[i]))

    def gradient_batch(self, indices, x):
        x = self._check_point(x)
        diffs = x[None, :] - self.data[indices]
        return (2.0 / self.n_components) * (diffs @ self.precision)

    def gradient_full(self, x):
        x = self._check_point(x)
        return 2.0 * (self.precision @ (x - self._anchor_mean))

    def potential_component(self, i, x):
        i = self._check_index(i)
        x = self._check_point(x)
        r = self.data[i] - x
        return float(r @ self.precision @ r) / self.n_components

    def potential_full(self, x):
        # centered closed form, O(d^2) instead of O(N d^2)
        x = self._check_point(x)
        r = x - self._anchor_mean
        return float(r @ self.precision @ r) + self._potential_offset

    def target_moments(self):
        """Mean and covariance of the normalized density exp(-f)."""
        return self._anchor_mean.copy(), self._covariance.copy()

    def mean_potential(self):
        """E[f(X)] under the target, in closed form.

        Writing dbar for the anchor average, the expectation is
        d/2 + (1/N) sum_i (dbar - d_i)^T P (dbar - d_i); the d/2 term is
        the trace of P times the target covariance P^{-1}/2.
        """
        return 0.5 * self.dimension + self._potential_offset


class LogisticPotential(PotentialModel):
    """Ridge-regularized logistic regression potential.

    For feature rows a_i with labels y_i in {-1, +1} and ridge weight
    lambda >= 0, the components are

        f_i(x) = (lambda / (2N)) ||x||^2 + log(1 + exp(-y_i a_i^T x)),

    so the full potential is the usual penalized negative log-likelihood
    with the ridge term split evenly across components. The gradient is
    (lambda + max_eig(A^T A)/4)-Lipschitz; the max eigenvalue is estimated
    by 100 steps of power iteration at construction.
    """

    _POWER_STEPS = 100

    def __init__(self, features, labels, ridge=1.0):
        features = np.asarray(features, dtype=float)
        labels = np.asarray(labels, dtype=float)
        if features.ndim != 2:
            raise ValueError("features must be a 2-d array")
        n, d = features.shape
        if labels.shape != (n,):
            raise ValueError(f"labels have shape {labels.shape}, expected ({n},)")
        if not np.all(np.isin(labels, (-1.0, 1.0))):
            raise ValueError("labels must take values in {-1, +1}")
        if ridge < 0.0:
            raise ValueError("ridge weight must be nonnegative")

        self.features = features
        self.labels = labels
        self.ridge = float(ridge)
        self.n_components = n
        self.dimension = d
        self.smoothness = self.ridge + self._gram_max_eigenvalue() / 4.0
        self.strong_convexity = self.ridge

    @classmethod
    def from_dataset(cls, dataset, ridge=1.0):
        """Build from a dataio.Dataset (rows are densified)."""
        return cls(dataset.to_dense(), dataset.labels, ridge=ridge)

    def _gram_max_eigenvalue(self):
        # deterministic power iteration on A^T A from an all-ones start
        v = np.ones(self.dimension) / np.sqrt(self.dimension)
        for _ in range(self._POWER_STEPS):
            w = self.features.T @ (self.features @ v)
            norm = np.linalg.norm(w)
            if norm == 0.0:
                return 0.0
            v = w / norm
        return float(v @ (self.features.T @ (self.features @ v)))

    def _margins(self, x, indices=None):
        if indices is None:
            return self.labels * (self.features @ x)
        return self.labels[indices] * (self.features[indices] @ x)

    def gradient_component(self, i, x):
        i = self._check_index(i)
        x = self._check_point(x)
        z = self.labels[i] * (self.features[i] @ x)
        coef = -self.labels[i] * sigmoid(-z)
        return (self.ridge / self.n_components) * x + coef * self.features[i]

    def gradient_batch(self, indices, x):
        x = self._check_point(x)
        rows = self.features[indices]
        y = self.labels[indices]
        coef = -y * sigmoid(-y * (rows @ x))
        return (self.ridge / self.n_components) * x[None, :] + coef[:, None] * rows

    def gradient_full(self, x):
        x = self._check_point(x)
        coef = -self.labels * sigmoid(-self._margins(x))
        return self.ridge * x + self.features.T @ coef

    def potential_component(self, i, x):
        i = self._check_index(i)
        x = self._check_point(x)
        z = self.labels[i] * (self.features[i] @ x)
        return float(
            0.5 * self.ridge / self.n_components * (x @ x) + softplus(-z)
        )

    def potential_full(self, x):
        x = self._check_point(x)
        return float(0.5 * self.ridge * (x @ x) + softplus(-self._margins(x)).sum())

    def negative_log_likelihood(self, x):
        """Likelihood part only, sum_i log(1 + exp(-y_i a_i^T x))."""
        x = self._check_point(x)
        return float(softplus(-self._margins(x)).sum())
