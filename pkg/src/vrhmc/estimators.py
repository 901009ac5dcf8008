"""Stochastic gradient estimators with bounded mean-squared-error-bias (MSEB).

Each estimator consumes component gradients of a finite-sum potential and
produces a (possibly biased) estimate of the full gradient, maintaining
whatever per-chain memory its recursion needs:

    full   exact gradient, N component queries per call
    sg     plain minibatch (N/b) sum_{i in B} grad f_i(x), b queries
    svrg   minibatch control variate against a snapshot refreshed with
           probability 1/p per call
    saga   minibatch control variate against a table of the last stored
           gradient per component
    sarah  recursive difference estimator, restarted from the exact
           gradient with probability 1/p per call
    sarge  recursive SAGA-style estimator, never needing full-gradient
           restarts after initialization

All of them (except sg, whose variance is not controlled by iterate
movement) satisfy an MSEB bound: the mean squared error of the estimate
decays geometrically except for a forcing term proportional to

    Q_k = N * sum_i ||grad f_i(x_{k+1}) - grad f_i(x_k)||^2,

and the conditional bias contracts by a factor (1 - rho_b) per step.
mseb_descriptor returns the constants; conditional_mean_oracle computes
exact conditional expectations by enumerating every batch (and restart)
outcome, which is what the bias property tests check against.

Randomness contract: each estimate() call draws the restart coin first
(svrg and sarah only, and only when epoch_length > 1) and the batch
indices second, so a fixed generator state determines the estimate.
"""

from __future__ import annotations

import copy
import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ESTIMATOR_KINDS",
    "GradientEstimator",
    "FullGradient",
    "MinibatchGradient",
    "SvrgEstimator",
    "SagaEstimator",
    "SarahEstimator",
    "SargeEstimator",
    "make_estimator",
    "sample_batch",
    "conditional_mean_oracle",
    "q_metric",
    "MsebDescriptor",
    "mseb_descriptor",
    "MsebDiagnostics",
    "mseb_diagnostics",
]

ESTIMATOR_KINDS = ("full", "sg", "svrg", "saga", "sarah", "sarge")

# oracle enumeration refuses above this many batches
_MAX_ENUMERATION = 10_000

# running component-gradient sums are recomputed from the table this often
# to stop float drift over long chains
_RESUM_INTERVAL = 10_000


def sample_batch(rng, n_components, batch_size):
    """Uniform batch of distinct component indices.

    batch_size == n_components returns the full index set without
    consuming random draws, so full-batch runs stay aligned with
    full-gradient runs that share a noise stream.
    """
    if not 1 <= batch_size <= n_components:
        raise ValueError(
            f"batch_size must be in [1, {n_components}], got {batch_size}"
        )
    if batch_size == n_components:
        return np.arange(n_components)
    if batch_size == 1:
        return rng.integers(0, n_components, size=1)
    return rng.choice(n_components, size=batch_size, replace=False)


class GradientEstimator:
    """Base class: owns per-chain memory and the gradient-query counter.

    query_count counts component-gradient evaluations, the unit all
    cross-estimator comparisons are aligned by. Initialization costs
    n_components queries for estimators that store gradient state (svrg,
    saga, sarah, sarge) and nothing for full and sg.
    """

    kind = "base"

    def __init__(self, model, batch_size=1):
        n = model.n_components
        if not 1 <= batch_size <= n:
            raise ValueError(f"batch_size must be in [1, {n}], got {batch_size}")
        self.model = model
        self.batch_size = int(batch_size)
        self.query_count = 0

    def estimate(self, x, rng):
        """Return the gradient estimate at x, updating memory and queries."""
        raise NotImplementedError

    def _full_collapse(self):
        # with b == N every estimator below reduces algebraically to the
        # exact gradient; routing through gradient_full makes the collapse
        # bit-for-bit rather than merely up to summation order
        return self.batch_size == self.model.n_components


class FullGradient(GradientEstimator):
    """Exact full gradient; the baseline every estimator collapses to."""

    kind = "full"

    def __init__(self, model, batch_size=None):
        super().__init__(model, batch_size=model.n_components)

    def estimate(self, x, rng=None):
        self.query_count += self.model.n_components
        return self.model.gradient_full(x)


class MinibatchGradient(GradientEstimator):
    """Unbiased minibatch gradient (N/b) sum_{i in B} grad f_i(x)."""

    kind = "sg"

    def estimate(self, x, rng):
        batch = sample_batch(rng, self.model.n_components, self.batch_size)
        return self._apply(x, batch)

    def _apply(self, x, batch):
        self.query_count += len(batch)
        if self._full_collapse():
            return self.model.gradient_full(x)
        scale = self.model.n_components / len(batch)
        return scale * self.model.gradient_batch(batch, x).sum(axis=0)


class SvrgEstimator(GradientEstimator):
    """Minibatch gradient with a snapshot control variate.

    Keeps a snapshot point and its exact gradient; each call first decides
    (probability 1/epoch_length) whether to move the snapshot to the
    current point, then returns

        (N/b) sum_{i in B} (grad f_i(x) - grad f_i(snapshot)) + grad f(snapshot).

    epoch_length == 1 refreshes every call without consuming a coin draw.
    """

    kind = "svrg"

    def __init__(self, model, x0, batch_size=1, epoch_length=None):
        super().__init__(model, batch_size=batch_size)
        self.epoch_length = _resolve_epoch(model, batch_size, epoch_length)
        self.snapshot = np.array(x0, dtype=float)
        self.snapshot_gradient = model.gradient_full(self.snapshot)
        self.query_count = model.n_components

    def estimate(self, x, rng):
        refresh = self.epoch_length == 1 or rng.random() < 1.0 / self.epoch_length
        batch = sample_batch(rng, self.model.n_components, self.batch_size)
        return self._apply(x, batch, refresh)

    def _apply(self, x, batch, refresh):
        model = self.model
        if refresh:
            self.snapshot = np.array(x, dtype=float)
            self.snapshot_gradient = model.gradient_full(self.snapshot)
            self.query_count += model.n_components
        self.query_count += 2 * len(batch)
        correction = model.gradient_batch(batch, x) - model.gradient_batch(
            batch, self.snapshot
        )
        scale = model.n_components / len(batch)
        return scale * correction.sum(axis=0) + self.snapshot_gradient


class SagaEstimator(GradientEstimator):
    """Minibatch gradient with a per-component gradient table.

    The table phi stores the most recently evaluated gradient of every
    component; each call returns

        (N/b) sum_{i in B} (grad f_i(x) - phi_i) + sum_j phi_j

    and then overwrites phi_i for i in B. The table sum is maintained
    incrementally and recomputed every _RESUM_INTERVAL calls.
    """

    kind = "saga"

    def __init__(self, model, x0, batch_size=1):
        super().__init__(model, batch_size=batch_size)
        self.table = model.gradient_batch(np.arange(model.n_components), x0)
        self.table_sum = self.table.sum(axis=0)
        self.query_count = model.n_components
        self._calls_since_resum = 0

    def estimate(self, x, rng):
        batch = sample_batch(rng, self.model.n_components, self.batch_size)
        return self._apply(x, batch)

    def _apply(self, x, batch):
        model = self.model
        self.query_count += len(batch)
        fresh = model.gradient_batch(batch, x)
        residual = fresh - self.table[batch]
        if self._full_collapse():
            estimate = model.gradient_full(x)
        else:
            scale = model.n_components / len(batch)
            estimate = scale * residual.sum(axis=0) + self.table_sum
        self.table_sum = self.table_sum + residual.sum(axis=0)
        self.table[batch] = fresh
        self._calls_since_resum += 1
        if self._calls_since_resum >= _RESUM_INTERVAL:
            self.table_sum = self.table.sum(axis=0)
            self._calls_since_resum = 0
        return estimate


class SarahEstimator(GradientEstimator):
    """Recursive difference estimator with probabilistic restarts.

    With probability 1/epoch_length a call returns the exact gradient;
    otherwise it returns

        (N/b) sum_{i in B} (grad f_i(x) - grad f_i(x_prev)) + previous estimate.

    The estimate is conditionally biased: the residual against the exact
    gradient contracts by (1 - 1/epoch_length) per call in expectation.
    """

    kind = "sarah"

    def __init__(self, model, x0, batch_size=1, epoch_length=None):
        super().__init__(model, batch_size=batch_size)
        self.epoch_length = _resolve_epoch(model, batch_size, epoch_length)
        self.prev_point = np.array(x0, dtype=float)
        self.prev_estimate = model.gradient_full(self.prev_point)
        self.query_count = model.n_components

    def estimate(self, x, rng):
        restart = self.epoch_length == 1 or rng.random() < 1.0 / self.epoch_length
        if restart:
            return self._apply(x, None, True)
        batch = sample_batch(rng, self.model.n_components, self.batch_size)
        return self._apply(x, batch, False)

    def _apply(self, x, batch, restart):
        model = self.model
        if restart:
            estimate = model.gradient_full(x)
            self.query_count += model.n_components
        else:
            self.query_count += 2 * len(batch)
            diff = model.gradient_batch(batch, x) - model.gradient_batch(
                batch, self.prev_point
            )
            scale = model.n_components / len(batch)
            estimate = scale * diff.sum(axis=0) + self.prev_estimate
        self.prev_point = np.array(x, dtype=float)
        self.prev_estimate = estimate
        return estimate


class SargeEstimator(GradientEstimator):
    """Recursive table estimator that never restarts from a full gradient.

    Maintains a table psi with running sum and the previous estimate. With
    w = 1 - b/N, a call at x given previous point x_prev computes for each
    i in B

        psi_new_i = grad f_i(x) - w * grad f_i(x_prev)

    and returns

        (N/b) sum_{i in B} (psi_new_i - psi_i) + sum_j psi_j + w * previous estimate,

    then commits psi_i = psi_new_i for i in B. The conditional bias
    contracts by w per call. Initialization takes the point before the
    start to equal the start, so psi_i = (b/N) grad f_i(x0) and the
    previous estimate is the full gradient at x0; a full-size table would
    blow the first residuals up through the N/b scaling.
    """

    kind = "sarge"

    def __init__(self, model, x0, batch_size=1):
        super().__init__(model, batch_size=batch_size)
        components = model.gradient_batch(np.arange(model.n_components), x0)
        self.prev_estimate = components.sum(axis=0)
        self.table = (self.batch_size / model.n_components) * components
        self.table_sum = self.table.sum(axis=0)
        self.prev_point = np.array(x0, dtype=float)
        self.query_count = model.n_components
        self._calls_since_resum = 0

    def estimate(self, x, rng):
        batch = sample_batch(rng, self.model.n_components, self.batch_size)
        return self._apply(x, batch)

    def _apply(self, x, batch):
        model = self.model
        n = model.n_components
        self.query_count += 2 * len(batch)
        w = 1.0 - len(batch) / n
        fresh = model.gradient_batch(batch, x) - w * model.gradient_batch(
            batch, self.prev_point
        )
        residual = fresh - self.table[batch]
        if self._full_collapse():
            estimate = model.gradient_full(x)
        else:
            scale = n / len(batch)
            estimate = (
                scale * residual.sum(axis=0) + self.table_sum + w * self.prev_estimate
            )
        self.table_sum = self.table_sum + residual.sum(axis=0)
        self.table[batch] = fresh
        self.prev_point = np.array(x, dtype=float)
        self.prev_estimate = estimate
        self._calls_since_resum += 1
        if self._calls_since_resum >= _RESUM_INTERVAL:
            self.table_sum = self.table.sum(axis=0)
            self._calls_since_resum = 0
        return estimate


def _resolve_epoch(model, batch_size, epoch_length):
    if epoch_length is None:
        return max(1, round(model.n_components / batch_size))
    epoch_length = int(epoch_length)
    if epoch_length < 1:
        raise ValueError(f"epoch_length must be >= 1, got {epoch_length}")
    return epoch_length


def make_estimator(kind, model, x0, batch_size=1, epoch_length=None):
    """Construct an estimator by kind name, initialized at x0."""
    kind = kind.lower()
    x0 = model._check_point(x0)
    if kind == "full":
        return FullGradient(model)
    if kind == "sg":
        return MinibatchGradient(model, batch_size=batch_size)
    if kind == "svrg":
        return SvrgEstimator(
            model, x0, batch_size=batch_size, epoch_length=epoch_length
        )
    if kind == "saga":
        return SagaEstimator(model, x0, batch_size=batch_size)
    if kind == "sarah":
        return SarahEstimator(
            model, x0, batch_size=batch_size, epoch_length=epoch_length
        )
    if kind == "sarge":
        return SargeEstimator(model, x0, batch_size=batch_size)
    raise ValueError(f"unknown estimator kind {kind!r}; choose from {ESTIMATOR_KINDS}")


def conditional_mean_oracle(estimator, model, x_next):
    """Exact conditional mean of the next estimate at x_next.

    Enumerates every batch (and every restart outcome for svrg and sarah)
    with its probability, evaluating each branch on a deep copy so the
    estimator state is left untouched. Refuses when the number of batches
    C(N, b) exceeds 10_000; this is a test oracle, not a runtime path.
    """
    n, b = model.n_components, estimator.batch_size
    n_batches = math.comb(n, b)
    if n_batches > _MAX_ENUMERATION:
        raise ValueError(
            f"enumeration over C({n}, {b}) = {n_batches} batches exceeds "
            f"{_MAX_ENUMERATION}"
        )
    x_next = model._check_point(x_next)
    if estimator.kind == "full":
        return model.gradient_full(x_next)

    batches = [np.array(c) for c in itertools.combinations(range(n), b)]
    if estimator.kind in ("svrg", "sarah"):
        p_restart = 1.0 / estimator.epoch_length
        branches = [(True, p_restart), (False, 1.0 - p_restart)]
        mean = np.zeros(model.dimension)
        for restart, weight in branches:
            if weight == 0.0:
                continue
            for batch in batches:
                clone = copy.deepcopy(estimator)
                mean += (weight / n_batches) * clone._apply(x_next, batch, restart)
        return mean

    mean = np.zeros(model.dimension)
    for batch in batches:
        clone = copy.deepcopy(estimator)
        mean += clone._apply(x_next, batch) / n_batches
    return mean


def q_metric(model, x_current, x_next):
    """Iterate-movement forcing term N * sum_i ||grad f_i(x') - grad f_i(x)||^2.

    This is the quantity whose decay along a chain drives every MSEB
    estimator's error bound. Costs O(N d) per evaluation.
    """
    x_current = model._check_point(x_current)
    x_next = model._check_point(x_next)
    indices = np.arange(model.n_components)
    diff = model.gradient_batch(indices, x_next) - model.gradient_batch(
        indices, x_current
    )
    return float(model.n_components * np.sum(diff * diff))


@dataclass(frozen=True)
class MsebDescriptor:
    """MSEB constants of an estimator configuration.

    The bound has the shape

        M_k <= M1 * Q_k + F_k + (1 - rho_m) * M_{k-1},
        F_k <= sum_{l<k} M2 * (1 - rho_f)^{k-l} * Q_l,

    with conditional bias contracting by (1 - rho_b). bounded is False for
    plain minibatch gradients, whose error is not controlled by iterate
    movement; their theta is infinite.
    """

    kind: str
    m1: float
    m2: float
    rho_m: float
    rho_f: float
    rho_b: float
    bounded: bool = True

    @property
    def theta(self):
        """Aggregate constant M1/rho_m + M2/(rho_m rho_f) entering step bounds."""
        if not self.bounded:
            return math.inf
        return self.m1 / self.rho_m + self.m2 / (self.rho_m * self.rho_f)


def mseb_descriptor(kind, n_components, batch_size=1, epoch_length=None):
    """MSEB constants for an estimator kind at the given configuration."""
    kind = kind.lower()
    n = int(n_components)
    b = int(batch_size)
    if not 1 <= b <= n:
        raise ValueError(f"batch_size must be in [1, {n}], got {b}")
    if kind == "full":
        return MsebDescriptor(kind, m1=0.0, m2=0.0, rho_m=1.0, rho_f=1.0, rho_b=1.0)
    if kind == "sg":
        nan = math.nan
        return MsebDescriptor(
            kind, m1=nan, m2=nan, rho_m=nan, rho_f=nan, rho_b=1.0, bounded=False
        )
    if kind == "saga":
        return MsebDescriptor(
            kind, m1=3.0 * n / b**2, m2=0.0, rho_m=b / (2.0 * n), rho_f=1.0, rho_b=1.0
        )
    if kind == "svrg":
        p = _descriptor_epoch(n, b, epoch_length)
        return MsebDescriptor(
            kind, m1=3.0 * p / b, m2=0.0, rho_m=1.0 / (2.0 * p), rho_f=1.0, rho_b=1.0
        )
    if kind == "sarah":
        p = _descriptor_epoch(n, b, epoch_length)
        return MsebDescriptor(
            kind, m1=1.0, m2=0.0, rho_m=1.0 / p, rho_f=1.0, rho_b=1.0 / p
        )
    if kind == "sarge":
        return MsebDescriptor(
            kind,
            m1=12.0,
            m2=(27.0 + 12.0 * b) / n,
            rho_m=b / (2.0 * n),
            rho_f=b / (2.0 * n),
            rho_b=b / n,
        )
    raise ValueError(f"unknown estimator kind {kind!r}; choose from {ESTIMATOR_KINDS}")


def _descriptor_epoch(n, b, epoch_length):
    if epoch_length is None:
        return max(1, round(n / b))
    epoch_length = int(epoch_length)
    if epoch_length < 1:
        raise ValueError(f"epoch_length must be >= 1, got {epoch_length}")
    return epoch_length


@dataclass
class MsebDiagnostics:
    """Realized per-step MSEB quantities for one estimate."""

    gradient_error_sq: float
    q_value: float | None = None
    bias_residual: np.ndarray | None = None


def mseb_diagnostics(
    model, estimate, x_current, x_next=None, estimator=None
):
    """Collect realized diagnostics for one step.

    gradient_error_sq compares the estimate against the exact gradient at
    x_current. q_value needs the next iterate. bias_residual, the exact
    conditional bias of the NEXT estimate, needs the estimator state and
    is enumeration-based, so it is only for small instances.
    """
    exact = model.gradient_full(x_current)
    err = estimate - exact
    diag = MsebDiagnostics(gradient_error_sq=float(err @ err))
    if x_next is not None:
        diag.q_value = q_metric(model, x_current, x_next)
        if estimator is not None:
            mean_next = conditional_mean_oracle(estimator, model, x_next)
            diag.bias_residual = model.gradient_full(x_next) - mean_next
    return diag
