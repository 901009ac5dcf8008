"""Chain driver: single chains, seeded ensembles, and convergence tracking.

run_chain couples one gradient estimator to the exact gradient-conditioned
integrator step and records a thinned trace of the trajectory. Every chain
derives two independent generator streams from its seed, one for the
estimator's batch and restart draws and one for the integrator noise, so
changing the estimator never perturbs the thermal noise sequence. That
makes runs with different estimators under the same seed exactly paired,
and makes full-batch runs collapse bit-for-bit onto full-gradient runs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .estimators import ESTIMATOR_KINDS, make_estimator, q_metric
from .integrator import DynamicsParams, noise_coefficients, _advance
from .metrics import GaussianSummary, bures_w2

__all__ = [
    "SamplerConfig",
    "RunRecord",
    "EnsembleResult",
    "ChainDivergence",
    "run_chain",
    "run_ensemble",
    "wasserstein_tracker",
    "run_record_csv",
]

# a chain is declared divergent when ||x|| exceeds this multiple of its
# initial scale (with floor 1), which catches overflow long before inf
_DIVERGENCE_FACTOR = 1e6


class ChainDivergence(RuntimeError):
    """Raised when a chain's position norm explodes or turns non-finite."""

    def __init__(self, chain_id, step_index, delta):
        self.chain_id = chain_id
        self.step_index = step_index
        self.delta = delta
        super().__init__(
            f"chain {chain_id} diverged at step {step_index} "
            f"(position norm exceeded {_DIVERGENCE_FACTOR:.0e} x initial scale; "
            f"delta={delta!r})"
        )


@dataclass
class SamplerConfig:
    """Everything one chain needs besides the model.

    xi defaults to 1/L (resolved against the model at run time) and gamma
    to 2, which keeps delta = gamma xi h of order h/L. Diagnostics are
    off by default: the squared gradient error costs an extra full
    gradient per recorded step and q values cost O(N d).
    """

    n_steps: int
    step: float
    estimator: str = "full"
    batch_size: int = 1
    epoch_length: int | None = None
    gamma: float = 2.0
    xi: float | None = None
    burn_in: int = 10_000
    record_stride: int = 1
    n_chains: int = 1
    seed: int = 0
    x0: object = None
    diagnostics: bool = False
    record_q: bool = False
    record_velocity: bool = False
    suppress_noise: bool = False

    def __post_init__(self):
        if self.estimator not in ESTIMATOR_KINDS:
            raise ValueError(
                f"unknown estimator {self.estimator!r}; choose from {ESTIMATOR_KINDS}"
            )
        if self.n_steps < 0:
            raise ValueError("n_steps must be nonnegative")
        if self.step <= 0.0:
            raise ValueError("step must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epoch_length is not None and self.epoch_length < 1:
            raise ValueError("epoch_length must be at least 1")
        if self.gamma <= 0.0 or (self.xi is not None and self.xi <= 0.0):
            raise ValueError("gamma and xi must be positive")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.n_steps > 0 and self.burn_in >= self.n_steps:
            raise ValueError("burn_in must be smaller than n_steps")
        if self.record_stride < 1:
            raise ValueError("record_stride must be at least 1")
        if self.n_chains < 1:
            raise ValueError("n_chains must be at least 1")

    def resolve_xi(self, model):
        return self.xi if self.xi is not None else 1.0 / model.smoothness

    def dynamics(self, model):
        return DynamicsParams(
            gamma=self.gamma, xi=self.resolve_xi(model), step=self.step
        )

    def initial_point(self, model):
        if self.x0 is None:
            return np.zeros(model.dimension)
        x0 = np.asarray(self.x0, dtype=float)
        if x0.ndim == 0:
            return np.full(model.dimension, float(x0))
        return model._check_point(x0)


@dataclass
class RunRecord:
    """Thinned trace of one chain.

    Row r describes iteration iterations[r]: the position BEFORE that
    step, the potential there, the cumulative gradient queries including
    the estimate used by that step, and (optionally) the squared error of
    that estimate and the q value of the transition it produced. With
    n_steps == 0 the record holds the single initial row.
    """

    chain_id: int
    burn_in: int
    iterations: np.ndarray
    queries: np.ndarray
    potentials: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray | None
    grad_err_sq: np.ndarray | None
    q_values: np.ndarray | None
    running_mean_potential: np.ndarray
    mean_potential: float
    final_mean: np.ndarray
    final_cov: np.ndarray | None
    total_queries: int
    wall_time: float


def run_chain(config, model, seed_seq=None, chain_id=0):
    """Run one chain and return its RunRecord.

    seed_seq defaults to SeedSequence(config.seed); ensembles pass spawned
    children so chains are independent but reproducible.
    """
    if seed_seq is None:
        seed_seq = np.random.SeedSequence(config.seed)
    est_stream, noise_stream = seed_seq.spawn(2)
    est_rng = np.random.default_rng(est_stream)
    noise_rng = np.random.default_rng(noise_stream)

    coeffs = noise_coefficients(config.dynamics(model))
    x = config.initial_point(model)
    d = model.dimension
    v = np.zeros(d)
    estimator = make_estimator(
        config.estimator,
        model,
        x,
        batch_size=config.batch_size,
        epoch_length=config.epoch_length,
    )
    limit_sq = (_DIVERGENCE_FACTOR * max(float(np.linalg.norm(x)), 1.0)) ** 2

    n_steps = config.n_steps
    stride = config.record_stride
    n_rows = 1 if n_steps == 0 else (n_steps + stride - 1) // stride
    iterations = np.empty(n_rows, dtype=np.int64)
    queries = np.empty(n_rows, dtype=np.int64)
    potentials = np.empty(n_rows)
    positions = np.empty((n_rows, d))
    velocities = np.empty((n_rows, d)) if config.record_velocity else None
    grad_errs = np.empty(n_rows) if config.diagnostics else None
    q_values = np.empty(n_rows) if config.record_q else None

    suppress = config.suppress_noise
    diagnostics = config.diagnostics
    record_q = config.record_q
    standard_normal = noise_rng.standard_normal
    l_xx, l_vx, l_vv = coeffs.l_xx, coeffs.l_vx, coeffs.l_vv

    started = time.perf_counter()
    row = 0
    for k in range(n_steps):
        grad = estimator.estimate(x, est_rng)
        recording = k % stride == 0
        if recording:
            iterations[row] = k
            queries[row] = estimator.query_count
            potentials[row] = model.potential_full(x)
            positions[row] = x
            if velocities is not None:
                velocities[row] = v
            if diagnostics:
                err = grad - model.gradient_full(x)
                grad_errs[row] = err @ err
        if suppress:
            e_x = e_v = 0.0
        else:
            z = standard_normal((2, d))
            e_x = l_xx * z[0]
            e_v = l_vx * z[0] + l_vv * z[1]
        x_prev = x
        x, v = _advance(x, v, grad, coeffs, e_x, e_v)
        if recording:
            if record_q:
                q_values[row] = q_metric(model, x_prev, x)
            row += 1
        norm_sq = x @ x
        if not norm_sq <= limit_sq:  # catches NaN as well as blowup
            raise ChainDivergence(chain_id, k, coeffs.delta)
    if n_steps == 0:
        iterations[0] = 0
        queries[0] = estimator.query_count
        potentials[0] = model.potential_full(x)
        positions[0] = x
        if velocities is not None:
            velocities[0] = v
        if diagnostics:
            grad_errs[0] = np.nan
        if record_q:
            q_values[0] = np.nan
    wall = time.perf_counter() - started

    tail = iterations >= config.burn_in
    running = np.full(n_rows, np.nan)
    if tail.any():
        counts = np.arange(1, int(tail.sum()) + 1)
        running[tail] = np.cumsum(potentials[tail]) / counts
        mean_potential = float(running[tail][-1])
        tail_positions = positions[tail]
        final_mean = tail_positions.mean(axis=0)
        if tail_positions.shape[0] >= 2:
            centered = tail_positions - final_mean
            final_cov = centered.T @ centered / (tail_positions.shape[0] - 1)
        else:
            final_cov = None
    else:
        mean_potential = float(np.nan)
        final_mean = np.full(d, np.nan)
        final_cov = None

    return RunRecord(
        chain_id=chain_id,
        burn_in=config.burn_in,
        iterations=iterations,
        queries=queries,
        potentials=potentials,
        positions=positions,
        velocities=velocities,
        grad_err_sq=grad_errs,
        q_values=q_values,
        running_mean_potential=running,
        mean_potential=mean_potential,
        final_mean=final_mean,
        final_cov=final_cov,
        total_queries=int(estimator.query_count),
        wall_time=wall,
    )


@dataclass
class EnsembleResult:
    """Per-chain records plus across-chain means on the shared grid.

    Chains share the recorded-iteration grid; queries can differ between
    chains for estimators with random restarts, so the aggregate query
    axis is the across-chain mean.
    """

    records: list
    iterations: np.ndarray
    mean_queries: np.ndarray
    mean_potentials: np.ndarray
    mean_grad_err_sq: np.ndarray | None
    mean_q_values: np.ndarray | None
    pooled: GaussianSummary | None
    w2: np.ndarray | None = field(default=None)


def run_ensemble(config, model):
    """Run config.n_chains chains with independently spawned seed streams."""
    children = np.random.SeedSequence(config.seed).spawn(config.n_chains)
    records = [
        run_chain(config, model, seed_seq=child, chain_id=j)
        for j, child in enumerate(children)
    ]
    iterations = records[0].iterations
    for record in records[1:]:
        if not np.array_equal(record.iterations, iterations):
            raise RuntimeError("chains disagree on the recorded iteration grid")
    mean_queries = np.mean([r.queries for r in records], axis=0)
    mean_potentials = np.mean([r.potentials for r in records], axis=0)
    mean_grad = (
        np.mean([r.grad_err_sq for r in records], axis=0)
        if config.diagnostics
        else None
    )
    mean_q = (
        np.mean([r.q_values for r in records], axis=0) if config.record_q else None
    )
    tail = iterations >= config.burn_in
    pooled = None
    pooled_positions = np.concatenate([r.positions[tail] for r in records])
    if pooled_positions.shape[0] >= model.dimension + 1:
        pooled = GaussianSummary.from_samples(pooled_positions)
    return EnsembleResult(
        records=records,
        iterations=iterations,
        mean_queries=mean_queries,
        mean_potentials=mean_potentials,
        mean_grad_err_sq=mean_grad,
        mean_q_values=mean_q,
        pooled=pooled,
    )


def wasserstein_tracker(records, target_mean, target_cov):
    """Gaussian W2 distance to the target along the pooled sample stream.

    At each recorded iteration past burn-in, a Gaussian is fitted to all
    post-burn-in positions pooled across chains up to and including that
    row, and its Bures-Wasserstein distance to the target is returned.
    Rows before burn-in, or with fewer than d + 1 pooled samples, hold
    NaN. Raises if even the full stream is too short to fit a covariance.
    """
    target = GaussianSummary(
        mean=np.asarray(target_mean, dtype=float),
        cov=np.asarray(target_cov, dtype=float),
    )
    iterations = records[0].iterations
    for record in records[1:]:
        if not np.array_equal(record.iterations, iterations):
            raise ValueError("records disagree on the recorded iteration grid")
    burn_in = records[0].burn_in
    d = records[0].positions.shape[1]
    n_chains = len(records)
    n_rows = iterations.shape[0]
    tail = iterations >= burn_in

    stacked = np.stack([r.positions for r in records])  # (chains, rows, d)
    masked = np.where(tail[None, :, None], stacked, 0.0)
    cum_sum = np.cumsum(masked.sum(axis=0), axis=0)
    row_outer = np.einsum("cri,crj->rij", masked, masked)
    cum_outer = np.cumsum(row_outer, axis=0)
    counts = np.cumsum(tail) * n_chains

    w2 = np.full(n_rows, np.nan)
    for r in range(n_rows):
        n = counts[r]
        if not tail[r] or n < d + 1:
            continue
        mean = cum_sum[r] / n
        cov = (cum_outer[r] - n * np.outer(mean, mean)) / (n - 1)
        w2[r] = bures_w2(GaussianSummary(mean=mean, cov=0.5 * (cov + cov.T)), target)
    if counts[-1] < d + 1:
        raise ValueError(
            f"only {int(counts[-1])} pooled post-burn-in samples, need at least {d + 1}"
        )
    return w2


def run_record_csv(record, w2=None):
    """Render one record as CSV text (iter,queries,potential,grad_err_sq,q_k,w2).

    Missing diagnostic columns are written as nan. Floats use repr, so the
    same record always renders to identical bytes.
    """
    n_rows = record.iterations.shape[0]
    nan_col = np.full(n_rows, np.nan)
    grad = record.grad_err_sq if record.grad_err_sq is not None else nan_col
    q = record.q_values if record.q_values is not None else nan_col
    w2 = w2 if w2 is not None else nan_col
    lines = ["iter,queries,potential,grad_err_sq,q_k,w2"]
    for r in range(n_rows):
        lines.append(
            f"{record.iterations[r]},{record.queries[r]},"
            f"{float(record.potentials[r])!r},{float(grad[r])!r},"
            f"{float(q[r])!r},{float(w2[r])!r}"
        )
    return "\n".join(lines) + "\n"
