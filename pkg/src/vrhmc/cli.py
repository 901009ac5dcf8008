"""Experiment driver and command-line interface.

Three subcommands:

    synthetic   estimator comparison on the analytic quadratic target
    logistic    estimator comparison on Bayesian logistic regression
    advisory    print the theory-side step-size bound per estimator

Configuration is a flat key = value text file ('#' starts a comment) plus
command-line overrides. Keys that apply to a single method are prefixed
with the method name, e.g. 'svrg.epoch = 500'. Given the same config and
seed, every emitted file is byte-identical between runs; wall-clock times
are therefore reported on stderr only, never written into results.

Example config:

    experiment = synthetic
    n_components = 1000
    dimension = 5
    methods = full, sg, svrg, saga, sarah, sarge
    step = 0.1
    steps = 20000
    burn_in = 2000
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import dataio, metrics
from .estimators import ESTIMATOR_KINDS, mseb_descriptor
from .potentials import LogisticPotential, QuadraticPotential
from .sampler import SamplerConfig, run_ensemble, wasserstein_tracker

__all__ = [
    "ExperimentConfig",
    "load_config",
    "run_synthetic",
    "run_logistic",
    "print_advisory",
    "main",
]

_PAPER_SCALE = {"steps": 10_010_000, "burn_in": 10_000, "stride": 1_000, "chains": 10}


@dataclass
class ExperimentConfig:
    """Resolved experiment description (defaults are desk scale)."""

    experiment: str = "synthetic"
    seed: int = 0
    out: str = "results"
    methods: tuple = ("full", "sg", "svrg", "saga", "sarah", "sarge")
    batch: int = 1
    epoch: int | None = None
    step: float = 0.1
    gamma: float = 2.0
    xi: float | None = None
    steps: int = 20_000
    burn_in: int = 2_000
    stride: int = 10
    chains: int = 4
    diagnostics: bool = False
    record_q: bool = False
    paper_scale: bool = False
    # synthetic target
    n_components: int = 1000
    dimension: int = 5
    max_eigenvalue: float = 10.0
    min_eigenvalue: float = 1.0
    data_seed: int = 7
    # logistic target
    data: str | None = None
    label_map: str = "auto"
    n_features: int | None = None
    train_fraction: float = 0.8
    split_seed: int = 0
    ridge: float = 1.0
    standardize: bool = True
    # per-method overrides, e.g. {"svrg": {"epoch": 500}}
    method_overrides: dict = field(default_factory=dict)

    def sampler_config(self, method):
        override = self.method_overrides.get(method, {})
        return SamplerConfig(
            n_steps=int(override.get("steps", self.steps)),
            step=float(override.get("step", self.step)),
            estimator=method,
            batch_size=int(override.get("batch", self.batch)),
            epoch_length=_maybe_int(override.get("epoch", self.epoch)),
            gamma=self.gamma,
            xi=self.xi,
            burn_in=int(override.get("burn_in", self.burn_in)),
            record_stride=self.stride,
            n_chains=self.chains,
            seed=self.seed,
            diagnostics=self.diagnostics,
            record_q=self.record_q,
        )

    def echo(self):
        """Flat dict of resolved settings for the JSON summary."""
        out = {}
        for entry in fields(self):
            value = getattr(self, entry.name)
            if isinstance(value, tuple):
                value = list(value)
            out[entry.name] = value
        return out


def _maybe_int(value):
    return None if value is None else int(value)


_BOOL_WORDS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _parse_value(name, text):
    text = text.strip()
    if name in ("methods",):
        return tuple(part.strip().lower() for part in text.split(",") if part.strip())
    if name in ("diagnostics", "record_q", "paper_scale", "standardize"):
        try:
            return _BOOL_WORDS[text.lower()]
        except KeyError:
            raise ValueError(f"cannot read boolean {name} = {text!r}") from None
    if name in ("epoch", "n_features", "xi"):
        if text.lower() in ("", "none", "default"):
            return None
    int_keys = {
        "seed", "batch", "epoch", "steps", "burn_in", "stride", "chains",
        "n_components", "dimension", "data_seed", "split_seed", "n_features",
    }
    float_keys = {
        "step", "gamma", "xi", "max_eigenvalue", "min_eigenvalue",
        "train_fraction", "ridge",
    }
    if name in int_keys:
        return int(text)
    if name in float_keys:
        return float(text)
    return text


def load_config(path=None, overrides=None):
    """Build an ExperimentConfig from a flat key = value file plus overrides.

    overrides is a {key: value} dict of already-parsed values that wins
    over the file (this is how command-line flags are applied). Unknown
    keys and malformed lines are errors.
    """
    known = {entry.name for entry in fields(ExperimentConfig)}
    settings = {}
    method_overrides = {}
    if path is not None:
        for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if "." in key:
                method, sub = key.split(".", 1)
                method = method.lower()
                if method not in ESTIMATOR_KINDS:
                    raise ValueError(f"{path}:{lineno}: unknown method prefix {method!r}")
                if sub not in ("batch", "epoch", "step", "steps", "burn_in"):
                    raise ValueError(f"{path}:{lineno}: unsupported override {key!r}")
                method_overrides.setdefault(method, {})[sub] = _parse_value(sub, text)
            elif key in known:
                settings[key] = _parse_value(key, text)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    if overrides:
        settings.update({k: v for k, v in overrides.items() if v is not None})
    settings["method_overrides"] = method_overrides
    config = ExperimentConfig(**settings)
    if config.paper_scale:
        for key, value in _PAPER_SCALE.items():
            if key not in settings:
                setattr(config, key, value)
    bad = [m for m in config.methods if m not in ESTIMATOR_KINDS]
    if bad:
        raise ValueError(f"unknown methods {bad}; choose from {ESTIMATOR_KINDS}")
    return config


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _advisory_bound(model, descriptor):
    """Sufficient step size from the convergence theory, h <= bound.

    The theory wants L h <= min(1, 1/sqrt(theta)) / (10 kappa). Returns
    None for estimators without a finite theta.
    """
    if not descriptor.bounded:
        return None
    theta = descriptor.theta
    cap = 1.0 if theta == 0.0 else min(1.0, 1.0 / math.sqrt(theta))
    return cap / (10.0 * model.condition_number * model.smoothness)


def _method_summary(config, model, method, ensemble):
    sampler_config = config.sampler_config(method)
    descriptor = mseb_descriptor(
        method,
        model.n_components,
        batch_size=sampler_config.batch_size,
        epoch_length=sampler_config.epoch_length,
    )
    bound = _advisory_bound(model, descriptor)
    summary = {
        "estimator": method,
        "batch_size": sampler_config.batch_size,
        "epoch_length": sampler_config.epoch_length,
        "step": sampler_config.step,
        "xi": sampler_config.resolve_xi(model),
        "gamma": sampler_config.gamma,
        "n_steps": sampler_config.n_steps,
        "burn_in": sampler_config.burn_in,
        "theta": None if math.isinf(descriptor.theta) else descriptor.theta,
        "advisory_step_bound": bound,
        "step_over_bound": None if bound is None else sampler_config.step / bound,
        "total_queries": [r.total_queries for r in ensemble.records],
        "mean_potential": [r.mean_potential for r in ensemble.records],
    }
    if config.diagnostics:
        summary["gradient_mse"] = float(
            np.mean([metrics.gradient_mse(r) for r in ensemble.records])
        )
    if ensemble.pooled is not None:
        summary["pooled_mean"] = ensemble.pooled.mean
        if model.dimension <= 10:
            summary["pooled_cov"] = ensemble.pooled.cov
    return summary


def _write(out_dir, name, text):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text)
    return path


def _aggregate_csv(header, columns):
    lines = [header]
    n_rows = len(columns[0])
    for r in range(n_rows):
        cells = []
        for column in columns:
            value = column[r]
            if isinstance(value, (int, np.integer)):
                cells.append(str(int(value)))
            else:
                cells.append(repr(float(value)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _comparison_table(rows):
    widths = [
        max(len(str(row[i])) for row in rows) for i in range(len(rows[0]))
    ]
    lines = []
    for row in rows:
        lines.append(
            "  ".join(str(cell).ljust(width) for cell, width in zip(row, widths))
        )
    return "\n".join(lines) + "\n"


def run_synthetic(config):
    """Compare the configured estimators on the quadratic target.

    Writes one CSV of across-chain mean series per method, a comparison
    table, and summary.json into config.out; returns the summary dict.
    """
    model = QuadraticPotential.random(
        n_components=config.n_components,
        dimension=config.dimension,
        max_eigenvalue=config.max_eigenvalue,
        min_eigenvalue=config.min_eigenvalue,
        seed=config.data_seed,
    )
    target_mean, target_cov = model.target_moments()
    reference = model.mean_potential()
    summary = {
        "config": config.echo(),
        "target": {
            "mean_potential": reference,
            "mean": target_mean,
            "smoothness": model.smoothness,
            "strong_convexity": model.strong_convexity,
        },
        "methods": {},
    }
    table = [["method", "potential_mse", "gradient_mse", "final_w2", "mean_queries_per_step"]]
    for method in config.methods:
        ensemble = run_ensemble(config.sampler_config(method), model)
        w2 = wasserstein_tracker(ensemble.records, target_mean, target_cov)
        entry = _method_summary(config, model, method, ensemble)
        entry["potential_mse"] = metrics.potential_mse(ensemble.records, reference)
        finite_w2 = w2[np.isfinite(w2)]
        entry["final_w2"] = float(finite_w2[-1]) if finite_w2.size else None
        summary["methods"][method] = entry
        columns = [
            ensemble.iterations,
            ensemble.mean_queries,
            ensemble.mean_potentials,
            ensemble.mean_grad_err_sq if ensemble.mean_grad_err_sq is not None
            else np.full(len(w2), np.nan),
            ensemble.mean_q_values if ensemble.mean_q_values is not None
            else np.full(len(w2), np.nan),
            w2,
        ]
        _write(
            config.out,
            f"{method}.csv",
            _aggregate_csv("iter,queries,potential,grad_err_sq,q_k,w2", columns),
        )
        gradient_cell = (
            f"{entry['gradient_mse']:.6g}" if "gradient_mse" in entry else "off"
        )
        queries = np.mean(entry["total_queries"]) / max(config.steps, 1)
        table.append(
            [
                method,
                f"{entry['potential_mse']:.6g}",
                gradient_cell,
                f"{entry['final_w2']:.6g}" if entry["final_w2"] is not None else "n/a",
                f"{queries:.3g}",
            ]
        )
    _write(config.out, "comparison.txt", _comparison_table(table))
    _write(
        config.out,
        "summary.json",
        json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n",
    )
    return summary


def _load_logistic_data(config):
    if config.data is None:
        raise ValueError("logistic experiments need 'data = <libsvm file>'")
    dataset = dataio.parse_libsvm(
        config.data, label_map=config.label_map, n_features=config.n_features
    )
    train, test = dataio.train_test_split(
        dataset, config.train_fraction, config.split_seed
    )
    if config.standardize:
        train, test, _ = dataio.standardize(train, test)
    return train, test


def run_logistic(config):
    """Compare the configured estimators on penalized logistic regression.

    Writes per-method CSVs (method,iter,queries,potential,nll,grad_err_sq)
    and summary.json into config.out; returns the summary dict.
    """
    train, test = _load_logistic_data(config)
    model = LogisticPotential.from_dataset(train, ridge=config.ridge)
    test_features = test.to_dense()
    test_labels = test.labels
    summary = {
        "config": config.echo(),
        "dataset": {
            "n_train": train.n_rows,
            "n_test": test.n_rows,
            "n_features": train.n_features,
            "smoothness": model.smoothness,
            "strong_convexity": model.strong_convexity,
        },
        "methods": {},
    }
    for method in config.methods:
        ensemble = run_ensemble(config.sampler_config(method), model)
        entry = _method_summary(config, model, method, ensemble)
        # held-out NLL along the trace, averaged across chains
        nll_rows = np.mean(
            [
                _trace_nll(record.positions, test_features, test_labels)
                for record in ensemble.records
            ],
            axis=0,
        )
        tail = ensemble.iterations >= config.burn_in
        if tail.any():
            pooled_tail = np.concatenate(
                [r.positions[tail] for r in ensemble.records]
            )
            entry["final_test_nll"] = metrics.test_nll(
                test_features, test_labels, pooled_tail
            )
        summary["methods"][method] = entry
        grad_column = (
            ensemble.mean_grad_err_sq
            if ensemble.mean_grad_err_sq is not None
            else np.full(len(nll_rows), np.nan)
        )
        lines = ["method,iter,queries,potential,nll,grad_err_sq"]
        for r in range(len(ensemble.iterations)):
            lines.append(
                f"{method},{ensemble.iterations[r]},{float(ensemble.mean_queries[r])!r},"
                f"{float(ensemble.mean_potentials[r])!r},{float(nll_rows[r])!r},"
                f"{float(grad_column[r])!r}"
            )
        _write(config.out, f"{method}.csv", "\n".join(lines) + "\n")
    _write(
        config.out,
        "summary.json",
        json.dumps(_jsonable(summary), indent=2, sort_keys=True) + "\n",
    )
    return summary


def _trace_nll(positions, features, labels):
    from .potentials import softplus

    margins = labels[None, :] * (positions @ features.T)
    return softplus(-margins).mean(axis=1)


def print_advisory(config, stream=None):
    """Report the theoretical step-size bound per configured method."""
    stream = stream or sys.stdout
    if config.experiment == "logistic":
        train, _ = _load_logistic_data(config)
        model = LogisticPotential.from_dataset(train, ridge=config.ridge)
    else:
        model = QuadraticPotential.random(
            n_components=config.n_components,
            dimension=config.dimension,
            max_eigenvalue=config.max_eigenvalue,
            min_eigenvalue=config.min_eigenvalue,
            seed=config.data_seed,
        )
    rows = [["method", "theta", "step_bound", "configured_step", "step_over_bound"]]
    for method in config.methods:
        sampler_config = config.sampler_config(method)
        descriptor = mseb_descriptor(
            method,
            model.n_components,
            batch_size=sampler_config.batch_size,
            epoch_length=sampler_config.epoch_length,
        )
        bound = _advisory_bound(model, descriptor)
        if bound is None:
            rows.append([method, "inf", "n/a (unbounded variance)", f"{sampler_config.step:.6g}", "n/a"])
        else:
            rows.append(
                [
                    method,
                    f"{descriptor.theta:.6g}",
                    f"{bound:.6g}",
                    f"{sampler_config.step:.6g}",
                    f"{sampler_config.step / bound:.3g}",
                ]
            )
    text = (
        f"smoothness L = {model.smoothness:.6g}, "
        f"condition number = {model.condition_number:.6g}\n"
        + _comparison_table(rows)
    )
    stream.write(text)
    return text


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="vrhmc",
        description="Hamiltonian Monte Carlo with variance-reduced gradient estimators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, blurb in (
        ("synthetic", "estimator comparison on the analytic quadratic target"),
        ("logistic", "estimator comparison on logistic regression data"),
        ("advisory", "print theoretical step-size bounds"),
    ):
        cmd = sub.add_parser(name, help=blurb)
        cmd.add_argument("--config", help="flat key = value config file")
        cmd.add_argument("--seed", type=int, help="master seed override")
        cmd.add_argument("--out", help="output directory")
        cmd.add_argument(
            "--paper-scale",
            action="store_true",
            help="switch iteration counts to full-scale magnitudes",
        )
        cmd.add_argument(
            "--diagnostics",
            action="store_true",
            help="record per-step squared gradient error",
        )
        cmd.add_argument("--estimator", help="run only this estimator")
        cmd.add_argument("--batch", type=int, help="batch size override")
        cmd.add_argument("--epoch", type=int, help="epoch length override")
        cmd.add_argument("--step", type=float, help="step size override")
    args = parser.parse_args(argv)

    overrides = {
        "experiment": args.command if args.command != "advisory" else None,
        "seed": args.seed,
        "out": args.out,
        "batch": args.batch,
        "epoch": args.epoch,
        "step": args.step,
    }
    if args.paper_scale:
        overrides["paper_scale"] = True
    if args.diagnostics:
        overrides["diagnostics"] = True
    if args.estimator:
        overrides["methods"] = (args.estimator.lower(),)
    config = load_config(args.config, overrides)

    if args.command == "advisory":
        print_advisory(config)
        return 0
    if args.command == "synthetic":
        run_synthetic(config)
    else:
        run_logistic(config)
    print(f"results written to {Path(config.out).resolve()}", file=sys.stderr)
    return 0
