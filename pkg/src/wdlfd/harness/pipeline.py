"""End-to-end experiment: barycenters, radius learning, LFDs, target accuracy."""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..classify import KnnBaseline, LabeledDataset, LfdClassifier, evaluate
from ..core import LfdSolution, RadiusTrace
from ..lfd import solve_lfd_penalized, solve_lfd_separated
from ..radius import initialize_model, learn_radii
from .config import ExperimentConfig
from .data import DataIOError, SyntheticData, class_conditionals, generate_synthetic, load_csv, trial_seed

log = logging.getLogger(__name__)

METHODS = ("ours", "ours_truncated", "baseline_mixed")


@dataclass(frozen=True)
class PipelineResult:
    source_size: int
    trial: int
    our_accuracy: float
    our_truncated_accuracy: float
    baseline_mixed_accuracy: float
    radius_trace: RadiusTrace
    solution: LfdSolution

    def accuracy(self, method: str) -> float:
        return {
            "ours": self.our_accuracy,
            "ours_truncated": self.our_truncated_accuracy,
            "baseline_mixed": self.baseline_mixed_accuracy,
        }[method]


def _split_domains(data: LabeledDataset) -> list:
    if data.domains is None:
        return [data]
    out = []
    for dom in dict.fromkeys(data.domains.tolist()):
        mask = data.domains == dom
        out.append(LabeledDataset(data.points[mask], data.labels[mask], data.domains[mask]))
    return out


def _subsample(rng, data: LabeledDataset, size: int) -> LabeledDataset:
    if size >= len(data):
        return data
    idx = np.sort(rng.choice(len(data), size, replace=False))
    doms = None if data.domains is None else data.domains[idx]
    return LabeledDataset(data.points[idx], data.labels[idx], doms)


def file_data(config: ExperimentConfig, seed, source_size: int) -> SyntheticData:
    """Source domains and target test set read from CSV files.

    Each source file is one domain, or several when it carries a ``domain``
    column. Every domain is subsampled to ``source_size`` rows per trial.
    """
    rng = np.random.default_rng(seed)
    sources = []
    for path in config.source_files:
        for dom in _split_domains(load_csv(path)):
            sources.append(_subsample(rng, dom, source_size))
    target = load_csv(config.target_file)
    return SyntheticData(sources, target, target)


def make_data(config: ExperimentConfig, seed, source_size: int) -> SyntheticData:
    if config.mode == "files":
        return file_data(config, seed, source_size)
    return generate_synthetic(config, seed, source_size)


def fit_models(config: ExperimentConfig, sources):
    models = []
    for label in (1, 2):
        conds = [class_conditionals(s, label) for s in sources if np.any(s.labels == label)]
        if not conds:
            raise DataIOError(f"no source domain has samples of class {label}")
        models.append(initialize_model(conds, label, exponent=config.radius_exponent))
    return models


def learn(config: ExperimentConfig, sources):
    """Fit both class models and learn the radii; returns (trace, m1, m2)."""
    m1, m2 = fit_models(config, sources)
    n_eff = config.effective_n or sum(len(s) for s in sources)
    trace = learn_radii(
        m1.center, m2.center, m1.radius, m2.radius, config.delta,
        significance=config.significance, effective_n=n_eff, exponent=config.exponent,
    )
    return trace, m1, m2


def run_pipeline(config: ExperimentConfig, seed, source_size: int, trial: int = 0) -> PipelineResult:
    """One trial: fit on the sources, score the target test set three ways.

    With ``gamma_sep`` or ``lambda_pen`` set, the pair used by "ours" is
    re-solved with that variant at the learned radii.
    """
    data = make_data(config, seed, source_size)
    trace, m1, m2 = learn(config, data.sources)
    final = trace.final
    last = trace.iterations[-1]
    if config.gamma_sep is not None:
        final = solve_lfd_separated(m1.center, m2.center, last.theta1, last.theta2,
                                    config.gamma_sep, config.exponent)
    elif config.lambda_pen is not None:
        final = solve_lfd_penalized(m1.center, m2.center, last.theta1, last.theta2,
                                    config.lambda_pen, config.exponent)

    test = data.target_test
    ours = evaluate(LfdClassifier(final, config.k), test).accuracy
    truncated = evaluate(LfdClassifier(trace.initial, config.k), test).accuracy
    pooled = LabeledDataset(np.vstack([s.points for s in data.sources]),
                            np.concatenate([s.labels for s in data.sources]))
    baseline = evaluate(KnnBaseline(pooled, config.k), test).accuracy
    log.debug("size=%d trial=%d ours=%.3f truncated=%.3f baseline=%.3f iters=%d",
              source_size, trial, ours, truncated, baseline, len(trace.iterations))
    return PipelineResult(source_size, trial, ours, truncated, baseline, trace, final)


def _cell(args):
    config, size, trial = args
    return run_pipeline(config, trial_seed(config.seed, size, trial), size, trial)


def run_sweep(config: ExperimentConfig) -> list:
    """Every (source_size, trial) cell, ordered by size then trial."""
    cells = [(config, int(size), t) for size in config.source_sizes for t in range(config.trials)]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    return sorted(results, key=lambda r: (r.source_size, r.trial))


def summarize(results) -> dict:
    """Per source size and method: mean, sample standard deviation and count."""
    out = {}
    for size in sorted({r.source_size for r in results}):
        rows = [r for r in results if r.source_size == size]
        entry = {}
        for method in METHODS:
            acc = [r.accuracy(method) for r in rows]
            mean = math.fsum(acc) / len(acc)
            var = math.fsum((a - mean) ** 2 for a in acc) / (len(acc) - 1) if len(acc) > 1 else 0.0
            entry[method] = {"mean": mean, "std": math.sqrt(var), "n": len(acc)}
        out[str(size)] = entry
    return out


def emit_results(results, csv_path=None, summary_path=None) -> dict:
    """Write the per-trial CSV and the JSON summary; returns the summary.

    Output depends only on ``results``, so identical runs give identical bytes.
    """
    summary = summarize(results)
    try:
        if csv_path is not None:
            with open(csv_path, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["source_size", "trial", "method", "accuracy"])
                for r in results:
                    for method in METHODS:
                        writer.writerow([r.source_size, r.trial, method, repr(float(r.accuracy(method)))])
        if summary_path is not None:
            with open(summary_path, "w") as fh:
                json.dump(summary, fh, indent=2)
                fh.write("\n")
    except OSError as exc:
        raise DataIOError(f"cannot write results: {exc}") from exc
    return summary
