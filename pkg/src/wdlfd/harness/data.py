"""Synthetic multi-domain data and CSV input/output."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..core import DiscreteDistribution, WdlfdError, validate_distribution
from ..classify import LabeledDataset
from .config import ExperimentConfig, GaussianSpec


class DataIOError(WdlfdError, OSError):
    pass


class ParseError(WdlfdError, ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LabelError(ParseError):
    pass


# ---------------------------------------------------------------------------
# seeds and sampling


def trial_seed(master_seed: int, source_size: int, trial: int) -> np.random.SeedSequence:
    """Seed for one (source_size, trial) cell.

    Derived as ``SeedSequence(master_seed, spawn_key=(source_size, trial))``,
    so a cell's data does not depend on which other cells are run or in what
    order.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(int(source_size), int(trial)))


def _draw(rng: np.random.Generator, g: GaussianSpec, n: int) -> np.ndarray:
    z = rng.standard_normal((n, len(g.mean)))
    return np.asarray(g.mean) + z @ g.chol.T


def _split(total: int):
    return (total + 1) // 2, total // 2


def _sample_domain(rng, dom, total, domain_id) -> LabeledDataset:
    n1, n2 = _split(total)
    pts = np.vstack([_draw(rng, dom.class1, n1), _draw(rng, dom.class2, n2)])
    labels = np.repeat([1, 2], [n1, n2])
    return LabeledDataset(pts, labels, np.full(n1 + n2, domain_id, dtype=object))


@dataclass(frozen=True)
class SyntheticData:
    sources: list
    target_train: LabeledDataset
    target_test: LabeledDataset


def generate_synthetic(config: ExperimentConfig, seed, source_size: int) -> SyntheticData:
    """Draw every source domain, a target training set and a target test set.

    ``source_size`` is the number of samples per source domain, split
    evenly between the classes (class 1 takes the odd one out).
    """
    rng = np.random.default_rng(seed)
    sources = [_sample_domain(rng, dom, source_size, f"s{m}") for m, dom in enumerate(config.sources)]
    train_size = config.target_train_size or source_size
    target_train = _sample_domain(rng, config.target, train_size, "target")
    target_test = _sample_domain(rng, config.target, config.target_test_size, "target")
    return SyntheticData(sources, target_train, target_test)


def class_conditionals(dataset: LabeledDataset, label: int) -> DiscreteDistribution:
    """Uniform empirical distribution of one class's points."""
    return DiscreteDistribution.empirical(dataset.of_class(label))


# ---------------------------------------------------------------------------
# csv


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataIOError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError("missing header row", 1)
    return rows[0], rows[1:]


def _features(header):
    feats = [h for h in header if h.startswith("f") and h[1:].isdigit()]
    expected = [f"f{i}" for i in range(len(feats))]
    if not feats or sorted(feats, key=lambda h: int(h[1:])) != expected:
        raise ParseError("feature columns must be named f0..f{d-1}", 1)
    return [header.index(f"f{i}") for i in range(len(feats))]


def _parse_float(text, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", line) from None
    if not np.isfinite(value):
        raise ParseError(f"non-finite value {text!r}", line)
    return value


def load_csv(path) -> LabeledDataset:
    """Read a labeled CSV: ``f0..f{d-1}``, ``label`` in {1, 2}, optional ``domain``."""
    header, rows = _read_rows(path)
    header = [h.strip() for h in header]
    cols = _features(header)
    if "label" not in header:
        raise ParseError("missing 'label' column", 1)
    label_col = header.index("label")
    domain_col = header.index("domain") if "domain" in header else None
    pts, labels, domains = [], [], []
    for line, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
        pts.append([_parse_float(row[c], line) for c in cols])
        raw = row[label_col].strip()
        try:
            label = int(float(raw))
        except ValueError:
            raise LabelError(f"label {raw!r} is not 1 or 2", line) from None
        if label not in (1, 2) or float(raw) != label:
            raise LabelError(f"label {raw!r} is not 1 or 2", line)
        labels.append(label)
        if domain_col is not None:
            domains.append(row[domain_col].strip())
    if not pts:
        raise ParseError("no data rows", 2)
    return LabeledDataset(np.array(pts), np.array(labels), np.array(domains, dtype=object) if domains else None)


def load_distribution(path) -> DiscreteDistribution:
    """Read feature rows as a distribution.

    Uses a ``weight`` column when present, otherwise uniform weights; any
    ``label`` or ``domain`` column is ignored.
    """
    header, rows = _read_rows(path)
    header = [h.strip() for h in header]
    cols = _features(header)
    wcol = header.index("weight") if "weight" in header else None
    pts, weights = [], []
    for line, row in enumerate(rows, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", line)
        pts.append([_parse_float(row[c], line) for c in cols])
        if wcol is not None:
            weights.append(_parse_float(row[wcol], line))
    if not pts:
        raise ParseError("no data rows", 2)
    if wcol is None:
        return DiscreteDistribution.empirical(pts)
    return validate_distribution(pts, weights)


def save_distribution(dist: DiscreteDistribution, path) -> None:
    header = [f"f{i}" for i in range(dist.dim)] + ["weight"]
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for x, w in zip(dist.support, dist.weights):
                writer.writerow([repr(float(v)) for v in x] + [repr(float(w))])
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc


def save_dataset(data: LabeledDataset, path) -> None:
    d = data.points.shape[1]
    header = [f"f{i}" for i in range(d)] + ["label"] + (["domain"] if data.domains is not None else [])
    try:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for i, (x, y) in enumerate(zip(data.points, data.labels)):
                row = [repr(float(v)) for v in x] + [int(y)]
                if data.domains is not None:
                    row.append(data.domains[i])
                writer.writerow(row)
    except OSError as exc:
        raise DataIOError(f"cannot write {path}: {exc}") from exc
