"""Target-domain inference with least-favorable pairs, plus a plain k-NN baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import EmptyDataset, LfdSolution, SupportTooSmall, as_points
from .lfd import log_ratio

DIST_GUARD = 1e-9


@dataclass(frozen=True)
class LabeledDataset:
    points: np.ndarray
    labels: np.ndarray
    domains: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = as_points(self.points)
        labels = np.asarray(self.labels).astype(int).reshape(-1)
        if len(labels) != len(pts):
            raise ValueError(f"{len(pts)} points but {len(labels)} labels")
        if not np.isin(labels, (1, 2)).all():
            raise ValueError("labels must be 1 or 2")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "labels", labels)
        if self.domains is not None:
            domains = np.asarray(self.domains).reshape(-1)
            if len(domains) != len(pts):
                raise ValueError("one domain id per point is required")
            object.__setattr__(self, "domains", domains)

    def __len__(self) -> int:
        return len(self.labels)

    def of_class(self, label: int) -> np.ndarray:
        return self.points[self.labels == label]


def nearest(train: np.ndarray, queries: np.ndarray, k: int):
    """Indices and distances of the k nearest rows of ``train`` per query.

    Equal distances are resolved toward the lower index.
    """
    d2 = ((queries[:, None, :] - train[None, :, :]) ** 2).sum(axis=-1)
    idx = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return idx, np.sqrt(np.take_along_axis(d2, idx, axis=1))


class LfdClassifier:
    """Weighted k-NN vote over the log-ratio of a least-favorable pair.

    A query gets label 1 when ``sum_i w_i log(p1(x_i) / p2(x_i)) >= 0`` over
    its k nearest support points, with ``w_i = 1 / max(dist_i, 1e-9)``.
    """

    def __init__(self, solution: LfdSolution, k: int = 3):
        if len(solution.support) < k:
            raise SupportTooSmall(f"support has {len(solution.support)} points, k = {k}")
        self.support = solution.support
        self.scores = log_ratio(solution.p1, solution.p2)
        self.k = k

    def decision(self, X) -> np.ndarray:
        X = as_points(X, self.support.shape[1])
        idx, dist = nearest(self.support, X, self.k)
        w = 1.0 / np.maximum(dist, DIST_GUARD)
        return (w * self.scores[idx]).sum(axis=1) / self.k

    def __call__(self, X) -> np.ndarray:
        return np.where(self.decision(X) >= 0, 1, 2)


class KnnBaseline:
    """Unweighted majority vote; an even split goes to class 1."""

    def __init__(self, train: LabeledDataset, k: int = 3):
        if len(train) < k:
            raise SupportTooSmall(f"training set has {len(train)} points, k = {k}")
        self.train = train
        self.k = k

    def __call__(self, X) -> np.ndarray:
        X = as_points(X, self.train.points.shape[1])
        idx, _ = nearest(self.train.points, X, self.k)
        votes1 = (self.train.labels[idx] == 1).sum(axis=1)
        return np.where(2 * votes1 >= self.k, 1, 2)


def knn_detect(x_t, solution: LfdSolution, k: int = 3) -> int:
    return int(LfdClassifier(solution, k)(np.atleast_2d(x_t))[0])


def knn_baseline(x_t, train: LabeledDataset, k: int = 3) -> int:
    return int(KnnBaseline(train, k)(np.atleast_2d(x_t))[0])


@dataclass(frozen=True)
class Evaluation:
    accuracy: float
    per_class: tuple
    confusion: np.ndarray  # rows: true label 1, 2; columns: predicted 1, 2


def evaluate(classifier: Callable, test: LabeledDataset) -> Evaluation:
    """Accuracy, per-class recall and confusion counts.

    ``classifier`` maps an (N, d) array of points to N labels.
    """
    if len(test) == 0:
        raise EmptyDataset("test set is empty")
    pred = np.asarray(classifier(test.points)).astype(int).reshape(-1)
    confusion = np.zeros((2, 2), dtype=int)
    np.add.at(confusion, (test.labels - 1, pred - 1), 1)
    counts = confusion.sum(axis=1)
    per_class = tuple(float(confusion[i, i] / counts[i]) if counts[i] else float("nan") for i in range(2))
    return Evaluation(float(np.trace(confusion) / len(test)), per_class, confusion)
