"""Domain types, errors and small numeric helpers shared by every module."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-8
ROUNDOFF_TOL = 1e-13
MARGINAL_TOL = 1e-7


# ---------------------------------------------------------------------------
# errors


class WdlfdError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(WdlfdError, ValueError):
    pass


class LengthMismatch(WdlfdError, ValueError):
    pass


class NegativeWeight(WdlfdError, ValueError):
    pass


class WeightSumOutOfTolerance(WdlfdError, ValueError):
    pass


class InvalidRadius(WdlfdError, ValueError):
    pass


class LipschitzViolation(WdlfdError, ValueError):
    pass


class SupportTooSmall(WdlfdError, ValueError):
    pass


class EmptyDataset(WdlfdError, ValueError):
    pass


class BadCovariance(WdlfdError, ValueError):
    pass


class SolverFailure(WdlfdError, RuntimeError):
    """A numerical backend failed; ``status`` carries the backend's own text."""

    def __init__(self, message: str, status: str = ""):
        super().__init__(f"{message} (solver status: {status})" if status else message)
        self.status = status


class Infeasible(WdlfdError):
    """No point satisfies all constraints of an optimization problem."""


# ---------------------------------------------------------------------------
# array helpers


def as_points(points, d: Optional[int] = None) -> np.ndarray:
    """Coerce ``points`` to a float64 array of shape (n, d).

    A flat sequence of scalars is read as n one-dimensional points.
    """
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    elif arr.ndim != 2:
        raise DimensionMismatch(f"points must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[0] and arr.shape[1] < 1:
        raise DimensionMismatch("points must have dimension >= 1")
    if d is not None and arr.shape[1] != d:
        raise DimensionMismatch(f"expected dimension {d}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.float64, copy=True)
    arr.setflags(write=False)
    return arr


def clean_weights(w, tol: float = 1e-9) -> np.ndarray:
    """Clip solver round-off (tiny negatives) and renormalize to unit mass."""
    w = np.asarray(w, dtype=np.float64).copy()
    if np.any(w < -tol):
        raise NegativeWeight(f"weight {w.min():.3e} is below -{tol:g}")
    w[w < 0] = 0.0
    total = w.sum()
    if total <= 0:
        raise WeightSumOutOfTolerance("weights sum to zero")
    return w / total


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class DiscreteDistribution:
    """Weighted point cloud with pairwise distinct support points.

    Build instances through :func:`validate_distribution` (or
    :meth:`empirical`); the raw constructor does not check invariants.
    """

    support: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return self.support.shape[0]

    @property
    def dim(self) -> int:
        return self.support.shape[1]

    @classmethod
    def empirical(cls, points) -> "DiscreteDistribution":
        pts = as_points(points)
        return validate_distribution(pts, np.full(len(pts), 1.0 / len(pts)))

    def trimmed(self, tol: float = 1e-12) -> "DiscreteDistribution":
        """Drop atoms whose mass is at most ``tol`` and renormalize."""
        keep = self.weights > tol
        return validate_distribution(self.support[keep], clean_weights(self.weights[keep]))

    def to_dict(self) -> dict:
        return {"support": self.support.tolist(), "weights": self.weights.tolist()}


def validate_distribution(support, weights) -> DiscreteDistribution:
    """Check, merge duplicates and normalize a weighted point set.

    Duplicate points (exact coordinate equality) are merged with their
    weights summed; first-occurrence order is preserved. Weights must sum
    to 1 within 1e-8 and are then divided by their sum (skipped when the
    sum is already 1 up to round-off, which makes the call idempotent).
    """
    pts = as_points(support)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(w) != len(pts):
        raise DimensionMismatch(f"{len(pts)} support points but {len(w)} weights")
    if len(w) == 0:
        raise WeightSumOutOfTolerance("empty distribution")
    if not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite")
    if np.any(w < 0):
        raise NegativeWeight(f"negative weight {w.min():.6g}")
    total = w.sum()
    if abs(total - 1.0) > WEIGHT_SUM_TOL:
        raise WeightSumOutOfTolerance(f"weights sum to {total:.12g}, not 1")

    _, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    if len(first) < len(pts):
        order = np.argsort(first)
        rank = np.empty_like(order)
        rank[order] = np.arange(len(order))
        merged = np.zeros(len(first))
        np.add.at(merged, rank[inverse], w)
        pts, w = pts[first[order]], merged
    total = w.sum()
    # leave sums that are 1 up to round-off alone, so a second pass is a no-op
    if abs(total - 1.0) > ROUNDOFF_TOL:
        w = w / total
    return DiscreteDistribution(_frozen(pts), _frozen(w))


@dataclass(frozen=True)
class PooledSupport:
    """Union support plus each input re-expressed on it.

    ``index[k][i]`` is the pooled position of atom ``i`` of input ``k``.
    """

    support: np.ndarray
    weights: list
    index: list


def pooled_support(dists: Sequence[DiscreteDistribution]) -> PooledSupport:
    if not dists:
        raise ValueError("need at least one distribution")
    d = dists[0].dim
    for q in dists:
        if q.dim != d:
            raise DimensionMismatch(f"dimensions {d} and {q.dim} differ")
    stacked = np.vstack([q.support for q in dists])
    _, first, inverse = np.unique(stacked, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    support = stacked[first[order]]
    pos = rank[inverse]

    weights, index, start = [], [], 0
    for q in dists:
        idx = pos[start:start + len(q)]
        start += len(q)
        w = np.zeros(len(support))
        w[idx] = q.weights
        weights.append(w)
        index.append(idx)
    return PooledSupport(_frozen(support), weights, index)


# ---------------------------------------------------------------------------
# transport objects


@dataclass(frozen=True)
class CostMatrix:
    entries: np.ndarray
    exponent: int = 1

    @property
    def shape(self):
        return self.entries.shape


@dataclass(frozen=True)
class Coupling:
    plan: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    @classmethod
    def from_plan(cls, plan) -> "Coupling":
        plan = np.asarray(plan, dtype=np.float64)
        return cls(_frozen(plan), _frozen(plan.sum(axis=1)), _frozen(plan.sum(axis=0)))

    def check(self, row, col, tol: float = MARGINAL_TOL) -> bool:
        return (
            bool(np.all(self.plan >= -tol))
            and np.allclose(self.plan.sum(axis=1), row, atol=tol, rtol=0)
            and np.allclose(self.plan.sum(axis=0), col, atol=tol, rtol=0)
        )


# ---------------------------------------------------------------------------
# solutions


OPTIMAL = "Optimal"
ITERATION_LIMIT = "IterationLimit"
DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class LfdSolution:
    """A least-favorable pair on a shared support, with diagnostics."""

    support: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    theta1: float
    theta2: float
    objective: float
    exponent: int = 1
    gamma_sep: Optional[float] = None
    lambda_pen: Optional[float] = None
    couplings: Optional[tuple] = None
    exact_separation: Optional[float] = None
    separation_satisfied: Optional[bool] = None
    status: str = OPTIMAL
    history: tuple = ()

    @property
    def dist1(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.support, self.p1)

    @property
    def dist2(self) -> DiscreteDistribution:
        return DiscreteDistribution(self.support, self.p2)

    def with_status(self, status: str) -> "LfdSolution":
        return replace(self, status=status)

    def to_dict(self, include_couplings: bool = True) -> dict:
        out = {
            "support": self.support.tolist(),
            "p1": self.p1.tolist(),
            "p2": self.p2.tolist(),
            "theta1": self.theta1,
            "theta2": self.theta2,
            "exponent": self.exponent,
            "gamma_sep": self.gamma_sep,
            "lambda_pen": self.lambda_pen,
            "objective": self.objective,
            "exact_separation": self.exact_separation,
            "separation_satisfied": self.separation_satisfied,
            "status": self.status,
        }
        if self.history:
            out["history"] = list(self.history)
        if include_couplings and self.couplings is not None:
            out["couplings"] = [None if c is None else np.asarray(c).tolist() for c in self.couplings]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LfdSolution":
        couplings = data.get("couplings")
        if couplings is not None:
            couplings = tuple(None if c is None else _frozen(c) for c in couplings)
        return cls(
            support=_frozen(as_points(data["support"])),
            p1=_frozen(data["p1"]),
            p2=_frozen(data["p2"]),
            theta1=float(data["theta1"]),
            theta2=float(data["theta2"]),
            objective=float(data["objective"]),
            exponent=int(data.get("exponent", 1)),
            gamma_sep=data.get("gamma_sep"),
            lambda_pen=data.get("lambda_pen"),
            couplings=couplings,
            exact_separation=data.get("exact_separation"),
            separation_satisfied=data.get("separation_satisfied"),
            status=data.get("status", OPTIMAL),
            history=tuple(data.get("history", ())),
        )


@dataclass(frozen=True)
class RadiusStep:
    theta1: float
    theta2: float
    objective: float
    p_value: float
    accepted: bool


@dataclass(frozen=True)
class RadiusTrace:
    iterations: list
    final: LfdSolution
    delta: float
    significance: float = 0.05
    initial: Optional[LfdSolution] = field(default=None, repr=False)

    @property
    def accepted(self) -> bool:
        return bool(self.iterations) and self.iterations[-1].accepted

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "significance": self.significance,
            "accepted": self.accepted,
            "iterations": [vars(step).copy() for step in self.iterations],
            "final": self.final.to_dict(include_couplings=False),
        }

