"""Uncertainty-set construction and radius learning.

Each class gets a reference distribution (the fixed-support W_2 barycenter
of its per-domain conditionals) and an initial radius (the largest W_2
distance from that barycenter to a source). Both radii are then shrunk by a
constant step until the least-favorable pair passes a chi-squared
two-sample test at the chosen significance level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.stats import chi2

from .core import (
    DEGENERATE,
    ITERATION_LIMIT,
    DiscreteDistribution,
    LengthMismatch,
    RadiusStep,
    RadiusTrace,
)
from .lfd import solve_lfd
from .transport import barycenter, wasserstein


@dataclass(frozen=True)
class ClassUncertaintyModel:
    class_label: int
    center: DiscreteDistribution
    radius: float
    source_distances: tuple


def initialize_model(sources: Sequence[DiscreteDistribution], class_label: int,
                     exponent: int = 2, support=None) -> ClassUncertaintyModel:
    """Barycenter of ``sources`` and the distance to the farthest source.

    The barycenter lives on ``support`` (default: union of the source
    supports); zero-mass atoms are dropped from ``center``. ``exponent``
    selects the order of the distances used for the radius.
    """
    if len(sources) == 0:
        raise ValueError("need at least one source distribution")
    center = barycenter(sources, support=support).trimmed()
    dists = tuple(wasserstein(center, s, exponent) for s in sources)
    return ClassUncertaintyModel(class_label, center, max(dists), dists)


def chi2_pvalue(p1, p2, effective_n: float) -> float:
    """Two-sample Pearson chi-squared p-value for two weight vectors.

    The statistic is ``effective_n * sum (p1 - p2)**2 / (p1 + p2)`` over the
    atoms carrying mass in either vector; degrees of freedom are that atom
    count minus one (at least one).
    """
    p1, p2 = np.asarray(p1, dtype=np.float64), np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise LengthMismatch(f"weight vectors of length {p1.size} and {p2.size}")
    if effective_n <= 0:
        raise ValueError("effective_n must be positive")
    total = p1 + p2
    used = total > 0
    stat = effective_n * float(((p1[used] - p2[used]) ** 2 / total[used]).sum())
    dof = max(int(used.sum()) - 1, 1)
    return float(chi2.sf(stat, dof))


def _step(theta0: float, i: int, delta: float, floor: float) -> float:
    value = theta0 - i * delta
    # absorb accumulated round-off so the floor is hit on schedule
    if value <= floor + 1e-12 * max(1.0, theta0):
        return floor
    return value


def learn_radii(Q1: DiscreteDistribution, Q2: DiscreteDistribution,
                theta1: float, theta2: float, delta: float,
                significance: float = 0.05, effective_n: Optional[float] = None,
                theta_floor: float = 0.0, max_iter: Optional[int] = None,
                exponent: int = 1, delta2: Optional[float] = None) -> RadiusTrace:
    """Shrink both radii until the least-favorable pair is distinguishable.

    Every iteration solves the least-favorable problem at the current radii
    and tests the pair with :func:`chi2_pvalue`. A p-value below
    ``significance`` stops the loop (the step is marked accepted); otherwise
    both radii drop by ``delta`` (``delta2`` for the second class, if given),
    clamped at ``theta_floor``. Once both radii sit at the floor without
    acceptance the floor solution is returned with status ``Degenerate``.

    ``effective_n`` defaults to the total number of atoms of the two centers.
    """
    if delta <= 0 or (delta2 is not None and delta2 <= 0):
        raise ValueError("delta must be positive")
    if not 0 < significance < 1:
        raise ValueError("significance must lie in (0, 1)")
    d1, d2 = delta, delta if delta2 is None else delta2
    floor = float(theta_floor)
    t1, t2 = max(float(theta1), floor), max(float(theta2), floor)
    if effective_n is None:
        effective_n = len(Q1) + len(Q2)
    bound = max(math.ceil((t1 - floor) / d1), math.ceil((t2 - floor) / d2)) + 1
    limit = bound if max_iter is None else min(max_iter, bound)

    steps, first, sol = [], None, None
    for i in range(limit):
        th1, th2 = _step(t1, i, d1, floor), _step(t2, i, d2, floor)
        sol = solve_lfd(Q1, Q2, th1, th2, exponent)
        if first is None:
            first = sol
        pval = chi2_pvalue(sol.p1, sol.p2, effective_n)
        accepted = pval < significance
        steps.append(RadiusStep(th1, th2, sol.objective, pval, accepted))
        if accepted or (th1 == floor and th2 == floor):
            break
    last = steps[-1]
    if not last.accepted:
        at_floor = last.theta1 == floor and last.theta2 == floor
        sol = replace(sol, status=DEGENERATE if at_floor else ITERATION_LIMIT)
    return RadiusTrace(steps, sol, delta, significance, initial=first)


def learn_radii_from_models(m1: ClassUncertaintyModel, m2: ClassUncertaintyModel,
                            delta: float, **kwargs) -> RadiusTrace:
    """Run :func:`learn_radii` from two initialized class models."""
    return learn_radii(m1.center, m2.center, m1.radius, m2.radius, delta, **kwargs)

