"""Discrete optimal transport on finite supports.

Exact problems are solved as linear programs with HiGHS (through
``scipy.optimize.linprog``); the entropic solver is a log-domain Sinkhorn
iteration followed by a rounding step onto the transport polytope.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sps
from scipy.optimize import linprog
from scipy.special import logsumexp

from .core import (
    CostMatrix,
    Coupling,
    DimensionMismatch,
    DiscreteDistribution,
    ITERATION_LIMIT,
    OPTIMAL,
    SolverFailure,
    as_points,
    clean_weights,
    pooled_support,
    validate_distribution,
)


@dataclass(frozen=True)
class OtResult:
    value: float
    coupling: Coupling
    dual_u: np.ndarray
    dual_v: np.ndarray
    status: str = OPTIMAL


def cost_matrix(X, Y, exponent: int = 1) -> CostMatrix:
    """Pairwise Euclidean distances raised to ``exponent`` (1 or 2)."""
    if exponent not in (1, 2):
        raise ValueError(f"exponent must be 1 or 2, got {exponent}")
    X, Y = as_points(X), as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise DimensionMismatch(f"dimensions {X.shape[1]} and {Y.shape[1]} differ")
    sq = ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=-1)
    entries = sq if exponent == 2 else np.sqrt(sq)
    return CostMatrix(entries, exponent)


def _entries(cost) -> np.ndarray:
    return np.asarray(cost.entries if isinstance(cost, CostMatrix) else cost, dtype=np.float64)


def _weights(x) -> np.ndarray:
    return np.asarray(x.weights if isinstance(x, DiscreteDistribution) else x, dtype=np.float64)


def transport_constraints(n: int, m: int) -> sps.csr_matrix:
    """Row-sum then column-sum operator acting on a row-major n*m plan."""
    rows = sps.kron(sps.eye(n), np.ones((1, m)))
    cols = sps.kron(np.ones((1, n)), sps.eye(m))
    return sps.vstack([rows, cols]).tocsr()


def c_transform_pair(C: np.ndarray, u: np.ndarray):
    """Tighten a potential pair so that u_l + v_m <= C_lm holds exactly."""
    v = (C - u[:, None]).min(axis=0)
    u = (C - v[None, :]).min(axis=1)
    return u, v


def _solve_transport_lp(a, b, C, sign: float):
    n, m = C.shape
    A = transport_constraints(n, m)
    rhs = np.concatenate([a, b])
    # the row and column masses must agree exactly or HiGHS reports infeasible
    rhs[n:] *= a.sum() / b.sum()
    res = linprog(sign * C.ravel(), A_eq=A, b_eq=rhs, bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverFailure("transport linear program failed", res.message)
    plan = np.maximum(res.x.reshape(n, m), 0.0)
    duals = sign * res.eqlin.marginals
    return plan, duals[:n], duals[n:]


def exact_ot(mu, nu, cost) -> OtResult:
    """Exact optimal transport between two weight vectors for a given cost.

    Returns the optimal cost, an optimal plan and Kantorovich potentials
    ``(u, v)`` with ``u_l + v_m <= C_lm`` and ``<u, mu> + <v, nu>`` equal to
    the optimal cost up to solver tolerance.
    """
    a, b, C = _weights(mu), _weights(nu), _entries(cost)
    if C.shape != (len(a), len(b)):
        raise DimensionMismatch(f"cost shape {C.shape} does not match ({len(a)}, {len(b)})")
    plan, u, v = _solve_transport_lp(a, b, C, 1.0)
    u, v = c_transform_pair(C, u)
    value = float((C * plan).sum())
    return OtResult(value, Coupling.from_plan(plan), u, v)


def wasserstein(mu: DiscreteDistribution, nu: DiscreteDistribution, exponent: int = 1) -> float:
    """Wasserstein distance of order ``exponent`` under the Euclidean metric."""
    C = cost_matrix(mu.support, nu.support, exponent)
    value = max(exact_ot(mu, nu, C).value, 0.0)
    return value if exponent == 1 else value ** (1.0 / exponent)


def max_cost_coupling(p1, p2, cost):
    """Coupling of ``p1`` and ``p2`` with the largest total cost."""
    a, b, C = _weights(p1), _weights(p2), _entries(cost)
    if C.shape != (len(a), len(b)):
        raise DimensionMismatch(f"cost shape {C.shape} does not match ({len(a)}, {len(b)})")
    plan, _, _ = _solve_transport_lp(a, b, C, -1.0)
    return float((C * plan).sum()), Coupling.from_plan(plan)


def round_to_polytope(plan: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Project an approximate plan onto the couplings of (a, b).

    Rows and columns are scaled down where they overshoot, then the
    remaining deficit is filled with a rank-one correction.
    """
    P = plan * np.minimum(1.0, a / np.maximum(plan.sum(axis=1), 1e-300))[:, None]
    P = P * np.minimum(1.0, b / np.maximum(P.sum(axis=0), 1e-300))[None, :]
    err_a = a - P.sum(axis=1)
    err_b = b - P.sum(axis=0)
    total = err_a.sum()
    if total > 0:
        P = P + np.outer(err_a, err_b) / total
    return P


def sinkhorn(mu, nu, cost, epsilon: float, max_iter: int = 10000, tol: float = 1e-8) -> OtResult:
    """Entropic optimal transport by log-domain Sinkhorn iterations.

    The returned plan is rounded onto the transport polytope, so its
    marginals match ``mu`` and ``nu`` up to floating point; ``value`` is the
    unregularized cost of the rounded plan. If ``max_iter`` is reached
    before the marginal error drops below ``tol`` the last iterate is
    returned with ``status == "IterationLimit"``.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    a, b, C = _weights(mu), _weights(nu), _entries(cost)
    if C.shape != (len(a), len(b)):
        raise DimensionMismatch(f"cost shape {C.shape} does not match ({len(a)}, {len(b)})")
    with np.errstate(divide="ignore"):
        log_a, log_b = np.log(a), np.log(b)

    def row_error(f, g, eps):
        log_plan = (f[:, None] + g[None, :] - C) / eps + log_a[:, None] + log_b[None, :]
        return np.abs(np.exp(log_plan).sum(axis=1) - a).sum()

    # warm start from coarser regularizations; the final stage uses epsilon
    schedule = [epsilon]
    while schedule[-1] < C.max():
        schedule.append(schedule[-1] * 10.0)
    f = np.zeros(len(a))
    g = np.zeros(len(b))
    status = ITERATION_LIMIT
    it = 0
    for stage, eps in enumerate(reversed(schedule)):
        if it >= max_iter:
            break
        used = eps
        final = stage == len(schedule) - 1
        stage_tol = tol if final else max(tol, 1e-4)
        while it < max_iter:
            f = -eps * logsumexp((g[None, :] - C) / eps + log_b[None, :], axis=1)
            g = -eps * logsumexp((f[:, None] - C) / eps + log_a[:, None], axis=0)
            it += 1
            if it % 10 == 0 and row_error(f, g, eps) < stage_tol:
                if final:
                    status = OPTIMAL
                break
    # potentials belong to the last stage run, which is coarser on early exit
    log_plan = (f[:, None] + g[None, :] - C) / used + log_a[:, None] + log_b[None, :]
    plan = round_to_polytope(np.exp(log_plan), a, b)
    return OtResult(float((C * plan).sum()), Coupling.from_plan(plan), f, g, status)


def barycenter(
    sources: Sequence[DiscreteDistribution],
    support=None,
    weights: Optional[Sequence[float]] = None,
) -> DiscreteDistribution:
    """Fixed-support Wasserstein-2 barycenter as one joint linear program.

    Minimizes ``sum_m weights[m] * W_2^2(C, sources[m])`` over weight vectors
    of ``C`` on ``support`` (default: union of the source supports). The
    returned distribution keeps every support point, including zero-mass
    ones; call ``.trimmed()`` to drop them.
    """
    if len(sources) == 0:
        raise ValueError("need at least one source")
    if support is None:
        support = pooled_support(sources).support
    support = as_points(support, sources[0].dim)
    M = len(sources)
    lam = np.full(M, 1.0 / M) if weights is None else np.asarray(weights, dtype=np.float64)
    if len(lam) != M:
        raise ValueError("one barycentric weight per source is required")
    lam = lam / lam.sum()

    n = len(support)
    costs, blocks_row, blocks_col, rhs = [], [], [], []
    for s, w in zip(sources, lam):
        C = cost_matrix(support, s.support, 2).entries
        m = C.shape[1]
        costs.append(w * C.ravel())
        blocks_row.append(sps.kron(sps.eye(n), np.ones((1, m))))
        blocks_col.append(sps.kron(np.ones((1, n)), sps.eye(m)))
        rhs.append(s.weights)
    n_plan = sum(len(c) for c in costs)
    # plan rows sum to the barycenter weights; plan columns sum to each source
    A_rows = sps.hstack([sps.block_diag(blocks_row), -sps.vstack([sps.eye(n)] * M)])
    A_cols = sps.hstack([sps.block_diag(blocks_col), sps.csr_matrix((sum(map(len, rhs)), n))])
    A_sum = sps.hstack([sps.csr_matrix((1, n_plan)), np.ones((1, n))])
    A = sps.vstack([A_rows, A_cols, A_sum]).tocsr()
    b = np.concatenate([np.zeros(n * M), np.concatenate(rhs), [1.0]])
    c = np.concatenate(costs + [np.zeros(n)])
    # interior point with crossover: much faster here, still returns a vertex
    res = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs-ipm")
    if res.status != 0:
        raise SolverFailure("barycenter linear program failed", res.message)
    return validate_distribution(support, clean_weights(res.x[n_plan:]))


def barycenter_objective(center: DiscreteDistribution, sources, weights=None) -> float:
    """Weighted sum of squared W_2 distances from ``center`` to each source."""
    M = len(sources)
    lam = np.full(M, 1.0 / M) if weights is None else np.asarray(weights, dtype=np.float64) / np.sum(weights)
    return float(sum(w * wasserstein(center, s, 2) ** 2 for s, w in zip(sources, lam)))
