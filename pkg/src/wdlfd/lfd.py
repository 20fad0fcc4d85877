"""Least-favorable distributions on a pooled empirical support.

With the exponential generating function the detector can be minimized in
closed form, leaving a concave maximization over the two Wasserstein balls:

    maximize    sum_l 2 sqrt(p1_l p2_l)
    subject to  p_k = column sums of a coupling gamma_k whose row sums are Q_k
                <C, gamma_k> <= theta_k ** exponent

Each square root is handled through a hypograph variable ``s_l`` with
``s_l**2 <= p1_l p2_l``, written as the second-order cone
``||(2 s_l, p1_l - p2_l)|| <= p1_l + p2_l``. The resulting conic program is
solved with Clarabel.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import clarabel
import numpy as np
import scipy.sparse as sps

from .core import (
    DiscreteDistribution,
    ITERATION_LIMIT,
    Infeasible,
    InvalidRadius,
    LengthMismatch,
    LfdSolution,
    LipschitzViolation,
    OPTIMAL,
    SolverFailure,
    as_points,
    clean_weights,
    pooled_support,
)
from .transport import c_transform_pair, cost_matrix, exact_ot, wasserstein

LOG_CLIP = 1e-12
SOLVER_TOL = 1e-10


def surrogate_risk(p1, p2) -> float:
    """Minimal exponential risk ``sum_l 2 sqrt(p1_l p2_l)`` of a pair."""
    p1, p2 = np.asarray(p1, dtype=np.float64), np.asarray(p2, dtype=np.float64)
    if p1.shape != p2.shape:
        raise LengthMismatch(f"weight vectors of length {p1.size} and {p2.size}")
    return float(2.0 * np.sqrt(np.maximum(p1 * p2, 0.0)).sum())


def pointwise_risk(a, b, phi):
    """Exponential risk ``a exp(-phi) + b exp(phi)`` of one score."""
    return a * np.exp(-phi) + b * np.exp(phi)


def log_ratio(p1, p2, eps: float = LOG_CLIP):
    return np.log(np.maximum(p1, eps)) - np.log(np.maximum(p2, eps))


def detector(solution: LfdSolution) -> np.ndarray:
    """Optimal scores ``0.5 log(p1 / p2)`` on the support, with clipping at 1e-12."""
    return 0.5 * log_ratio(solution.p1, solution.p2)


# ---------------------------------------------------------------------------
# conic program


@dataclass
class _Problem:
    support: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    cost: np.ndarray
    budgets: tuple
    exponent: int


def _prepare(Q1, Q2, theta1, theta2, exponent) -> _Problem:
    for th in (theta1, theta2):
        if not np.isfinite(th) or th < 0:
            raise InvalidRadius(f"radius must be finite and >= 0, got {th}")
    if exponent not in (1, 2):
        raise ValueError(f"exponent must be 1 or 2, got {exponent}")
    pool = pooled_support([Q1, Q2])
    C = cost_matrix(pool.support, pool.support, exponent).entries
    return _Problem(pool.support, pool.weights[0], pool.weights[1], C,
                    (theta1 ** exponent, theta2 ** exponent), exponent)


class _Affine:
    """p = G @ x + c, with G sparse."""

    def __init__(self, G, c):
        self.G, self.c = G, c


def _solve_conic(prob: _Problem, sep_budget: Optional[float] = None, lin=None):
    """Maximize risk (+ optional linear terms) over the two balls.

    Returns (p1, p2, plans, solver objective). ``plans`` holds the coupling
    matrices; a ball with zero radius pins its distribution to the center and
    carries no coupling variables.
    """
    n = len(prob.support)
    C = prob.cost
    # variable layout: [gamma_1 rows | gamma_2 rows | gamma_3 | s]
    blocks, offset = [], 0
    for q, budget in zip((prob.q1, prob.q2), prob.budgets):
        if budget == 0.0:
            blocks.append(None)
            continue
        rows = np.flatnonzero(q > 0)
        blocks.append((rows, offset))
        offset += len(rows) * n
    sep_offset = None
    if sep_budget is not None:
        sep_offset = offset
        offset += n * n
    s_offset = offset
    N = offset + n

    def colsum_op(r, off):
        # column sums of the r x n block starting at off
        G = sps.kron(np.ones((1, r)), sps.eye(n), format="csr")
        return sps.hstack([sps.csr_matrix((n, off)), G, sps.csr_matrix((n, N - off - r * n))]).tocsr()

    def rowsum_op(r, m, off):
        G = sps.kron(sps.eye(r), np.ones((1, m)), format="csr")
        return sps.hstack([sps.csr_matrix((r, off)), G, sps.csr_matrix((r, N - off - r * m))]).tocsr()

    affine = []
    for k, q in enumerate((prob.q1, prob.q2)):
        if blocks[k] is None:
            affine.append(_Affine(sps.csr_matrix((n, N)), q.copy()))
        else:
            rows, off = blocks[k]
            affine.append(_Affine(colsum_op(len(rows), off), np.zeros(n)))
    P1, P2 = affine

    zero_A, zero_b, nn_A, nn_b = [], [], [], []
    for k, q in enumerate((prob.q1, prob.q2)):
        if blocks[k] is None:
            continue
        rows, off = blocks[k]
        r = len(rows)
        zero_A.append(rowsum_op(r, n, off))
        zero_b.append(q[rows])
        budget_row = np.zeros(N)
        budget_row[off:off + r * n] = C[rows].ravel()
        nn_A.append(sps.csr_matrix(budget_row))
        nn_b.append([prob.budgets[k]])
    if sep_offset is not None:
        zero_A.append(rowsum_op(n, n, sep_offset) - P1.G)
        zero_b.append(P1.c)
        zero_A.append(colsum_op(n, sep_offset) - P2.G)
        zero_b.append(P2.c)
        sep_row = np.zeros(N)
        sep_row[sep_offset:sep_offset + n * n] = -C.ravel()
        nn_A.append(sps.csr_matrix(sep_row))
        nn_b.append([-sep_budget])
    n_plan = s_offset
    nn_A.append(-sps.eye(n_plan, N, format="csr"))
    nn_b.append(np.zeros(n_plan))

    # cone l: (p1_l + p2_l, 2 s_l, p1_l - p2_l); slack = b - A x
    S = sps.hstack([sps.csr_matrix((n, s_offset)), sps.eye(n)]).tocsr()
    soc_A = sps.vstack([-(P1.G + P2.G), -2.0 * S, -(P1.G - P2.G)]).tocsr()
    soc_b = np.concatenate([P1.c + P2.c, np.zeros(n), P1.c - P2.c])
    perm = np.arange(3 * n).reshape(3, n).T.ravel()
    soc_A, soc_b = soc_A[perm], soc_b[perm]

    A = sps.vstack(zero_A + nn_A + [soc_A]).tocsc()
    b = np.concatenate([np.concatenate(zero_b) if zero_b else np.zeros(0),
                        np.concatenate([np.ravel(v) for v in nn_b]), soc_b])
    n_zero = sum(z.shape[0] for z in zero_A)
    n_nn = sum(z.shape[0] for z in nn_A)
    cones = []
    if n_zero:
        cones.append(clarabel.ZeroConeT(n_zero))
    cones.append(clarabel.NonnegativeConeT(n_nn))
    cones.extend(clarabel.SecondOrderConeT(3) for _ in range(n))

    q = np.zeros(N)
    q[s_offset:] = -2.0
    if lin is not None:
        q -= P1.G.T @ lin[0] + P2.G.T @ lin[1]

    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = SOLVER_TOL
    settings.tol_gap_rel = SOLVER_TOL
    settings.tol_feas = SOLVER_TOL
    settings.max_iter = 400
    solver = clarabel.DefaultSolver(sps.csc_matrix((N, N)), q, A, b, cones, settings)
    sol = solver.solve()
    status = str(sol.status)
    if "Infeasible" in status:
        raise Infeasible(f"no pair of distributions satisfies all constraints ({status})")
    if status not in ("Solved", "AlmostSolved"):
        raise SolverFailure("least-favorable conic program failed", status)

    x = np.asarray(sol.x)
    p1 = clean_weights(P1.G @ x + P1.c, tol=1e-6)
    p2 = clean_weights(P2.G @ x + P2.c, tol=1e-6)
    plans = []
    for k, q_k in enumerate((prob.q1, prob.q2)):
        if blocks[k] is None:
            plans.append(np.diag(q_k))
            continue
        rows, off = blocks[k]
        plan = np.zeros((n, n))
        plan[rows] = x[off:off + len(rows) * n].reshape(len(rows), n)
        plans.append(np.maximum(plan, 0.0))
    if sep_offset is not None:
        plans.append(np.maximum(x[sep_offset:sep_offset + n * n].reshape(n, n), 0.0))
    else:
        plans.append(None)
    return p1, p2, tuple(plans), -float(sol.obj_val)


def _transport_cost(prob: _Problem, p1, p2):
    """W_p^p between two weight vectors on the pooled support, with potentials."""
    res = exact_ot(p1, p2, prob.cost)
    return res.value, res.dual_u, res.dual_v


def _exact_separation(prob: _Problem, p1, p2) -> float:
    value = max(_transport_cost(prob, p1, p2)[0], 0.0)
    return value ** (1.0 / prob.exponent)


def solve_lfd(Q1: DiscreteDistribution, Q2: DiscreteDistribution,
              theta1: float, theta2: float, exponent: int = 1) -> LfdSolution:
    """Least-favorable pair inside two Wasserstein balls of order ``exponent``.

    Both distributions live on the union of the supports of ``Q1`` and
    ``Q2``; a zero radius pins that distribution to its center.
    """
    prob = _prepare(Q1, Q2, theta1, theta2, exponent)
    p1, p2, plans, _ = _solve_conic(prob)
    return LfdSolution(
        support=prob.support, p1=p1, p2=p2, theta1=float(theta1), theta2=float(theta2),
        objective=surrogate_risk(p1, p2), exponent=exponent,
        couplings=(plans[0], plans[1], None),
        exact_separation=_exact_separation(prob, p1, p2),
    )


def solve_lfd_separated(Q1, Q2, theta1, theta2, gamma_sep: float,
                        exponent: int = 1) -> LfdSolution:
    """Least-favorable pair with an extra coupling between the two LFDs.

    A third coupling with marginals (p1, p2) must have cost at least
    ``gamma_sep ** exponent``. This only asks that *some* coupling be
    expensive, which is weaker than ``W(p1, p2) >= gamma_sep``; the exact
    distance is therefore recomputed and stored in ``exact_separation`` and
    ``separation_satisfied``.

    Raises ``Infeasible`` when no pair satisfies the constraints.
    """
    if not np.isfinite(gamma_sep) or gamma_sep < 0:
        raise ValueError(f"gamma_sep must be >= 0, got {gamma_sep}")
    prob = _prepare(Q1, Q2, theta1, theta2, exponent)
    p1, p2, plans, _ = _solve_conic(prob, sep_budget=gamma_sep ** exponent)
    sol = LfdSolution(
        support=prob.support, p1=p1, p2=p2, theta1=float(theta1), theta2=float(theta2),
        objective=surrogate_risk(p1, p2), exponent=exponent, gamma_sep=float(gamma_sep),
        couplings=plans,
    )
    check = verify_separation(sol)
    return replace(sol, exact_separation=check.exact_w, separation_satisfied=check.satisfied)


def _ccp(prob, lam, p1, p2, plans, max_outer, tol):
    t_cost, u, v = _transport_cost(prob, p1, p2)
    value = surrogate_risk(p1, p2) + lam * t_cost
    history = [value]
    status = ITERATION_LIMIT
    for _ in range(max_outer):
        n1, n2, n_plans, _ = _solve_conic(prob, lin=(lam * u, lam * v))
        n_cost, n_u, n_v = _transport_cost(prob, n1, n2)
        n_value = surrogate_risk(n1, n2) + lam * n_cost
        if n_value <= value:
            # no ascent left beyond solver round-off: keep the incumbent
            status = OPTIMAL
            break
        gain = n_value - value
        p1, p2, plans, u, v, value = n1, n2, n_plans, n_u, n_v, n_value
        history.append(value)
        if gain < tol:
            status = OPTIMAL
            break
    return value, p1, p2, plans, history, status


def solve_lfd_penalized(Q1, Q2, theta1, theta2, lambda_pen: float, exponent: int = 1,
                        max_outer: int = 50, tol: float = 1e-8, n_starts: int = 8,
                        seed: int = 0) -> LfdSolution:
    """Local maximizer of ``risk(p1, p2) + lambda_pen * T(p1, p2)`` over the balls.

    ``T`` is the optimal transport cost on the pooled support (``W_1`` for
    exponent 1, ``W_2^2`` for exponent 2), which is convex in the pair of
    marginals. Each outer step replaces ``T`` by the lower bound
    ``<u, p1> + <v, p2>`` built from the Kantorovich potentials at the
    current iterate and solves the resulting concave program, so the
    objective never decreases. Iteration stops when the gain drops below
    ``tol``; reaching ``max_outer`` first sets status ``IterationLimit``.

    The ascent is run from the unpenalized solution, from the centers, and
    from ``n_starts`` random dual-feasible linearizations (seeded by
    ``seed``); the best stationary point is returned. The stored
    ``objective`` is the penalized value and ``history`` holds the value after
    every outer step of the winning run.
    """
    if not np.isfinite(lambda_pen) or lambda_pen < 0:
        raise ValueError(f"lambda_pen must be >= 0, got {lambda_pen}")
    prob = _prepare(Q1, Q2, theta1, theta2, exponent)
    p1, p2, plans, _ = _solve_conic(prob)
    if lambda_pen == 0:
        best = (surrogate_risk(p1, p2), p1, p2, plans, [surrogate_risk(p1, p2)], OPTIMAL)
    else:
        centers = (np.diag(prob.q1), np.diag(prob.q2), None)
        runs = [
            _ccp(prob, lambda_pen, p1, p2, plans, max_outer, tol),
            _ccp(prob, lambda_pen, prob.q1, prob.q2, centers, max_outer, tol),
        ]
        rng = np.random.default_rng(seed)
        scale = prob.cost.max()
        for _ in range(n_starts):
            u, v = c_transform_pair(prob.cost, rng.uniform(-0.5, 0.5, len(prob.q1)) * scale)
            s1, s2, s_plans, _ = _solve_conic(prob, lin=(lambda_pen * u, lambda_pen * v))
            runs.append(_ccp(prob, lambda_pen, s1, s2, s_plans, max_outer, tol))
        best = max(runs, key=lambda run: run[0])
    value, p1, p2, plans, history, status = best
    return LfdSolution(
        support=prob.support, p1=p1, p2=p2, theta1=float(theta1), theta2=float(theta2),
        objective=value, exponent=exponent, lambda_pen=float(lambda_pen),
        couplings=(plans[0], plans[1], None),
        exact_separation=_exact_separation(prob, p1, p2),
        status=status, history=tuple(history),
    )


# ---------------------------------------------------------------------------
# separation diagnostics


@dataclass(frozen=True)
class SeparationCheck:
    exact_w: float
    satisfied: bool


def verify_separation(solution: LfdSolution, exponent: Optional[int] = None) -> SeparationCheck:
    """Exact ``W(p1, p2)`` of a solution and whether it reaches ``gamma_sep``."""
    p = solution.exponent if exponent is None else exponent
    w = wasserstein(solution.dist1, solution.dist2, p)
    gamma = solution.gamma_sep or 0.0
    return SeparationCheck(w, w >= gamma - 1e-6)


def triangle_feasible(Q1, Q2, theta1, theta2, gamma_sep, exponent: int = 1) -> bool:
    """True when every pair in the two balls is at least ``gamma_sep`` apart.

    Follows from the triangle inequality:
    ``W(P1, P2) >= W(Q1, Q2) - theta1 - theta2``.
    """
    return wasserstein(Q1, Q2, exponent) - theta1 - theta2 >= gamma_sep


def kantorovich_witness(solution: LfdSolution) -> np.ndarray:
    """1-Lipschitz function on the support attaining ``W_1(p1, p2)``."""
    C = cost_matrix(solution.support, solution.support, 1).entries
    res = exact_ot(solution.p1, solution.p2, C)
    u, _ = c_transform_pair(C, res.dual_u)
    return u


def kr_dual_bound(p1, p2, witness_values, support=None, lipschitz_check: bool = True,
                  tol: float = 1e-9) -> float:
    """Lower bound ``<f, p1> - <f, p2>`` on ``W_1(p1, p2)``.

    With ``lipschitz_check`` the witness is verified to be 1-Lipschitz on
    ``support`` (required in that case).
    """
    p1, p2 = np.asarray(p1, dtype=np.float64), np.asarray(p2, dtype=np.float64)
    f = np.asarray(witness_values, dtype=np.float64)
    if not (p1.shape == p2.shape == f.shape):
        raise LengthMismatch("p1, p2 and witness must have the same length")
    if lipschitz_check:
        if support is None:
            raise ValueError("support is required for the Lipschitz check")
        D = cost_matrix(as_points(support), as_points(support), 1).entries
        excess = np.abs(f[:, None] - f[None, :]) - D
        if excess.max() > tol:
            i, j = np.unravel_index(np.argmax(excess), excess.shape)
            raise LipschitzViolation(
                f"|f({i}) - f({j})| exceeds their distance by {excess[i, j]:.3g}")
    return float(f @ p1 - f @ p2)

