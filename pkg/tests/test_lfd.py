import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import lfd_grid
from wdlfd.core import Infeasible, InvalidRadius, LengthMismatch, LfdSolution, LipschitzViolation, validate_distribution
from wdlfd.lfd import (
    detector,
    kantorovich_witness,
    kr_dual_bound,
    pointwise_risk,
    solve_lfd,
    solve_lfd_penalized,
    solve_lfd_separated,
    surrogate_risk,
    triangle_feasible,
    verify_separation,
)
from wdlfd.transport import wasserstein


def delta(x):
    return validate_distribution(np.atleast_2d(x), [1.0])


def random_pair(rng, n=4, d=2):
    X = rng.normal(size=(n, d))
    Y = rng.normal(size=(n, d)) + 1.0
    return (validate_distribution(X, rng.dirichlet(np.ones(n))),
            validate_distribution(Y, rng.dirichlet(np.ones(n))))


def lattice_pair(rng, x):
    # masses on the 0.02 lattice so that the grid oracle contains the centers
    q1 = rng.multinomial(50, np.ones(len(x)) / len(x)) / 50
    q2 = rng.multinomial(50, np.ones(len(x)) / len(x)) / 50
    return q1, q2


def test_surrogate_risk_examples():
    p = np.array([0.2, 0.3, 0.5])
    assert surrogate_risk(p, p) == pytest.approx(2.0)
    assert surrogate_risk([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert surrogate_risk([1.0, 0.0], [0.5, 0.5]) == pytest.approx(2 * np.sqrt(0.5))
    with pytest.raises(LengthMismatch):
        surrogate_risk([1.0], [0.5, 0.5])


def test_detector_examples():
    sol = LfdSolution(np.array([[0.0], [1.0], [2.0]]), np.array([0.4, 0.0, 0.6]),
                      np.array([0.4, 0.1, 0.5]) / 1.0, 0.0, 0.0, 0.0)
    scores = detector(sol)
    assert scores[0] == 0.0
    assert scores[1] == pytest.approx(0.5 * np.log(1e-12 / 0.1))
    sol = LfdSolution(np.array([[0.0]]), np.array([0.4]), np.array([0.1]), 0.0, 0.0, 0.0)
    assert detector(sol)[0] == pytest.approx(0.5 * np.log(4.0))


def test_anchoring_at_zero_radius(rng):
    q1, q2 = random_pair(rng)
    sol = solve_lfd(q1, q2, 0.0, 0.0)
    k = len(q1)
    np.testing.assert_allclose(sol.p1[:k], q1.weights, atol=1e-12)
    np.testing.assert_allclose(sol.p2[k:], q2.weights, atol=1e-12)
    assert sol.objective == pytest.approx(surrogate_risk(sol.p1, sol.p2), abs=1e-12)
    assert sol.exact_separation == pytest.approx(wasserstein(q1, q2), abs=1e-9)


def test_saturation_when_balls_overlap(rng):
    q1, q2 = random_pair(rng)
    w = wasserstein(q1, q2)
    for split in (0.5, 0.2, 1.0):
        sol = solve_lfd(q1, q2, split * w + 1e-9, (1 - split) * w + 1e-9)
        assert sol.objective == pytest.approx(2.0, abs=1e-6)


def test_point_masses_with_small_radii():
    sol = solve_lfd(delta(0.0), delta(1.0), 0.25, 0.25)
    assert 0.0 < sol.objective < 2.0
    # best move: shift a quarter of each mass to the other point
    np.testing.assert_allclose(sol.p1, [0.75, 0.25], atol=1e-6)
    assert sol.objective == pytest.approx(4 * np.sqrt(0.75 * 0.25), abs=1e-6)


def test_couplings_respect_budgets(rng):
    q1, q2 = random_pair(rng)
    sol = solve_lfd(q1, q2, 0.3, 0.5)
    from wdlfd.transport import cost_matrix
    C = cost_matrix(sol.support, sol.support).entries
    for plan, p, theta in ((sol.couplings[0], sol.p1, 0.3), (sol.couplings[1], sol.p2, 0.5)):
        assert (C * plan).sum() <= theta + 1e-7
        np.testing.assert_allclose(plan.sum(axis=0), p, atol=1e-6)


def test_negative_radius_is_rejected():
    with pytest.raises(InvalidRadius):
        solve_lfd(delta(0.0), delta(1.0), -0.1, 0.0)


def test_matches_grid_oracle(rng):
    x = np.array([0.0, 1.0, 2.0])
    for _ in range(4):
        q1, q2 = lattice_pair(rng, x)
        t1, t2 = np.round(rng.uniform(0, 0.6, size=2) / 0.02) * 0.02
        Q1 = validate_distribution(x[q1 > 0], q1[q1 > 0])
        Q2 = validate_distribution(x[q2 > 0], q2[q2 > 0])
        sol = solve_lfd(Q1, Q2, t1, t2)
        assert abs(sol.objective - lfd_grid(x, q1, q2, t1, t2, steps=100)) <= 5e-3


def test_exponent_two_ball(rng):
    q1, q2 = delta(0.0), delta(2.0)
    sol = solve_lfd(q1, q2, 1.0, 0.0, exponent=2)
    # W_2 ball of radius 1 around delta_0 on {0, 2}: move mass 1/4 to 2
    np.testing.assert_allclose(sol.p1, [0.75, 0.25], atol=1e-6)


def test_separated_examples():
    sol = solve_lfd_separated(delta(0.0), delta(1.0), 0.0, 0.0, 1.0)
    np.testing.assert_allclose(sol.p1, [1.0, 0.0])
    np.testing.assert_allclose(sol.p2, [0.0, 1.0])
    assert sol.separation_satisfied and sol.exact_separation == pytest.approx(1.0)
    with pytest.raises(Infeasible):
        solve_lfd_separated(delta(0.0), delta(1.0), 0.0, 0.0, 1.5)
    with pytest.raises(ValueError):
        solve_lfd_separated(delta(0.0), delta(1.0), 0.0, 0.0, -1.0)


def test_separation_zero_is_vacuous(rng):
    q1, q2 = random_pair(rng)
    free = solve_lfd(q1, q2, 0.4, 0.4)
    sep = solve_lfd_separated(q1, q2, 0.4, 0.4, 0.0)
    assert sep.objective == pytest.approx(free.objective, abs=1e-6)
    assert sep.separation_satisfied


def test_separation_never_helps(rng):
    for _ in range(3):
        q1, q2 = random_pair(rng)
        free = solve_lfd(q1, q2, 0.5, 0.5)
        for gamma in (0.2, 0.6, 1.0):
            try:
                sep = solve_lfd_separated(q1, q2, 0.5, 0.5, gamma)
            except Infeasible:
                continue
            assert sep.objective <= free.objective + 1e-6


def test_triangle_guarantee(rng):
    for _ in range(5):
        q1, q2 = random_pair(rng)
        w = wasserstein(q1, q2)
        t1, t2 = rng.uniform(0, 0.3 * w, size=2)
        gamma = w - t1 - t2
        assert triangle_feasible(q1, q2, t1, t2, gamma)
        check = verify_separation(solve_lfd_separated(q1, q2, t1, t2, gamma))
        assert check.satisfied and check.exact_w >= gamma - 1e-6


def test_triangle_feasible_examples():
    assert triangle_feasible(delta(0.0), delta(10.0), 3.0, 3.0, 4.0)
    assert not triangle_feasible(delta(0.0), delta(1.0), 0.6, 0.6, 0.1)
    assert triangle_feasible(delta(0.0), delta(1.0), 0.1, 0.1, 0.0)


def test_verify_separation_at_zero_radius(rng):
    q1, q2 = random_pair(rng)
    sol = solve_lfd(q1, q2, 0.0, 0.0)
    assert verify_separation(sol).exact_w == pytest.approx(wasserstein(q1, q2), abs=1e-9)
    assert verify_separation(sol).satisfied


def test_penalized_zero_lambda_equals_plain(rng):
    q1, q2 = random_pair(rng)
    plain = solve_lfd(q1, q2, 0.3, 0.2)
    pen = solve_lfd_penalized(q1, q2, 0.3, 0.2, 0.0)
    assert pen.objective == pytest.approx(plain.objective, abs=1e-6)
    np.testing.assert_allclose(pen.p1, plain.p1, atol=1e-6)


def test_penalized_history_is_nondecreasing(rng):
    for _ in range(3):
        q1, q2 = random_pair(rng)
        sol = solve_lfd_penalized(q1, q2, 0.4, 0.4, 0.5)
        assert np.all(np.diff(sol.history) >= -1e-9)
        assert sol.objective == pytest.approx(sol.history[-1])


def test_penalized_large_lambda_keeps_fixed_points():
    sol = solve_lfd_penalized(delta(0.0), delta(1.0), 0.0, 0.0, 1e3)
    assert sol.exact_separation == pytest.approx(1.0)


def test_penalized_large_lambda_pushes_apart():
    q1 = validate_distribution([0.0, 1.0, 2.0], [0.2, 0.6, 0.2])
    q2 = validate_distribution([0.0, 1.0, 2.0], [0.3, 0.4, 0.3])
    sol = solve_lfd_penalized(q1, q2, 0.3, 0.3, 1e3)
    free = solve_lfd(q1, q2, 0.3, 0.3)
    assert sol.exact_separation > free.exact_separation + 0.1


def test_penalized_matches_grid_oracle(rng):
    x = np.array([0.0, 1.0, 2.0])
    q1, q2 = np.array([0.5, 0.3, 0.2]), np.array([0.2, 0.3, 0.5])
    Q1, Q2 = validate_distribution(x, q1), validate_distribution(x, q2)
    sol = solve_lfd_penalized(Q1, Q2, 0.2, 0.2, 0.5)
    assert abs(sol.objective - lfd_grid(x, q1, q2, 0.2, 0.2, steps=50, lam=0.5)) <= 1e-2


def test_kr_dual_bound_examples(rng):
    q1, q2 = random_pair(rng)
    sol = solve_lfd(q1, q2, 0.0, 0.0)
    assert kr_dual_bound(sol.p1, sol.p2, np.full(len(sol.p1), 3.0), sol.support) == pytest.approx(0.0)
    f = kantorovich_witness(sol)
    assert kr_dual_bound(sol.p1, sol.p2, f, sol.support) == pytest.approx(wasserstein(q1, q2), abs=1e-6)
    with pytest.raises(LipschitzViolation):
        kr_dual_bound(sol.p1, sol.p2, 10 * f + np.arange(len(f)), sol.support)


@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0))
def test_closed_form_detector_is_optimal(a, b):
    phi = 0.5 * np.log(a / b)
    best = pointwise_risk(a, b, phi)
    assert best == pytest.approx(2 * np.sqrt(a * b))
    for d in (0.01, 0.1, 0.5):
        assert best <= pointwise_risk(a, b, phi + d) + 1e-15
        assert best <= pointwise_risk(a, b, phi - d) + 1e-15


@given(st.integers(0, 2**32 - 1))
def test_objective_is_monotone_in_radii(seed):
    rng = np.random.default_rng(seed)
    q1, q2 = random_pair(rng, n=3)
    grid = np.linspace(0.0, 1.0, 4)
    values = [solve_lfd(q1, q2, t, 0.2).objective for t in grid]
    assert np.all(np.diff(values) >= -1e-6)
    assert all(-1e-9 <= v <= 2 + 1e-9 for v in values)
