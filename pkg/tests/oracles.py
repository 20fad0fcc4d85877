"""Independent reference computations used by the tests.

Nothing here calls into the package solvers.
"""

import itertools

import numpy as np


def permutation_ot(C):
    """Min-cost perfect matching by enumeration, averaged (uniform marginals)."""
    n = C.shape[0]
    return min(C[np.arange(n), list(p)].mean() for p in itertools.permutations(range(n)))


def simplex_grid(n, steps):
    """All weight vectors on n atoms with entries in {0, 1/steps, ..., 1}."""
    pts = [c for c in itertools.combinations_with_replacement(range(n), steps)]
    out = np.zeros((len(pts), n))
    for row, combo in enumerate(pts):
        for i in combo:
            out[row, i] += 1
    return out / steps


def w1_line(x, A, B):
    """Exact W_1 between weight rows of A and B on sorted 1-D points x.

    Returns the |A| x |B| matrix of distances via the CDF formula.
    """
    gaps = np.diff(x)
    FA = np.cumsum(A, axis=1)[:, :-1]
    FB = np.cumsum(B, axis=1)[:, :-1]
    out = np.zeros((len(A), len(B)))
    for j, g in enumerate(gaps):
        out += np.abs(FA[:, j][:, None] - FB[:, j][None, :]) * g
    return out


def lfd_grid(x, q1, q2, theta1, theta2, steps=100, lam=0.0):
    """Grid maximum of risk (+ lam * W_1) over pairs in the two W_1 balls, 1-D support."""
    order = np.argsort(x)
    x, q1, q2 = np.asarray(x, float)[order], np.asarray(q1, float)[order], np.asarray(q2, float)[order]
    grid = simplex_grid(len(x), steps)
    in1 = grid[w1_line(x, grid, q1[None, :])[:, 0] <= theta1 + 1e-12]
    in2 = grid[w1_line(x, grid, q2[None, :])[:, 0] <= theta2 + 1e-12]
    value = 2.0 * np.sqrt(in1) @ np.sqrt(in2).T
    if lam:
        value = value + lam * w1_line(x, in1, in2)
    return float(value.max())


def chi2_sf_by_quadrature(t, dof):
    """Upper tail of the chi-squared law by integrating its density."""
    from math import gamma
    from scipy.integrate import quad

    k = dof / 2.0
    dens = lambda z: z ** (k - 1) * np.exp(-z / 2) / (2 ** k * gamma(k))
    if t <= 0:
        return 1.0
    return quad(dens, t, np.inf)[0]
