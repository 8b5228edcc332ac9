"""Least-absolute-value estimation for linear measurement models.

``solve_lav`` minimizes the residual L1 norm through a small dense primal
simplex on the equivalent linear program

    min 1'(u + w)   s.t.   H theta + u - w = z,   u, w >= 0,  theta free,

with theta split into nonnegative parts.  The objective is convex (a sum of
absolute values of affine functions), so the simplex optimum is global.
``lav_vertex_oracle`` solves the same problem by brute-force enumeration of
the square subsystems whose solutions are the candidate vertices; it exists
to cross-check the simplex and is guarded to small sizes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    MaxIterations,
    RankDeficient,
    TooLarge,
    UnboundedProblem,
)
from .model import MeasurementModel, matrix_rank, validate_model

# Reduced costs below -_OPT_TOL trigger a pivot; values within _OPT_TOL of
# zero at optimality mark alternative optima.
_OPT_TOL = 1e-9
_PIVOT_TOL = 1e-11
# Consecutive zero-step pivots before switching to Bland's rule.
_STALL_LIMIT = 40

ORACLE_MAX_M = 20
ORACLE_MAX_N = 4


@dataclass(frozen=True)
class LavSolution:
    """Result of an absolute-value fit.

    zero_set collects the rows whose residual magnitude falls below the
    zero tolerance; with a full-column-rank model an optimal fit satisfies
    at least N rows exactly, so len(zero_set) >= N up to that tolerance.
    degenerate indicates the optimum is not unique (a flat face of the
    objective), which happens mostly with too few measurements.
    """

    theta_hat: np.ndarray
    residuals: np.ndarray
    objective: float
    zero_set: tuple[int, ...]
    iterations: int
    degenerate: bool


def objective_at(model: MeasurementModel, theta: np.ndarray) -> float:
    """Sum of absolute residuals of the model at the given state vector."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.shape != (model.n,):
        raise DimensionMismatch(f"theta has length {theta.shape[0]}, expected {model.n}")
    return float(np.abs(model.z - model.h @ theta).sum())


def _finish(model: MeasurementModel, theta: np.ndarray, iterations: int,
            degenerate: bool, zero_tol: float) -> LavSolution:
    residuals = model.z - model.h @ theta
    zero_set = tuple(int(i) for i in np.flatnonzero(np.abs(residuals) < zero_tol))
    return LavSolution(
        theta_hat=theta,
        residuals=residuals,
        objective=float(np.abs(residuals).sum()),
        zero_set=zero_set,
        iterations=iterations,
        degenerate=degenerate,
    )


def solve_lav(model: MeasurementModel, zero_tol: float = 1e-8,
              max_iter: int | None = None) -> LavSolution:
    """Globally minimize the sum of absolute residuals.

    Dantzig pricing with a permanent fall-back to Bland's rule after a run
    of degenerate pivots, which guarantees termination.  The starting basis
    is the residual slack itself (u or w per row), so no phase one is
    needed.
    """
    validate_model(model)
    h, z = model.h, model.z
    m, n = h.shape
    if max_iter is None:
        max_iter = 1000 + 50 * (m + n)

    # Column layout: [theta+ (n), theta- (n), u (m), w (m)].
    a = np.hstack([h, -h, np.eye(m), -np.eye(m)])
    c = np.concatenate([np.zeros(2 * n), np.ones(2 * m)])
    basis = np.array([2 * n + i if z[i] >= 0 else 2 * n + m + i for i in range(m)])
    x_b = np.abs(z).copy()

    iterations = 0
    stalled = 0
    use_bland = False
    while True:
        if iterations >= max_iter:
            raise MaxIterations(f"simplex exceeded {max_iter} iterations")
        b_mat = a[:, basis]
        y = np.linalg.solve(b_mat.T, c[basis])
        reduced = c - a.T @ y
        reduced[basis] = 0.0

        candidates = np.flatnonzero(reduced < -_OPT_TOL)
        if candidates.size == 0:
            break
        if use_bland:
            entering = int(candidates[0])
        else:
            entering = int(candidates[np.argmin(reduced[candidates])])

        direction = np.linalg.solve(b_mat, a[:, entering])
        movable = direction > _PIVOT_TOL
        if not movable.any():
            raise UnboundedProblem("no blocking variable; should not happen for finite objectives")
        ratios = np.full(m, np.inf)
        ratios[movable] = x_b[movable] / direction[movable]
        step = ratios.min()
        # Tie-break on the smallest basis column index (Bland-compatible).
        tied = np.flatnonzero(ratios <= step + 1e-12)
        leaving = int(tied[np.argmin(basis[tied])])

        x_b = x_b - step * direction
        x_b[leaving] = step
        np.clip(x_b, 0.0, None, out=x_b)
        basis[leaving] = entering
        iterations += 1
        if step <= 1e-12:
            stalled += 1
            if stalled >= _STALL_LIMIT:
                use_bland = True
        else:
            stalled = 0

    theta = np.zeros(n)
    for pos, col in enumerate(basis):
        if col < n:
            theta[col] += x_b[pos]
        elif col < 2 * n:
            theta[col - n] -= x_b[pos]

    # Alternative optimum: a nonbasic column prices out to zero.  The
    # theta-/theta+ partner of a basic theta column always prices to zero
    # without describing a different optimum, so partners are excluded.
    partner_of_basic = set()
    for col in basis:
        if col < n:
            partner_of_basic.add(col + n)
        elif col < 2 * n:
            partner_of_basic.add(col - n)
    nonbasic = np.ones(a.shape[1], dtype=bool)
    nonbasic[basis] = False
    degenerate = any(
        reduced[j] <= _OPT_TOL and j not in partner_of_basic
        for j in np.flatnonzero(nonbasic)
    )

    return _finish(model, theta, iterations, degenerate, zero_tol)


def lav_vertex_oracle(model: MeasurementModel, zero_tol: float = 1e-8) -> LavSolution:
    """Brute-force reference solver: try every square subsystem.

    Any minimizer of the piecewise-linear objective lies at an intersection
    of N zero-residual loci, so evaluating the objective at the solution of
    every nonsingular N-row subsystem and keeping the best is exact.  Ties
    within 1e-9 keep the lexicographically first subset and mark the
    solution degenerate.
    """
    m, n = model.m, model.n
    if m > ORACLE_MAX_M or n > ORACLE_MAX_N:
        raise TooLarge(f"oracle guard: need M <= {ORACLE_MAX_M} and N <= {ORACLE_MAX_N}")
    validate_model(model)

    best_theta = None
    best_obj = np.inf
    degenerate = False
    evaluated = 0
    for subset in itertools.combinations(range(m), n):
        sub = model.h[list(subset)]
        if matrix_rank(sub) < n:
            continue
        theta = np.linalg.solve(sub, model.z[list(subset)])
        obj = objective_at(model, theta)
        evaluated += 1
        if obj < best_obj - 1e-9:
            best_theta, best_obj = theta, obj
            degenerate = False
        elif abs(obj - best_obj) <= 1e-9 and not np.allclose(theta, best_theta, atol=1e-9):
            degenerate = True
    if best_theta is None:
        raise RankDeficient(matrix_rank(model.h), n, "no nonsingular subsystem")
    return _finish(model, best_theta, evaluated, degenerate, zero_tol)
