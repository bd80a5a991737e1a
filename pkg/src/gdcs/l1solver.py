"""Equality-constrained l1 minimization: basis pursuit, weighted l1, and
iterative reweighting.

The core solver alternates a soft-threshold (l1 proximal) step with an exact
projection onto the affine constraint set ``{z : A z = y}``, driving the
split variables together with a scaled dual update.  The projection reuses a
Cholesky factorization of ``A A^T`` computed once per matrix; a tiny diagonal
shift keeps the factorization valid when ``A A^T`` is rank deficient (the
expanded operators contain zero blocks by design).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass(frozen=True)
class SolverSettings:
    """Tolerances and iteration budgets for the l1 solvers.

    ``primal_tol`` bounds the final constraint residual relative to
    ``max(1, ||y||)``; ``dual_tol`` bounds the iterate movement.  Reweighting
    runs ``reweight_rounds`` solves total with weights ``1 / (|z| + eps)``
    from the previous round; ``inner_tol`` (when set) loosens every round but
    the last, since the weights are insensitive to small errors.  Entries
    with magnitude below ``zero_tol`` count as zero in sparsity measures.
    """

    primal_tol: float = 1e-7
    dual_tol: float = 1e-7
    max_iter: int = 20000
    reweight_eps: float = 0.1
    reweight_rounds: int = 4
    zero_tol: float = 1e-4
    step: float = 1.0
    relaxation: float = 1.6
    inner_tol: float | None = None
    check_every: int = 5
    adapt_iters: int = 1000

    def __post_init__(self):
        if self.primal_tol <= 0 or self.dual_tol <= 0 or self.zero_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.reweight_rounds < 1:
            raise ValueError("need at least one reweighting round")
        if self.max_iter < 1:
            raise ValueError("need at least one iteration")


@dataclass(frozen=True)
class L1Solution:
    """Solver output: the iterate, whether the tolerances were met, the
    iterations spent, and the final constraint residual ``||A z - y||``."""

    z: np.ndarray = field(repr=False)
    converged: bool
    iterations: int
    residual: float


def _prepare_projection(a: np.ndarray):
    gram = a @ a.T
    # rank-deficient A A^T: regularized pseudo-solve via a diagonal shift
    gram[np.diag_indices_from(gram)] += 1e-12 * np.trace(gram)
    return cho_factor(gram, check_finite=False)


def basis_pursuit(
    a: np.ndarray,
    y: np.ndarray,
    settings: SolverSettings = SolverSettings(),
    z0: np.ndarray | None = None,
) -> L1Solution:
    """Minimize ``||z||_1`` subject to ``A z = y``.

    Returns the best iterate with ``converged=False`` when the tolerances
    are not met within the iteration budget; callers decide how to treat
    that.  ``z0`` warm-starts the iteration.
    """
    a = np.ascontiguousarray(a, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = a.shape
    fac = _prepare_projection(a)
    y_scale = max(1.0, float(np.sqrt(y @ y)))
    if z0 is None:
        z = a.T @ cho_solve(fac, y, check_finite=False)  # least-norm feasible point
    else:
        z = np.asarray(z0, dtype=float).copy()
    u = np.zeros(n)
    rho = float(settings.step)
    relax = float(settings.relaxation)
    check_every = max(1, int(settings.check_every))
    converged = False
    iterations = 0
    for it in range(1, settings.max_iter + 1):
        iterations = it
        v = z - u
        x = v - a.T @ cho_solve(fac, a @ v - y, check_finite=False)
        z_old = z
        w = relax * x + (1.0 - relax) * z_old + u
        z = np.sign(w) * np.maximum(np.abs(w) - 1.0 / rho, 0.0)
        u = w - z
        if it % check_every:
            continue
        dz = z - z_old
        dual = rho * np.sqrt(dz @ dz)
        resid_vec = a @ z - y
        feas = np.sqrt(resid_vec @ resid_vec)
        if feas <= settings.primal_tol * y_scale and dual <= settings.dual_tol * max(
            1.0, np.sqrt(z @ z)
        ):
            converged = True
            break
        # residual balancing keeps primal/dual progress in step; frozen after
        # the burn-in because a drifting step length prevents settling on a
        # degenerate optimal face
        if it <= settings.adapt_iters:
            dx = x - z
            primal = np.sqrt(dx @ dx)
            if primal > 10.0 * dual and rho < 1e6:
                rho *= 2.0
                u /= 2.0
            elif dual > 10.0 * primal and rho > 1e-6:
                rho /= 2.0
                u *= 2.0
    resid_vec = a @ z - y
    residual = float(np.sqrt(resid_vec @ resid_vec))
    return L1Solution(z, converged, iterations, residual)


def weighted_l1(
    a: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    settings: SolverSettings = SolverSettings(),
    z0: np.ndarray | None = None,
) -> L1Solution:
    """Minimize ``sum_i w_i |z_i|`` subject to ``A z = y`` via the change of
    variables ``u = W z``, i.e. basis pursuit on ``A W^{-1}``."""
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (a.shape[1],):
        raise ValueError(f"expected {a.shape[1]} weights, got shape {weights.shape}")
    if np.any(weights <= 0):
        raise ValueError("weights must be strictly positive")
    u0 = None if z0 is None else np.asarray(z0, dtype=float) * weights
    sol = basis_pursuit(a / weights, y, settings, z0=u0)
    z = sol.z / weights
    resid_vec = a @ z - y
    return L1Solution(z, sol.converged, sol.iterations, float(np.sqrt(resid_vec @ resid_vec)))


def reweighted_l1(
    a: np.ndarray,
    y: np.ndarray,
    settings: SolverSettings = SolverSettings(),
) -> L1Solution:
    """Iteratively reweighted l1: the first round uses unit weights (plain
    basis pursuit) and each later round reweights by ``1 / (|z| + eps)``
    using the previous round's solution.  Returns the last round's solution;
    a non-converged round marks the result non-converged."""
    rounds = settings.reweight_rounds
    loose = settings if settings.inner_tol is None else replace(
        settings, primal_tol=settings.inner_tol, dual_tol=settings.inner_tol
    )
    z = None
    iterations = 0
    converged = True
    sol = None
    for r in range(rounds):
        current = settings if r == rounds - 1 else loose
        if r == 0:
            weights = np.ones(a.shape[1])
        else:
            weights = 1.0 / (np.abs(z) + settings.reweight_eps)
        sol = weighted_l1(a, y, weights, current, z0=z)
        z = sol.z
        iterations += sol.iterations
        converged = converged and sol.converged
    return L1Solution(z, converged, iterations, sol.residual)


def approx_l0(z: np.ndarray, zero_tol: float) -> int:
    """Number of entries with magnitude at least ``zero_tol``."""
    if zero_tol <= 0:
        raise ValueError("zero threshold must be positive")
    return int(np.sum(np.abs(np.asarray(z)) >= zero_tol))


def solve_block_diagonal(
    matrices: Sequence[np.ndarray], y: np.ndarray, settings: SolverSettings
) -> L1Solution:
    """Reweighted l1 on a block-diagonal operator, solved per sensor.

    The block-diagonal problem decouples exactly (objective and constraints
    are sums over blocks), so solving each sensor separately and
    concatenating yields the joint solution at a fraction of the cost.
    """
    parts = []
    converged = True
    iterations = 0
    residual_sq = 0.0
    row = 0
    for phi in matrices:
        m = phi.shape[0]
        sol = reweighted_l1(phi, y[row : row + m], settings)
        parts.append(sol.z)
        converged = converged and sol.converged
        iterations += sol.iterations
        residual_sq += sol.residual**2
        row += m
    return L1Solution(np.concatenate(parts), converged, iterations, float(np.sqrt(residual_sq)))
