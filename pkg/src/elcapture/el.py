"""Inner empirical-likelihood machinery.

Solves the Lagrange-multiplier equation for the EL weights at a fixed
(alpha, beta), and evaluates the profile empirical log-likelihood of
(nu, alpha, beta) for either model family.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, log_expit

from .model import CaptureDataset, DataError, summarize

_FEAS_MARGIN = 1e-12
_SIMPLEX_TOL = 1e-8


@dataclass
class LambdaSolution:
    """Multiplier for the active constraints plus convergence diagnostics."""

    lam: np.ndarray
    converged: bool
    iterations: int
    max_residual: float


@dataclass
class ELWeights:
    """Empirical-likelihood weights on the complete covariate points."""

    p: np.ndarray


def solve_lambda(u_matrix, tol: float = 1e-10, max_iter: int = 100) -> LambdaSolution:
    """Solve sum_i U_i / (1 + lam'U_i) = 0 over the feasible region.

    The solution maximizes the strictly concave dual sum_i log(1 + lam'U_i)
    on {lam : 1 + lam'U_i > 0 for all i}; we run damped Newton from lam = 0
    (always feasible), halving the step until it is feasible and the dual
    does not decrease. Convergence is declared on the infinity norm of the
    equation's left side.

    A zero multiplier with ``converged=False`` is returned when the dual is
    unbounded (the origin lies outside the convex hull of the rows); plain
    iteration exhaustion also reports ``converged=False`` so outer solvers
    can reject the trial point.
    """
    u = np.atleast_2d(np.asarray(u_matrix, dtype=float))
    m, q = u.shape
    if m < 1 or q < 1:
        raise DataError("U matrix must have at least one row and one column")
    if not np.isfinite(u).all():
        raise DataError("U rows must be finite")
    return _newton_dual(u, np.zeros(q), tol, max_iter)


def _newton_dual(u: np.ndarray, lam0: np.ndarray, tol: float,
                 max_iter: int) -> LambdaSolution:
    """Damped Newton on the dual from a feasible starting multiplier."""
    q = u.shape[1]
    lam = lam0
    denom = 1.0 + u @ lam
    for it in range(max_iter):
        w = 1.0 / denom
        grad = u.T @ w
        resid = np.abs(grad).max()
        if resid <= tol:
            return LambdaSolution(lam, True, it, float(resid))
        hess = (u * (w * w)[:, None]).T @ u
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        if not np.isfinite(step).all():
            return LambdaSolution(np.zeros(q), False, it, float(resid))

        dual0 = np.log(denom).sum()
        t = 1.0
        for _ in range(60):
            cand = lam + t * step
            cand_denom = 1.0 + u @ cand
            if cand_denom.min() > _FEAS_MARGIN:
                if np.log(cand_denom).sum() >= dual0 - 1e-12:
                    break
            t *= 0.5
        else:
            # No feasible non-decreasing step: treat as a hull failure.
            return LambdaSolution(np.zeros(q), False, it, float(resid))
        lam = cand
        denom = cand_denom
        if np.abs(lam).max() > 1e8:
            # Diverging multiplier: dual unbounded, 0 outside the hull.
            return LambdaSolution(np.zeros(q), False, it, float(resid))

    grad = u.T @ (1.0 / denom)
    resid = float(np.abs(grad).max())
    return LambdaSolution(lam, resid <= tol, max_iter, resid)


def el_weights(lam, u_matrix) -> ELWeights:
    """Weights p_i = (1/m) / (1 + lam'U_i) for a feasible multiplier."""
    u = np.atleast_2d(np.asarray(u_matrix, dtype=float))
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    denom = 1.0 + u @ lam
    if denom.min() <= 0.0:
        raise DataError("infeasible multiplier: nonpositive weight denominator")
    return ELWeights(p=1.0 / (u.shape[0] * denom))


def log_nu_binom(nu: float, n: int) -> float:
    """log C(nu, n) for real nu >= n, via log-gamma."""
    return float(gammaln(nu + 1.0) - gammaln(n + 1.0) - gammaln(nu - n + 1.0))


def binomial_loglik(d: np.ndarray, eta: np.ndarray, k: int) -> float:
    """sum_i d_i log g_i + (k - d_i) log(1 - g_i) on the linear-predictor scale."""
    return float(np.sum(d * log_expit(eta) + (k - d) * log_expit(-eta)))


def active_system(basis: np.ndarray, alpha: np.ndarray, mask: np.ndarray):
    """Constraint matrix actually handed to the multiplier solver.

    When every cell is active the components sum to 1 - sum(alpha) at any
    covariate point, so the system is consistent only on the simplex and
    carries one redundant row there; cell 0 is dropped from the solve and
    its multiplier is fixed at zero. Returns (U_solver, solver_cols) where
    ``solver_cols`` indexes the solver columns within the active set.

    Returns None when every cell is active but alpha is off the simplex
    (no multiplier exists).
    """
    mask = np.asarray(mask, dtype=bool)
    active_idx = np.nonzero(mask)[0]
    if mask.all():
        if abs(alpha.sum() - 1.0) > _SIMPLEX_TOL:
            return None
        solver_cols = np.arange(1, len(active_idx))
    else:
        solver_cols = np.arange(len(active_idx))
    u_active = basis[:, active_idx] - alpha[active_idx]
    return u_active[:, solver_cols], solver_cols


def profile_loglik(nu, alpha, beta, dataset: CaptureDataset, family,
                   mask=None, tol: float = 1e-10, max_iter: int = 100) -> float:
    """Profile empirical log-likelihood of (nu, alpha, beta).

    Cells dropped by ``mask`` contribute nothing and their constraints are
    excluded. Returns -inf when no multiplier exists at (alpha, beta), so
    outer optimizers can treat such points as infeasible instead of
    handling exceptions.

    ``nu`` is real-valued (the binomial coefficient is evaluated through
    log-gamma); ``alpha`` is the full cell-probability vector, with entries
    at dropped cells ignored.
    """
    nu = float(nu)
    n = dataset.n
    m = dataset.m
    if m == 0:
        raise DataError("no complete cases: beta is unidentifiable")
    if nu < n:
        raise DataError(f"nu = {nu} is below the number captured n = {n}")
    counts = summarize(dataset, family)
    if mask is None:
        mask = counts.mask
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[0] != family.n_cells or not mask[0]:
            raise DataError("mask must cover every cell and keep cell 0 active")
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape[0] != family.n_cells:
        raise DataError("alpha length does not match the family's cell count")
    act = alpha[mask]
    if np.any(~np.isfinite(act)) or np.any(act <= 0.0) or np.any(act >= 1.0):
        raise DataError("active alpha components must lie strictly in (0, 1)")

    x_c = dataset.x_complete if family.requires_x() else None
    basis = family.cell_basis(dataset.z, np.asarray(beta, dtype=float), x_c)
    system = active_system(basis, alpha, mask)
    if system is None:
        return -np.inf
    u_solver, _ = system
    sol = solve_lambda(u_solver, tol=tol, max_iter=max_iter)
    if not sol.converged:
        return -np.inf

    eta = dataset.z @ np.asarray(beta, dtype=float)
    cell_counts = counts.counts.astype(float)
    cell_counts[0] = nu - n
    active_counts = cell_counts[mask]
    value = (
        log_nu_binom(nu, n)
        + float(active_counts @ np.log(alpha[mask]))
        - float(np.log1p(u_solver @ sol.lam).sum())
        + binomial_loglik(dataset.d_complete, eta, family.k)
    )
    return value
