"""Plug-in estimation of the asymptotic covariance of the MELE.

The target matrix couples the abundance, cell-probability and coefficient
blocks through Schur-style corrections in the constraint block. Population
expectations are replaced by EL-weighted averages over the complete
covariate points (the EL weights estimate the covariate law consistently
under missingness at random; raw sample means do not), selection
probabilities by cell proportions, and all derivatives are analytic in the
logistic model.

When every cell is active the fitted cell probabilities sum to one, the
constraint components sum to zero at every covariate point, and the
constraint-block second moment is exactly singular; the correction is then
computed on the system with the redundant cell-0 constraint dropped, and
the log-abundance variance is read off the information of the
simplex-reduced parameterization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit
from scipy.stats import norm

from .fit import FitResult
from .model import CaptureDataset, DataError, summarize

_COND_WARN = 1e10


class ConditioningError(RuntimeError):
    """Raised when the covariance assembly is numerically meaningless."""


@dataclass
class SelectionEstimate:
    """Cell proportions of complete records; nan where no cell data exist."""

    values: np.ndarray
    defined: np.ndarray

    def filled(self) -> np.ndarray:
        return np.where(self.defined, self.values, 0.0)


def estimate_h(dataset: CaptureDataset, family) -> SelectionEstimate:
    """Selection probabilities by capture count (and x-level when present).

    Base family: values[k-1] estimates the chance a covariate is observed
    given k captures. Extended family: values[j, k-1] conditions also on
    the always-observed level j. Cells with no individuals are flagged and
    excluded from downstream sums instead of raising.
    """
    k = family.k
    d = dataset.d
    r = dataset.r
    if family.requires_x():
        if dataset.x is None:
            raise DataError("extended family requires x for every individual")
        values = np.full((2, k), np.nan)
        defined = np.zeros((2, k), dtype=bool)
        for j in (0, 1):
            for kk in range(1, k + 1):
                sel = (dataset.x == j) & (d == kk)
                tot = int(sel.sum())
                if tot > 0:
                    values[j, kk - 1] = r[sel].mean()
                    defined[j, kk - 1] = True
        return SelectionEstimate(values, defined)
    values = np.full(k, np.nan)
    defined = np.zeros(k, dtype=bool)
    for kk in range(1, k + 1):
        sel = d == kk
        tot = int(sel.sum())
        if tot > 0:
            values[kk - 1] = r[sel].mean()
            defined[kk - 1] = True
    return SelectionEstimate(values, defined)


@dataclass
class WBlocks:
    """Assembled covariance pieces for one fit.

    ``w`` is the (1 + active cells + p) information-style matrix; its
    leading entry after inversion estimates the variance of
    sqrt(nu0) * log(nu_hat / nu0). ``var_log_nu`` applies the
    simplex reduction when every cell is active.
    """

    w: np.ndarray
    v11: float
    v12: np.ndarray
    v22: np.ndarray
    v23: np.ndarray
    v24: np.ndarray
    v33: np.ndarray
    v34: np.ndarray
    v44: np.ndarray
    h: SelectionEstimate
    lambda00: float
    h1: np.ndarray
    h2: np.ndarray
    condition_number: float
    ill_conditioned: bool
    var_log_nu: float
    full_active: bool

    def w_inverse(self) -> np.ndarray:
        if self.ill_conditioned:
            return np.linalg.pinv(self.w)
        return np.linalg.inv(self.w)


def _pi_pieces(pmf, hmat, g, k, z):
    """Per-row capture-and-complete probability and its beta-derivative
    factors: pi_i, and the scalars f1_i, f2_i with
    dpi_i = f1_i z_i and d2pi_i = f2_i z_i z_i'."""
    ks = np.arange(1, k + 1)
    body = pmf[:, 1:] * hmat
    pi = body.sum(axis=1)
    centered = ks[None, :] - k * g[:, None]
    f1 = (body * centered).sum(axis=1)
    f2 = (body * (centered ** 2 - (k * g * (1.0 - g))[:, None])).sum(axis=1)
    return pi, f1, f2


def estimate_w(fit: FitResult, dataset: CaptureDataset, family) -> WBlocks:
    """Plug-in covariance blocks at the fitted parameters.

    Raises ConditioningError when some complete record's estimated
    capture-and-complete probability collapses to zero, and flags (instead
    of failing) an assembled matrix with condition number above 1e10.
    """
    from .model import _binom_pmf_matrix

    counts = summarize(dataset, family)
    mask = counts.mask
    if not np.array_equal(mask, fit.mask):
        raise DataError("fit and dataset disagree on the active cells")
    active_idx = np.nonzero(mask)[0]
    q = active_idx.size
    full_active = bool(mask.all())
    k = family.k
    p = dataset.p
    z = dataset.z
    m = dataset.m
    x_c = dataset.x_complete if family.requires_x() else None

    beta = np.asarray(fit.beta_hat, dtype=float)
    eta = z @ beta
    g = expit(eta)
    pmf = _binom_pmf_matrix(eta, k)
    weights = fit.weights.p

    hsel = estimate_h(dataset, family)
    hfill = hsel.filled()
    if family.requires_x():
        hmat = hfill[x_c, :]
    else:
        hmat = np.broadcast_to(hfill, (m, k))
    pi, f1, f2 = _pi_pieces(pmf, hmat, g, k, z)
    if pi.min() < 1e-12:
        raise ConditioningError(
            "estimated capture-and-complete probability vanished at a record"
        )

    basis = family.cell_basis(z, beta, x_c)
    alpha_plug = basis.T @ weights
    alpha_tilde = np.where(mask & ~np.isnan(fit.alpha_hat), fit.alpha_hat, alpha_plug)
    gamma0 = float(alpha_tilde[0])

    if family.requires_x():
        gam_cells = alpha_tilde[1:].reshape(2, k)
        lam00 = -1.0 / float((hfill * gam_cells).sum())
    else:
        lam00 = -1.0 / float(hfill @ alpha_tilde[1:])

    hs_active = []
    for idx in active_idx[1:]:
        lab = family.cell_labels[idx]
        if isinstance(lab, tuple):
            hs_active.append(hfill[lab[0], lab[1] - 1])
        else:
            hs_active.append(hfill[lab - 1])
    hs_active = np.asarray(hs_active)
    h1 = np.concatenate(([1.0], 1.0 - hs_active))
    h2 = np.diag(np.concatenate(([1.0 / gamma0],
                                 (1.0 - hs_active) / alpha_tilde[active_idx[1:]])))

    u_act = basis[:, active_idx] - alpha_tilde[active_idx]
    orders_act = family.cell_orders[active_idx]

    wp = weights / pi
    e_inv_pi = float(weights @ (1.0 / pi))
    e_dpi_pi = z.T @ (wp * f1)
    e_u_pi = u_act.T @ wp
    e_uu_pi = u_act.T @ (u_act * wp[:, None])
    e_du = z.T @ (basis[:, active_idx]
                  * (orders_act[None, :] - k * g[:, None]) * weights[:, None])
    e_dpi_u = z.T @ (u_act * (wp * f1)[:, None])
    e_d2pi = (z * (weights * f2)[:, None]).T @ z
    e_dpidpi_pi = (z * (wp * f1 * f1)[:, None]).T @ z
    e_kg = (z * (weights * k * g * (1.0 - g) * pi)[:, None]).T @ z

    v11 = 1.0 / gamma0 - 1.0
    v12 = np.zeros(q)
    v12[0] = -1.0 / gamma0
    v22 = h2 - e_inv_pi * np.outer(h1, h1)
    v23 = (-np.outer(h1, e_dpi_pi))
    v33 = e_d2pi - e_dpidpi_pi + e_kg

    # Constraint block. Whenever the active basis columns cover the whole
    # cell partition (every cell active, or the missing cells' indicators
    # vanishing on the sample), the components sum to 1 - sum(alpha) at
    # every point and the cell-0 row is the exact negative sum of the
    # others; it is dropped before the correction.
    row_sums = basis[:, active_idx].sum(axis=1)
    degenerate = (np.abs(row_sums - 1.0).max() < 1e-10
                  and abs(alpha_tilde[active_idx].sum() - 1.0) < 1e-6)
    if degenerate:
        cons = np.arange(1, q)
    else:
        cons = np.arange(q)
    sel = np.zeros((cons.size, q))
    sel[np.arange(cons.size), cons] = 1.0
    v42 = (sel + np.outer(e_u_pi[cons], h1)) / lam00
    v34 = -(e_du[:, cons] - e_dpi_u[:, cons]) / lam00
    v44 = -e_uu_pi[np.ix_(cons, cons)] / (lam00 * lam00)

    try:
        corr = np.linalg.solve(v44, np.column_stack([v42, v34.T]))
    except np.linalg.LinAlgError:
        raise ConditioningError("constraint-block second moment is singular")
    corr_42 = corr[:, :q]
    corr_43 = corr[:, q:]
    v24 = v42.T

    # The corrections are symmetric in exact arithmetic; enforce that so
    # rounding in the solve does not leak into the assembled matrix.
    s22 = v24 @ corr_42
    s22 = (s22 + s22.T) / 2.0
    s33 = v34 @ corr_43
    s33 = (s33 + s33.T) / 2.0

    w = np.zeros((1 + q + p, 1 + q + p))
    w[0, 0] = v11
    w[0, 1:1 + q] = v12
    w[1:1 + q, 0] = v12
    w[1:1 + q, 1:1 + q] = v22 - s22
    w[1:1 + q, 1 + q:] = v23 - v24 @ corr_43
    w[1 + q:, 1:1 + q] = (v23 - v24 @ corr_43).T
    w[1 + q:, 1 + q:] = v33 - s33

    cond = float(np.linalg.cond(w))
    ill = not np.isfinite(cond) or cond > _COND_WARN

    if degenerate:
        t_alpha = np.vstack([-np.ones(q - 1), np.eye(q - 1)])
        t = np.zeros((1 + q + p, q + p))
        t[0, 0] = 1.0
        t[1:1 + q, 1:q] = t_alpha
        t[1 + q:, q:] = np.eye(p)
        j_red = t.T @ w @ t
        try:
            var = float(np.linalg.inv(j_red)[0, 0])
        except np.linalg.LinAlgError:
            ill = True
            var = float(np.linalg.pinv(j_red)[0, 0])
    else:
        winv = np.linalg.pinv(w) if ill else np.linalg.inv(w)
        var = float(winv[0, 0])

    return WBlocks(
        w=w, v11=v11, v12=v12, v22=v22, v23=v23, v24=v24, v33=v33, v34=v34,
        v44=v44, h=hsel, lambda00=lam00, h1=h1, h2=h2,
        condition_number=cond, ill_conditioned=ill,
        var_log_nu=var, full_active=degenerate,
    )


def wald_interval_lognu(fit: FitResult, wblocks: WBlocks, level: float):
    """Log-scale normal-theory interval for the abundance.

    A diagnostic companion to the EL-ratio interval: symmetric in log nu,
    always positive, but its lower limit may fall below the number
    captured (reported as-is; that behavior is the motivation for the
    ratio interval).
    """
    if not (0.0 < level < 1.0):
        raise DataError("confidence level must lie in (0, 1)")
    var = wblocks.var_log_nu
    if not np.isfinite(var) or var <= 0:
        raise ConditioningError("nonpositive variance estimate for log nu")
    zq = float(norm.ppf(0.5 + level / 2.0))
    half = zq * np.sqrt(var / fit.nu_hat)
    return float(fit.nu_hat * np.exp(-half)), float(fit.nu_hat * np.exp(half))
