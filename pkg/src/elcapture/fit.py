"""Maximum empirical-likelihood estimation of abundance.

The profile empirical log-likelihood is maximized by nested layers. The
innermost layer resolves the EL weights; at the middle-layer optimum the
multiplier attached to cell k has the closed form -c_k / (m gamma_k)
(c_k the cell's likelihood count), which turns the weights into
p_i = 1 / (nu - sum_k c_k b_k(Z_i) / gamma_k) and reduces the whole alpha
block to a small fixed-point system gamma_k = sum_i p_i b_k(Z_i). That
system's Jacobian is the identity plus a positive matrix, so damped Newton
solves it globally; weight positivity is kept by the line search. The
middle layer is then a Newton search over beta alone, and the outer layer
is a scalar search over nu on the log(nu - n + 1) scale, refined by a
stationarity polish.

Direct quasi-Newton over (alpha, beta), with the multiplier solved at
arbitrary alpha, is numerically fragile here: the feasible alpha set is the
convex hull of cell-probability vectors along a low-dimensional covariate
curve, a razor-thin body that box-constrained line searches fall out of.
The profiled form above maximizes the same likelihood on that set exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import digamma, expit
from scipy.stats import chi2

from .el import ELWeights, binomial_loglik, el_weights, log_nu_binom
from .model import CaptureDataset, DataError, summarize

_BIG = 1e12


class FitError(RuntimeError):
    """Raised when the nested optimization cannot produce a usable fit."""


@dataclass(frozen=True)
class FitOptions:
    """Solver settings; the defaults are the ones the test suite pins."""

    nu_cap_factor: float = 1e4
    inner_tol: float = 1e-10
    inner_max_iter: int = 100
    middle_grad_tol: float = 1e-8
    middle_max_iter: int = 500
    outer_xatol: float = 1e-8
    n_restarts: int = 5
    restart_seed: int = 7
    beta_bound: float = 200.0


@dataclass
class FitResult:
    """Maximum empirical-likelihood estimate with diagnostics."""

    nu_hat: float
    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    loglik_max: float
    lambda_hat: np.ndarray
    weights: ELWeights
    mask: np.ndarray
    converged_inner: bool
    converged_middle: bool
    converged_outer: bool
    middle_iterations: int
    outer_iterations: int
    grad_norm: float
    nu_capped: bool
    family_name: str
    n: int
    m: int

    @property
    def nu_hat_rounded(self) -> int:
        return int(round(self.nu_hat))


@dataclass
class IntervalResult:
    """EL-ratio confidence interval for the abundance."""

    level: float
    lower: float
    upper: float
    upper_capped: bool
    nu_hat: float
    trace: list = field(default_factory=list)


@dataclass
class _MiddleSolution:
    ok: bool
    value: float
    beta_std: np.ndarray
    gamma_active: np.ndarray
    weights: np.ndarray
    grad_norm: float
    iterations: int


class MELEFitter:
    """Shared state for all likelihood evaluations on one dataset.

    Instances hold read-only data plus warm-start caches, so one fitter per
    dataset serves the point fit, profile ratios, the interval search and
    coefficient tests.
    """

    def __init__(self, dataset: CaptureDataset, family, options: FitOptions | None = None):
        if family.k != dataset.k:
            raise DataError("family and dataset disagree on the number of occasions")
        if family.requires_x() and dataset.x is None:
            raise DataError("extended family requires x for every individual")
        if dataset.m == 0:
            raise DataError("no complete cases: beta is unidentifiable")
        if dataset.m < dataset.p:
            raise DataError(
                f"m = {dataset.m} complete cases cannot identify {dataset.p} coefficients"
            )
        self.dataset = dataset
        self.family = family
        self.options = options or FitOptions()

        self.counts = summarize(dataset, family)
        self.mask = self.counts.mask
        self.full_active = bool(self.mask.all())
        self.active_idx = np.nonzero(self.mask)[0]
        self.n_active = self.active_idx.size

        self.k = family.k
        self.n = dataset.n
        self.m = dataset.m
        self.p = dataset.p
        self.d_c = dataset.d_complete.astype(float)
        self.x_c = dataset.x_complete if family.requires_x() else None
        if family.requires_x():
            self._check_x_levels()

        # Standardize non-intercept covariates for optimizer conditioning;
        # the likelihood is invariant under this reparameterization.
        zc = dataset.z
        self._mu = np.zeros(self.p)
        self._sd = np.ones(self.p)
        if self.p > 1:
            self._mu[1:] = zc[:, 1:].mean(axis=0)
            sd = zc[:, 1:].std(axis=0)
            self._sd[1:] = np.where(sd > 0, sd, 1.0)
        self.z_std = zc.copy()
        if self.p > 1:
            self.z_std[:, 1:] = (zc[:, 1:] - self._mu[1:]) / self._sd[1:]

        self._orders_active = family.cell_orders[self.active_idx]
        self._counts_active = self.counts.counts[self.active_idx].astype(float)
        self.nu_cap = self.n * self.options.nu_cap_factor
        self._beta0 = self._initial_beta()
        self._warm_beta: np.ndarray | None = None
        self._warm_gamma: np.ndarray | None = None
        self._fixed_beta: dict[int, float] = {}

    # ---- setup -----------------------------------------------------------

    def _check_x_levels(self):
        labels = np.asarray(self.family.cell_labels, dtype=object)[self.active_idx]
        for j in (0, 1):
            has_cells = any(isinstance(lab, tuple) and lab[0] == j for lab in labels)
            if has_cells and not np.any(self.x_c == j):
                raise FitError(
                    f"incomplete individuals exist at x = {j} but no complete case "
                    "carries that level; the missing-covariate law there is unidentified"
                )

    def _initial_beta(self) -> np.ndarray:
        """Binomial regression of the complete capture counts on z (IRLS)."""
        z = self.z_std
        d = self.d_c
        beta = np.zeros(self.p)
        ll = binomial_loglik(d, z @ beta, self.k)
        for _ in range(40):
            g = expit(z @ beta)
            grad = z.T @ (d - self.k * g)
            w = self.k * g * (1.0 - g) + 1e-10
            hess = (z * w[:, None]).T @ z + 1e-10 * np.eye(self.p)
            try:
                step = np.linalg.solve(hess, grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(hess, grad, rcond=None)[0]
            t = 1.0
            cand = beta
            ll_new = ll
            for _ in range(30):
                trial = beta + t * step
                ll_trial = binomial_loglik(d, z @ trial, self.k)
                if ll_trial >= ll - 1e-12:
                    cand, ll_new = trial, ll_trial
                    break
                t *= 0.5
            if np.abs(cand - beta).max() < 1e-10:
                beta = cand
                break
            beta, ll = cand, ll_new
        bound = self.options.beta_bound
        return np.clip(beta, -bound, bound)

    # ---- inner layer: profiled alpha -------------------------------------

    def _basis_active(self, beta_std: np.ndarray) -> np.ndarray:
        return self.family.cell_basis(self.z_std, beta_std, self.x_c)[:, self.active_idx]

    def _cell_loads(self, nu: float) -> np.ndarray:
        c = self._counts_active.copy()
        c[0] = nu - self.n
        return c

    def _gamma_solve(self, nu: float, basis: np.ndarray, gamma0=None):
        """Solve gamma_k = sum_i p_i b_k(Z_i) with p_i = 1/(nu - s_i).

        Returns (gamma, p) or None when no interior solution is reached.
        The Jacobian of the residual is I plus a positive matrix, so Newton
        with a feasibility-aware backtracking line search is reliable.
        """
        c = self._cell_loads(nu)
        col_mean = basis.mean(axis=0)
        col_max = basis.max(axis=0)
        starts = []
        if gamma0 is not None and gamma0.shape[0] == self.n_active:
            starts.append(gamma0)
        safe = np.maximum(col_mean, 1e-12)
        with np.errstate(divide="ignore"):
            need = self.n_active * c * col_max / max(0.9 * nu, 1e-12)
        starts.append(np.maximum(safe, np.minimum(need, 20.0) + 1e-12))
        starts.append(np.maximum(safe, 1e-8))

        for gam in starts:
            gam = np.asarray(gam, dtype=float).copy()
            out = self._gamma_newton(gam, c, basis, nu)
            if out is not None:
                return out
        return None

    def _gamma_newton(self, gam, c, basis, nu, max_iter=60):
        bt = np.ascontiguousarray(basis.T)
        eye = np.eye(self.n_active)
        s = basis @ (c / gam)
        denom = nu - s
        if denom.min() <= 0 or not np.isfinite(denom).all():
            return None
        p = 1.0 / denom
        resid = gam - bt @ p
        rnorm0 = np.abs(resid).max()
        for it in range(max_iter):
            rnorm = np.abs(resid).max()
            if rnorm <= 1e-11:
                grange = gam.min() > 0.0 and gam.max() < 1.0
                return (gam, p) if grange else None
            if it == 4 and rnorm > 0.5 * rnorm0:
                # Barely moving: bail out cheaply so callers can try the
                # next start (or report infeasibility) without burning time.
                return None
            scale = c / (gam * gam)
            jac = eye + (bt @ (basis * (p * p)[:, None])) * scale[None, :]
            try:
                step = np.linalg.solve(jac, -resid)
            except np.linalg.LinAlgError:
                return None
            t = 1.0
            moved = False
            for _ in range(30):
                cand = gam + t * step
                if cand.min() > 0.0:
                    s = basis @ (c / cand)
                    denom = nu - s
                    if denom.min() > 0.0:
                        p_new = 1.0 / denom
                        resid_new = cand - bt @ p_new
                        if np.abs(resid_new).max() <= (1.0 - 1e-4 * t) * rnorm:
                            gam, p, resid = cand, p_new, resid_new
                            moved = True
                            break
                t *= 0.5
            if not moved:
                return None
        return None

    # ---- middle layer: Newton over beta -----------------------------------

    def _free_beta_idx(self) -> np.ndarray:
        return np.array([j for j in range(self.p) if j not in self._fixed_beta], dtype=int)

    def _expand_beta(self, free: np.ndarray) -> np.ndarray:
        beta = np.zeros(self.p)
        beta[self._free_beta_idx()] = free
        for j, val in self._fixed_beta.items():
            beta[j] = val
        return beta

    def _objective(self, free_beta: np.ndarray, nu: float):
        """Negative profiled log-likelihood in beta, with analytic gradient.

        Alpha and the EL weights are profiled out exactly through the
        fixed-point solve; the gradient in beta then needs no implicit
        terms (the profiled quantities are stationary).
        """
        beta_std = self._expand_beta(free_beta)
        if np.abs(beta_std).max() > self.options.beta_bound:
            return _BIG, np.zeros_like(free_beta)
        basis = self._basis_active(beta_std)
        out = self._gamma_solve(nu, basis, self._warm_gamma)
        if out is None:
            return _BIG, np.zeros_like(free_beta)
        gam, p = out
        self._warm_gamma = gam
        c = self._cell_loads(nu)
        eta = self.z_std @ beta_std
        g = expit(eta)
        value = (
            log_nu_binom(nu, self.n)
            + float(c @ np.log(gam))
            + float(np.log(p).sum())
            + self.m * np.log(self.m)
            + binomial_loglik(self.d_c, eta, self.k)
        )
        if not np.isfinite(value):
            return _BIG, np.zeros_like(free_beta)
        load = (basis * (self._orders_active[None, :] - self.k * g[:, None])) @ (c / gam)
        dbeta = self.z_std.T @ (self.d_c - self.k * g) + self.z_std.T @ (p * load)
        return -value, -dbeta[self._free_beta_idx()]

    def middle_solve(self, nu: float, use_warm: bool = True) -> _MiddleSolution:
        """Maximize the profile log-likelihood over (alpha, beta) at fixed nu."""
        starts: list[np.ndarray] = []
        if use_warm and self._warm_beta is not None:
            starts.append(self._warm_beta)
        free0 = self._beta0[self._free_beta_idx()]
        starts.append(free0)
        rng = np.random.default_rng(self.options.restart_seed)
        best = None
        for trial in range(len(starts) + self.options.n_restarts):
            theta0 = (starts[trial] if trial < len(starts)
                      else free0 + rng.normal(scale=0.5, size=free0.size))
            out = self._beta_newton(theta0, nu)
            if out is None:
                continue
            if best is None or out[0] > best[0]:
                best = out
            if best[2] <= max(self.options.middle_grad_tol * 10.0, 1e-7):
                break
        if best is None:
            return _MiddleSolution(False, -np.inf, np.zeros(self.p),
                                   np.zeros(self.n_active), np.zeros(self.m),
                                   np.inf, 0)
        value, free, gnorm, nit = best
        beta_std = self._expand_beta(free)
        basis = self._basis_active(beta_std)
        out = self._gamma_solve(nu, basis, self._warm_gamma)
        if out is None:
            return _MiddleSolution(False, -np.inf, np.zeros(self.p),
                                   np.zeros(self.n_active), np.zeros(self.m),
                                   np.inf, 0)
        gam, p = out
        self._warm_beta = free
        self._warm_gamma = gam
        return _MiddleSolution(True, float(value), beta_std, gam, p,
                               float(gnorm), int(nit))

    def _beta_newton(self, free0: np.ndarray, nu: float):
        """Damped Newton over beta with a finite-differenced Hessian of the
        analytic gradient; returns (value, beta_free, grad_norm, steps)."""
        f, g = self._objective(free0, nu)
        if not np.isfinite(f) or f >= _BIG / 2:
            return None
        theta = free0.copy()
        target = self.options.middle_grad_tol
        gnorm = float(np.abs(g).max())
        nit = 0
        stalls = 0
        for _ in range(self.options.middle_max_iter):
            if gnorm <= target:
                break
            hess = self._fd_hessian(theta, g, nu)
            step = None
            if hess is not None:
                ridge = 0.0
                scale = 1.0 + float(np.abs(np.diag(hess)).max())
                for _ in range(8):
                    try:
                        cand = np.linalg.solve(hess + ridge * np.eye(theta.size), -g)
                    except np.linalg.LinAlgError:
                        cand = None
                    if cand is not None and float(g @ cand) < 0:
                        step = cand
                        break
                    ridge = max(ridge * 10.0, 1e-8 * scale)
            if step is None:
                step = -g
            t = 1.0
            moved = False
            for _ in range(25):
                ft, gt = self._objective(theta + t * step, nu)
                if np.isfinite(ft) and ft < f:
                    theta, f, g = theta + t * step, ft, gt
                    moved = True
                    break
                t *= 0.5
            if not moved:
                break
            nit += 1
            new_gnorm = float(np.abs(g).max())
            stalls = stalls + 1 if new_gnorm > 0.7 * gnorm else 0
            gnorm = new_gnorm
            if stalls >= 3:
                break
        return -f, theta, gnorm, nit

    def _fd_hessian(self, theta: np.ndarray, g0: np.ndarray, nu: float):
        q = theta.size
        hess = np.empty((q, q))
        for j in range(q):
            h = 1e-6 * (1.0 + abs(theta[j]))
            tp = theta.copy()
            tp[j] += h
            fp, gp = self._objective(tp, nu)
            if not np.isfinite(fp) or fp >= _BIG / 2:
                tp[j] = theta[j] - h
                fp, gp = self._objective(tp, nu)
                if not np.isfinite(fp) or fp >= _BIG / 2:
                    return None
                hess[:, j] = (g0 - gp) / h
            else:
                hess[:, j] = (gp - g0) / h
        return (hess + hess.T) / 2.0

    # ---- outer layer -------------------------------------------------------

    def profile_value(self, nu: float) -> float:
        return self.middle_solve(nu).value

    def fit(self) -> FitResult:
        """Run the full nested maximization and assemble the result."""
        evals = {"count": 0}

        def neg_profile(t):
            evals["count"] += 1
            v = self.middle_solve(self.n - 1.0 + np.exp(t)).value
            return -v if np.isfinite(v) else 1e15

        # Search on an expanding bracket: far beyond the data's reach the
        # profile is flat-to-infeasible, so probing the full cap range up
        # front wastes middle solves on hopeless abundance values.
        cap = min(50.0 * self.n, self.nu_cap)
        while True:
            t_hi = np.log(cap - self.n + 1.0)
            res = minimize_scalar(neg_profile, bounds=(0.0, t_hi), method="bounded",
                                  options={"xatol": self.options.outer_xatol,
                                           "maxiter": 200})
            nu_hat = self.n - 1.0 + float(np.exp(res.x))
            if nu_hat < 0.9 * cap or cap >= self.nu_cap:
                break
            cap = min(cap * 100.0, self.nu_cap)
        best_value = -float(res.fun)
        value_at_n = self.middle_solve(float(self.n)).value
        if value_at_n >= best_value:
            nu_hat, best_value = float(self.n), value_at_n
        nu_hat = self._polish_nu(nu_hat)

        final = self.middle_solve(nu_hat, use_warm=True)
        cold = self.middle_solve(nu_hat, use_warm=False)
        if cold.ok and cold.value > final.value:
            final = cold
        if not final.ok:
            raise FitError("middle-layer optimization failed at the outer optimum")

        capped = nu_hat >= self.nu_cap * (1.0 - 1e-9)
        alpha_hat = np.full(self.family.n_cells, np.nan)
        alpha_hat[self.active_idx] = final.gamma_active
        lam = self._lambda_active(nu_hat, final.gamma_active)
        return FitResult(
            nu_hat=float(nu_hat),
            alpha_hat=alpha_hat,
            beta_hat=self._beta_to_raw(final.beta_std),
            loglik_max=float(final.value),
            lambda_hat=lam,
            weights=ELWeights(p=final.weights.copy()),
            mask=self.mask.copy(),
            converged_inner=True,
            converged_middle=final.grad_norm <= max(self.options.middle_grad_tol * 100, 1e-5),
            converged_outer=bool(res.success) and not capped,
            middle_iterations=final.iterations,
            outer_iterations=evals["count"],
            grad_norm=final.grad_norm,
            nu_capped=bool(capped),
            family_name=self.family.name,
            n=self.n,
            m=self.m,
        )

    def _lambda_active(self, nu: float, gamma_active: np.ndarray) -> np.ndarray:
        """Multiplier for the active system implied by the profiled optimum.

        With every cell active the multiplier is unique only up to the
        all-ones direction; the representative with a zero cell-0 component
        is reported (it solves the system with the redundant cell-0
        constraint dropped).
        """
        c = self._cell_loads(nu)
        lam = -c / (self.m * gamma_active)
        if self.full_active:
            lam = lam - lam[0]
        return lam

    def _polish_nu(self, nu_hat: float) -> float:
        """Refine the outer maximizer by solving the stationarity equation.

        At the middle-layer optimum the total nu-derivative of the profile
        reduces to psi(nu + 1) - psi(nu - n + 1) + log gamma0(nu); its root
        pins nu far more precisely than the scalar search alone.
        """
        n = self.n

        def slope(nu):
            sol = self.middle_solve(nu)
            if not sol.ok:
                return np.nan
            return (digamma(nu + 1.0) - digamma(nu - n + 1.0)
                    + np.log(sol.gamma_active[0]))

        s_at_n = slope(float(n))
        if not np.isfinite(s_at_n) or s_at_n <= 0:
            return float(n)
        if nu_hat <= n + 1e-9:
            nu_hat = n + 1e-6
        span = max(0.05 * (nu_hat - n), 1e-3)
        lo = max(float(n), nu_hat - span)
        hi = min(self.nu_cap, nu_hat + span)
        for _ in range(40):
            s_lo, s_hi = slope(lo), slope(hi)
            if not (np.isfinite(s_lo) and np.isfinite(s_hi)):
                return nu_hat
            if s_lo > 0 and s_hi < 0:
                try:
                    return brentq(slope, lo, hi, xtol=1e-9 * (1.0 + nu_hat),
                                  rtol=8.9e-16, maxiter=100)
                except (ValueError, RuntimeError):
                    return nu_hat
            if s_lo <= 0:
                lo = max(float(n), lo - (hi - lo))
            if s_hi >= 0:
                hi = min(self.nu_cap, hi + (hi - lo))
                if hi >= self.nu_cap and slope(self.nu_cap) >= 0:
                    return self.nu_cap
        return nu_hat

    # ---- statistics built on the profile ------------------------------------

    def ratio_profile(self, nu: float, fit: FitResult) -> float:
        if nu < self.n:
            raise DataError(f"nu = {nu} is below the number captured n = {self.n}")
        sol = self.middle_solve(float(nu))
        if not sol.ok:
            return np.inf
        return 2.0 * (fit.loglik_max - sol.value)

    def confidence_interval(self, level: float, fit: FitResult) -> IntervalResult:
        if not (0.0 < level < 1.0):
            raise DataError("confidence level must lie in (0, 1)")
        threshold = float(chi2.ppf(level, df=1))
        trace: list = []

        def rprime(nu):
            r = self.ratio_profile(nu, fit)
            trace.append((float(nu), float(r)))
            return r

        nu_hat = fit.nu_hat
        n = float(self.n)
        r_at_n = rprime(n)
        if r_at_n <= threshold:
            lower = n
        elif rprime(nu_hat) >= threshold:
            # Threshold below the solver floor at the optimum (levels near
            # zero); the interval collapses onto the point estimate.
            lower = nu_hat
        else:
            lower = brentq(lambda v: rprime(v) - threshold, n, nu_hat,
                           xtol=1e-7 * (1.0 + nu_hat), rtol=8.9e-16, maxiter=200)

        width = max(nu_hat - n, 1.0)
        upper = np.inf
        capped = False
        hi = nu_hat
        if rprime(nu_hat) >= threshold:
            upper = nu_hat
        else:
            for j in range(200):
                probe = min(nu_hat + width * 2.0 ** j, self.nu_cap)
                if rprime(probe) > threshold:
                    upper = brentq(lambda v: rprime(v) - threshold, hi, probe,
                                   xtol=1e-7 * (1.0 + probe), rtol=8.9e-16,
                                   maxiter=200)
                    break
                hi = probe
                if probe >= self.nu_cap:
                    capped = True
                    break
        return IntervalResult(level=level, lower=float(lower), upper=float(upper),
                              upper_capped=capped, nu_hat=nu_hat, trace=trace)

    def lrt_coefficient(self, coef_index: int, fit: FitResult | None = None):
        """EL-ratio statistic and p-value for beta[coef_index] = 0."""
        if not (1 <= coef_index < self.p):
            raise DataError("coef_index must name a non-intercept coefficient")
        if fit is None:
            fit = self.fit()
        constrained = MELEFitter(self.dataset, self.family, self.options)
        constrained._fixed_beta = {coef_index: 0.0}
        constrained._beta0 = self._beta0.copy()
        constrained._beta0[coef_index] = 0.0
        con_fit = constrained.fit()
        stat = 2.0 * (fit.loglik_max - con_fit.loglik_max)
        return float(stat), float(chi2.sf(max(stat, 0.0), df=1))

    # ---- helpers --------------------------------------------------------------

    def _beta_to_raw(self, beta_std: np.ndarray) -> np.ndarray:
        beta = beta_std / self._sd
        beta[0] = beta_std[0] - float((beta_std[1:] * self._mu[1:] / self._sd[1:]).sum())
        return beta


def fit_mele(dataset: CaptureDataset, family, options: FitOptions | None = None) -> FitResult:
    """Maximum empirical-likelihood estimate of (nu, alpha, beta)."""
    return MELEFitter(dataset, family, options).fit()


def fit_complete_case(dataset: CaptureDataset, family,
                      options: FitOptions | None = None) -> FitResult:
    """Baseline fit that discards every incomplete record before estimating.

    Inconsistent under covariate missingness; kept as the cautionary
    comparison estimator.
    """
    return fit_mele(dataset.complete_case(), family, options)


def ratio_full(nu, alpha, beta, fit: FitResult, dataset: CaptureDataset, family) -> float:
    """EL ratio 2{l(max) - l(nu, alpha, beta)} at a fully specified point."""
    from .el import profile_loglik

    value = profile_loglik(nu, alpha, beta, dataset, family)
    return 2.0 * (fit.loglik_max - value)


def ratio_profile(nu, dataset: CaptureDataset, family,
                  fit: FitResult | None = None,
                  options: FitOptions | None = None) -> float:
    """EL ratio 2{l(max) - max_(alpha,beta) l(nu, alpha, beta)}."""
    fitter = MELEFitter(dataset, family, options)
    if fit is None:
        fit = fitter.fit()
    return fitter.ratio_profile(nu, fit)


def confidence_interval(dataset: CaptureDataset, family, level: float,
                        fit: FitResult | None = None,
                        options: FitOptions | None = None) -> IntervalResult:
    """EL-ratio interval {nu : R'(nu) <= chi2_1(level)}.

    The lower limit never falls below n because the ratio's domain starts
    there; the upper limit is bracketed by doubling nu_hat - n and reported
    as capped when the search cap is exhausted.
    """
    fitter = MELEFitter(dataset, family, options)
    if fit is None:
        fit = fitter.fit()
    return fitter.confidence_interval(level, fit)


def lrt_coefficient(dataset: CaptureDataset, family, coef_index: int,
                    options: FitOptions | None = None):
    """EL-ratio test of a single capture-model coefficient being zero."""
    fitter = MELEFitter(dataset, family, options)
    return fitter.lrt_coefficient(coef_index)
