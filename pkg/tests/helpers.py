"""Shared simulators and brute-force oracles for the test suite."""

import numpy as np
from scipy.optimize import minimize

from elcapture.model import CaptureDataset


def simulate_base(nu0, k, seed, beta=(-2.0, 1.0), missing=True):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 3, nu0)
    g = 1 / (1 + np.exp(-(beta[0] + beta[1] * y)))
    d = rng.binomial(k, g)
    keep = d >= 1
    y, d = y[keep], d[keep]
    if missing:
        h = 1 / (1 + np.exp(0.5 - 0.7 * d))
        r = rng.random(d.size) < h
    else:
        r = np.ones(d.size, dtype=bool)
    z = np.column_stack([np.ones(int(r.sum())), y[r]])
    return CaptureDataset(k=k, d=d, r=r, z=z, covariate_names=("y",))


def simulate_extended(nu0, k, seed, beta=(-2.0, 1.0, 1.0), missing=True):
    rng = np.random.default_rng(seed)
    x = (rng.random(nu0) < 0.3).astype(int)
    y = rng.uniform(0, 3, nu0)
    g = 1 / (1 + np.exp(-(beta[0] + beta[1] * x + beta[2] * y)))
    d = rng.binomial(k, g)
    keep = d >= 1
    x, y, d = x[keep], y[keep], d[keep]
    if missing:
        h = 1 / (1 + np.exp(0.5 - 0.7 * x - 0.7 * d))
        r = rng.random(d.size) < h
    else:
        r = np.ones(d.size, dtype=bool)
    z = np.column_stack([np.ones(int(r.sum())), x[r], y[r]])
    return CaptureDataset(k=k, d=d, r=r, z=z, x=x, covariate_names=("x", "y"))


def _dual_value(lam, u):
    denom = 1.0 + u @ np.atleast_1d(lam)
    if denom.min() <= 0:
        return -np.inf
    return float(np.log(denom).sum())

def _golden_max_1d(u, tol=1e-13):
    """Independent golden-section maximization of the scalar dual."""
    u = u.ravel()
    lo = -np.inf if u.max() <= 0 else -1.0 / u.max()
    hi = np.inf if u.min() >= 0 else -1.0 / u.min()
    lo = lo + 1e-10 if np.isfinite(lo) else -1e6
    hi = hi - 1e-10 if np.isfinite(hi) else 1e6
    phi = (np.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - phi * (b - a), a + phi * (b - a)
    fc, fd = _dual_value(c, u[:, None]), _dual_value(d, u[:, None])
    for _ in range(300):
        if b - a < tol * (1 + abs(a) + abs(b)):
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - phi * (b - a)
            fc = _dual_value(c, u[:, None])
        else:
            a, c, fc = c, d, fd
            d = a + phi * (b - a)
            fd = _dual_value(d, u[:, None])
    lam = (a + b) / 2
    return lam, _dual_value(lam, u[:, None])

def _brute_max_2d(u):
    """Grid scan plus Nelder-Mead polish, independent of the Newton path."""
    best = (0.0, np.zeros(2))
    for l0 in np.linspace(-3, 3, 41):
        for l1 in np.linspace(-3, 3, 41):
            lam = np.array([l0, l1])
            val = _dual_value(lam, u)
            if val > best[0]:
                best = (val, lam)
    res = minimize(lambda lam: -_dual_value(lam, u) if np.isfinite(_dual_value(lam, u)) else 1e9,
                   best[1], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return res.x, -res.fun
