import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq, minimize
from scipy.special import digamma, gammaln

from elcapture.el import (
    active_system,
    el_weights,
    log_nu_binom,
    profile_loglik,
    solve_lambda,
)
from elcapture.model import BaseFamily, CaptureDataset, DataError, summarize
from helpers import _brute_max_2d, _dual_value, _golden_max_1d


class TestSolveLambda:
    def test_symmetric_pair_gives_zero(self):
        sol = solve_lambda(np.array([[-0.1], [0.1]]))
        assert sol.converged
        assert sol.lam == pytest.approx([0.0], abs=1e-12)

    def test_two_point_closed_form(self):
        # -0.1 (1 + 0.3 lam) + 0.3 (1 - 0.1 lam) = 0  =>  lam = 10/3
        sol = solve_lambda(np.array([[-0.1], [0.3]]))
        assert sol.converged
        assert sol.lam == pytest.approx([10.0 / 3.0], rel=1e-9)
        w = el_weights(sol.lam, np.array([[-0.1], [0.3]]))
        assert w.p == pytest.approx([0.75, 0.25], rel=1e-9)
        assert float(w.p @ np.array([-0.1, 0.3])) == pytest.approx(0.0, abs=1e-10)

    def test_zero_column_means(self):
        rng = np.random.default_rng(3)
        u = rng.normal(size=(7, 2))
        u -= u.mean(axis=0)
        sol = solve_lambda(u)
        assert sol.converged
        assert sol.lam == pytest.approx([0.0, 0.0], abs=1e-9)

    def test_hull_failure_returns_zero_unconverged(self):
        u = np.array([[0.2], [0.5], [0.1]])  # all positive: 0 outside hull
        sol = solve_lambda(u)
        assert not sol.converged
        assert sol.lam == pytest.approx([0.0], abs=0)

    def test_single_row_forced_uniform(self):
        sol = solve_lambda(np.array([[0.4]]))
        assert not sol.converged
        w = el_weights(sol.lam, np.array([[0.4]]))
        assert w.p == pytest.approx([1.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(DataError):
            solve_lambda(np.array([[np.nan], [0.1]]))

    def test_monotone_in_tolerance(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            u = rng.normal(size=(6, 2))
            u -= u.mean(axis=0) * rng.uniform(0.4, 0.9)
            flags = [solve_lambda(u, tol=t).converged
                     for t in (1e-12, 1e-10, 1e-8, 1e-6)]
            # increasing tol never flips converged True -> False
            for a, b in zip(flags, flags[1:]):
                assert b >= a

    def test_matches_golden_section_1d(self):
        rng = np.random.default_rng(17)
        checked = 0
        for _ in range(40):
            m = rng.integers(3, 11)
            u = rng.normal(size=m)
            u -= u.mean() * rng.uniform(0.3, 0.9)
            sol = solve_lambda(u[:, None])
            if not sol.converged:
                continue
            lam_star, val_star = _golden_max_1d(u)
            assert _dual_value(sol.lam, u[:, None]) == pytest.approx(
                val_star, abs=1e-7)
            checked += 1
        assert checked >= 20

    @given(st.integers(0, 10_000))
    @settings(max_examples=30, deadline=None)
    def test_dual_concavity_along_segments(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(4, 10))
        u = rng.normal(size=(m, 2))
        u -= u.mean(axis=0) * 0.8
        sol = solve_lambda(u)
        if not sol.converged:
            return
        direction = rng.normal(size=2)
        ts = np.linspace(-0.2, 0.2, 9)
        vals = np.array([_dual_value(sol.lam + t * direction, u) for t in ts])
        if not np.isfinite(vals).all():
            return
        second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
        assert (second <= 1e-9).all()


class TestELWeights:
    def test_uniform_at_zero(self):
        u = np.arange(6, dtype=float).reshape(3, 2)
        w = el_weights(np.zeros(2), u)
        assert w.p == pytest.approx([1 / 3] * 3)

    def test_infeasible_multiplier_raises(self):
        with pytest.raises(DataError):
            el_weights(np.array([20.0]), np.array([[-0.1], [0.3]]))

    def test_invariants_on_random_instances(self):
        rng = np.random.default_rng(5)
        done = 0
        while done < 15:
            m = int(rng.integers(5, 30))
            u = rng.normal(size=(m, 3))
            u -= u.mean(axis=0) * rng.uniform(0.5, 1.0)
            sol = solve_lambda(u)
            if not sol.converged:
                continue
            w = el_weights(sol.lam, u)
            assert (w.p > 0).all()
            assert float(w.p.sum()) == pytest.approx(1.0, abs=1e-10)
            assert np.abs(u.T @ w.p).max() < 1e-8
            done += 1


def _simulate_base(nu0, k, seed, beta=(-2.0, 1.0)):
    rng = np.random.default_rng(seed)
    y = rng.uniform(0, 3, nu0)
    g = 1 / (1 + np.exp(-(beta[0] + beta[1] * y)))
    d = rng.binomial(k, g)
    keep = d >= 1
    y, d = y[keep], d[keep]
    h = 1 / (1 + np.exp(0.5 - 0.7 * d))
    r = rng.random(d.size) < h
    z = np.column_stack([np.ones(int(r.sum())), y[r]])
    return CaptureDataset(k=k, d=d, r=r, z=z)


class TestProfileLoglik:
    def test_nu_argmax_solves_digamma_equation(self):
        # at fixed (alpha, beta) only the two leading terms move with nu,
        # so the maximizer solves psi(nu+1) - psi(nu-n+1) = -log gamma0
        ds = _simulate_base(140, 2, 21)
        fam = BaseFamily(2)
        n = ds.n
        beta = np.array([-2.0, 1.0])
        # the equal-weight plug-in is always feasible for the multiplier
        alpha = fam.cell_basis(ds.z, beta).mean(axis=0)
        # direct scan over nu
        grid = np.linspace(n, 4 * n, 4001)
        vals = [profile_loglik(v, alpha, beta, ds, fam) for v in grid]
        nu_grid = grid[int(np.argmax(vals))]
        root = brentq(lambda v: digamma(v + 1) - digamma(v - n + 1) + np.log(alpha[0]),
                      n + 1e-9, 50 * n)
        assert nu_grid == pytest.approx(root, abs=grid[1] - grid[0])

    def test_digamma_root_scalar_oracle(self):
        # n=100, gamma0=0.5: root near n / (1 - gamma0) = 200
        root = brentq(lambda v: digamma(v + 1) - digamma(v - 100 + 1) + np.log(0.5),
                      100 + 1e-9, 1e5)
        assert root == pytest.approx(199.5, abs=0.2)
        assert root == pytest.approx(100 / 0.5, rel=5e-3)

    def test_nu_at_n_boundary(self):
        ds = _simulate_base(120, 2, 4)
        fam = BaseFamily(2)
        beta = np.array([-2.0, 1.0])
        alpha = fam.cell_basis(ds.z, beta).mean(axis=0)
        val = profile_loglik(float(ds.n), alpha, beta, ds, fam)
        # log C(n, n) = 0 and (nu - n) log gamma0 = 0: remove them by hand
        assert np.isfinite(val)
        assert log_nu_binom(float(ds.n), ds.n) == 0.0

    def test_rejects_nu_below_n(self):
        ds = _simulate_base(120, 2, 4)
        fam = BaseFamily(2)
        alpha = fam.cell_basis(ds.z, np.array([-2.0, 1.0])).mean(axis=0)
        with pytest.raises(DataError):
            profile_loglik(ds.n - 1.0, alpha, (-2, 1), ds, fam)

    def test_rejects_alpha_outside_unit_interval(self):
        ds = _simulate_base(120, 2, 4)
        fam = BaseFamily(2)
        with pytest.raises(DataError):
            profile_loglik(ds.n + 5.0, np.array([1.2, 0.2, 0.2]), (-2, 1), ds, fam)

    def test_off_simplex_is_infeasible_when_all_cells_active(self):
        ds = _simulate_base(200, 2, 7)
        fam = BaseFamily(2)
        counts = summarize(ds, fam)
        assert counts.mask.all()
        beta = np.array([-2.0, 1.0])
        alpha = fam.cell_basis(ds.z, beta).mean(axis=0) + 0.05
        assert profile_loglik(ds.n + 10.0, alpha, beta, ds, fam) == -np.inf

    def test_m_zero_hard_error(self):
        ds = CaptureDataset(k=2, d=[1, 2], r=[False, False],
                            z=np.empty((0, 2)))
        with pytest.raises(DataError):
            profile_loglik(3.0, np.array([0.3, 0.3, 0.4]), (-2, 1), ds,
                           BaseFamily(2))

    def test_affine_reparameterization_invariance(self):
        ds = _simulate_base(180, 3, 11)
        fam = BaseFamily(3)
        beta = np.array([-1.5, 0.8])
        alpha = fam.cell_basis(ds.z, beta).mean(axis=0)
        base_val = profile_loglik(ds.n + 25.0, alpha, beta, ds, fam)
        a_mat = np.array([[1.0, 0.0], [0.7, 2.0]])  # intercept-preserving
        z_new = ds.z @ a_mat.T
        ds_new = CaptureDataset(k=ds.k, d=ds.d, r=ds.r, z=z_new)
        beta_new = np.linalg.solve(a_mat.T, beta)
        new_val = profile_loglik(ds.n + 25.0, alpha, beta_new, ds_new, fam)
        assert new_val == pytest.approx(base_val, abs=1e-10)

    def test_complete_data_reduction_assembled_by_hand(self):
        # no incomplete records: only the never-captured constraint stays,
        # and the value decomposes into four hand-computed pieces
        rng = np.random.default_rng(13)
        n = 40
        y = rng.uniform(0, 3, n)
        d = rng.integers(1, 3, n)
        z = np.column_stack([np.ones(n), y])
        ds = CaptureDataset(k=2, d=d, r=np.ones(n, dtype=bool), z=z)
        fam = BaseFamily(2)
        beta = np.array([-1.0, 0.5])
        gamma0 = float(fam.cell_basis(z, beta)[:, 0].mean())
        alpha = np.array([gamma0, 0.3, 0.3])
        nu = n + 30.0
        val = profile_loglik(nu, alpha, beta, ds, fam)

        u0 = fam.cell_basis(z, beta)[:, 0] - gamma0
        sol = solve_lambda(u0[:, None])
        assert sol.converged
        g = 1 / (1 + np.exp(-(z @ beta)))
        by_hand = (
            gammaln(nu + 1) - gammaln(n + 1) - gammaln(nu - n + 1)
            + (nu - n) * np.log(gamma0)
            - np.log1p(u0 * sol.lam[0]).sum()
            + float(np.sum(d * np.log(g) + (2 - d) * np.log(1 - g)))
        )
        assert val == pytest.approx(by_hand, rel=1e-12)

    def test_active_system_drops_redundant_row(self):
        basis = np.array([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3]])
        alpha = np.array([0.35, 0.4, 0.25])
        mask = np.ones(3, dtype=bool)
        u, cols = active_system(basis, alpha, mask)
        assert u.shape == (2, 2)
        assert cols.tolist() == [1, 2]
        assert active_system(basis, alpha + 0.1, mask) is None
