import numpy as np
import pytest
import scipy.linalg

from ktclust.kernels import KernelFactor, KernelSpec, factor_kernel, gram_matrix
from ktclust.solver import (
    SolverConfig,
    SolverState,
    bisect_alpha,
    objective,
    per_view_residuals,
    prox_weighted_l2_column,
    residuals,
    solve,
    solve_g,
    solve_p,
    solve_z,
    update_multipliers,
)
from ktclust.tensorops import dft_mode3, rotate, tnn


def make_state(z, p, y, g, w, mu=1e-5, rho=1e-5):
    return SolverState(z=z, p=p, y=y, g=g, w=w, mu=mu, rho=rho)


def fresh_state(n, n_views, mu=1e-5, rho=1e-5):
    return make_state(
        z=[np.zeros((n, n)) for _ in range(n_views)],
        p=[np.eye(n) for _ in range(n_views)],
        y=[np.zeros((n, n)) for _ in range(n_views)],
        g=np.zeros((n, n_views, n)),
        w=np.zeros((n, n_views, n)),
        mu=mu,
        rho=rho,
    )


def column_objective(p, c, k, lam, mu):
    return lam * np.sqrt(max(0.0, p @ k @ p)) + 0.5 * mu * np.sum((p - c) ** 2)


class TestSolverConfig:
    def test_defaults(self):
        cfg = SolverConfig(lam=0.5)
        assert cfg.mu0 == 1e-5 and cfg.rho0 == 1e-5
        assert cfg.eta == 2.0
        assert cfg.mu_max == 1e13 and cfg.rho_max == 1e13
        assert cfg.epsilon == 1e-7
        assert cfg.max_iter == 200

    def test_validation(self):
        with pytest.raises(ValueError, match="lam"):
            SolverConfig(lam=-1.0)
        with pytest.raises(ValueError, match="eta"):
            SolverConfig(lam=1.0, eta=1.0)
        with pytest.raises(ValueError, match="mu0"):
            SolverConfig(lam=1.0, mu0=1e14)
        with pytest.raises(ValueError, match="epsilon"):
            SolverConfig(lam=1.0, epsilon=0.0)


class TestSolveZ:
    def test_initial_point_is_fixed(self):
        n = 4
        z = solve_z(
            np.zeros((n, n)), np.eye(n), np.zeros((n, n)), np.zeros((n, n)),
            1e-5, 1e-5,
        )
        np.testing.assert_allclose(z, 0.0, atol=1e-15)

    def test_equal_weights_average(self):
        rng = np.random.default_rng(30)
        p = rng.standard_normal((3, 3))
        g = rng.standard_normal((3, 3))
        z = solve_z(np.zeros((3, 3)), p, g, np.zeros((3, 3)), 0.7, 0.7)
        np.testing.assert_allclose(z, 0.5 * (np.eye(3) - p + g), atol=1e-14)

    def test_stationarity(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            n = 5
            y = rng.standard_normal((n, n))
            p = rng.standard_normal((n, n))
            g = rng.standard_normal((n, n))
            w = rng.standard_normal((n, n))
            mu, rho = rng.uniform(0.1, 10, size=2)
            z = solve_z(y, p, g, w, mu, rho)
            grad = mu * (z + p - np.eye(n)) - y + rho * (z - g) + w
            assert np.max(np.abs(grad)) < 1e-9


class TestBisectAlpha:
    def test_scalar_hand_solved(self):
        # 4 / (alpha + 1)**2 = 1 has the positive root alpha = 1
        alpha = bisect_alpha(np.array([2.0]), np.array([1.0]), tau=1.0)
        assert alpha == pytest.approx(1.0, rel=1e-9)

    def test_unit_sigmas_closed_form(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            r = rng.integers(1, 6)
            t_u = rng.standard_normal(r) * 3
            tau = rng.uniform(0.5, 5.0)
            norm = np.linalg.norm(t_u)
            if tau * norm <= 1.0:
                continue
            alpha = bisect_alpha(t_u, np.ones(r), tau)
            assert alpha == pytest.approx(tau * norm - 1.0, rel=1e-9, abs=1e-12)

    def test_root_contract(self):
        rng = np.random.default_rng(33)
        for _ in range(20):
            r = int(rng.integers(1, 7))
            sig = rng.uniform(0.2, 3.0, size=r)
            t_u = rng.standard_normal(r) * 2
            tau = rng.uniform(1.0, 10.0)
            if np.sum((t_u / sig) ** 2) <= 1.0 / tau**2:
                continue
            alpha = bisect_alpha(t_u, sig, tau, tol=1e-12)
            val = np.sum(sig**2 * t_u**2 / (alpha + sig**2) ** 2)
            assert val == pytest.approx(1.0 / tau**2, rel=1e-9)

    def test_rejects_small_input(self):
        with pytest.raises(ValueError, match="branch condition"):
            bisect_alpha(np.array([0.1]), np.array([1.0]), tau=1.0)


class TestProxWeightedL2Column:
    def test_zero_input(self):
        f = factor_kernel(np.eye(4))
        np.testing.assert_array_equal(
            prox_weighted_l2_column(np.zeros(4), f, 2.0), np.zeros(4)
        )

    def test_identity_kernel_shrinkage(self):
        rng = np.random.default_rng(34)
        f = factor_kernel(np.eye(5))
        for _ in range(20):
            c = rng.standard_normal(5) * rng.uniform(0.1, 3)
            tau = rng.uniform(0.3, 4.0)
            got = prox_weighted_l2_column(c, f, tau)
            scale = max(0.0, 1.0 - 1.0 / (tau * np.linalg.norm(c)))
            np.testing.assert_allclose(got, scale * c, atol=1e-10)

    def test_rank_zero_passthrough(self):
        f = factor_kernel(np.zeros((3, 3)))
        c = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(prox_weighted_l2_column(c, f, 1.0), c)

    def test_kkt_on_shrinkage_branch(self):
        rng = np.random.default_rng(35)
        checked = 0
        while checked < 20:
            a = rng.standard_normal((5, 5))
            k = a @ a.T + 0.5 * np.eye(5)
            f = factor_kernel(k)
            c = rng.standard_normal(5) * 2
            lam, mu = rng.uniform(0.3, 2.0), rng.uniform(0.5, 3.0)
            tau = mu / lam
            t_u = f.eigvecs.T @ c
            if np.linalg.norm(t_u / f.sigmas) <= 1.0 / tau:
                continue
            p = prox_weighted_l2_column(c, f, tau, tol=1e-14)
            quad = np.sqrt(p @ k @ p)
            assert quad > 0
            kkt = lam * (k @ p) / quad + mu * (p - c)
            assert np.max(np.abs(kkt)) < 1e-6
            checked += 1

    def test_beats_grid_scan_both_branches(self):
        rng = np.random.default_rng(36)
        for trial in range(8):
            a = rng.standard_normal((4, 4))
            k = a @ a.T
            f = factor_kernel(k)
            scale = 2.0 if trial % 2 == 0 else 0.05
            c = rng.standard_normal(4) * scale
            lam, mu = 0.8, 1.1
            p = prox_weighted_l2_column(c, f, mu / lam, tol=1e-14)
            base = column_objective(p, c, k, lam, mu)
            direction = f.eigvecs @ (f.eigvecs.T @ c)
            for s in np.linspace(-1.5, 1.5, 400):
                cand = c - s * direction
                assert base <= column_objective(cand, c, k, lam, mu) + 1e-8


class TestSolveP:
    def test_zero_target(self):
        f = factor_kernel(np.eye(3))
        p = solve_p(np.eye(3), np.zeros((3, 3)), f, mu=1.0, lam=1.0)
        np.testing.assert_allclose(p, 0.0, atol=1e-14)

    def test_rank_zero_returns_target(self):
        rng = np.random.default_rng(37)
        z = rng.standard_normal((4, 4))
        y = rng.standard_normal((4, 4))
        mu = 0.7
        f = factor_kernel(np.zeros((4, 4)))
        p = solve_p(z, y, f, mu=mu, lam=1.0)
        np.testing.assert_allclose(p, np.eye(4) - z + y / mu, atol=1e-14)

    def test_dominates_reference_points(self):
        rng = np.random.default_rng(38)
        a = rng.standard_normal((5, 5))
        k = a @ a.T
        f = factor_kernel(k)
        z = rng.standard_normal((5, 5)) * 0.3
        y = rng.standard_normal((5, 5)) * 0.1
        mu, lam = 1.3, 0.6
        c = np.eye(5) - z + y / mu

        def total(p):
            return sum(
                column_objective(p[:, i], c[:, i], k, lam, mu) for i in range(5)
            )

        p = solve_p(z, y, f, mu=mu, lam=lam)
        assert total(p) <= total(c) + 1e-10
        assert total(p) <= total(np.zeros((5, 5))) + 1e-10


class TestSolveG:
    def test_huge_penalty_is_near_identity(self):
        rng = np.random.default_rng(39)
        z = rotate([rng.standard_normal((4, 4)) for _ in range(2)])
        g = solve_g(z, np.zeros_like(z), rho=1e13)
        assert np.max(np.abs(g - z)) < 1e-8

    def test_zero_input(self):
        z = np.zeros((3, 2, 3))
        np.testing.assert_array_equal(solve_g(z, np.zeros_like(z), 1.0), z)

    def test_optimality_sampling(self):
        rng = np.random.default_rng(40)
        z = rotate([rng.standard_normal((3, 3)) for _ in range(2)])
        w = rotate([rng.standard_normal((3, 3)) for _ in range(2)]) * 0.1
        rho = 2.0
        g = solve_g(z, w, rho)
        f_target = z + w / rho

        def obj(x):
            return tnn(x) + 0.5 * rho * np.sum((x - f_target) ** 2)

        base = obj(g)
        for _ in range(50):
            d = rng.standard_normal(g.shape)
            d *= 1e-2 / np.linalg.norm(d)
            assert obj(g + d) >= base - 1e-12


class TestUpdateMultipliers:
    def test_feasible_state_only_scales_penalties(self):
        state = fresh_state(3, 2, mu=1e-5, rho=1e-5)
        cfg = SolverConfig(lam=1.0)
        update_multipliers(state, cfg)
        for v in range(2):
            np.testing.assert_array_equal(state.y[v], np.zeros((3, 3)))
        np.testing.assert_array_equal(state.w, np.zeros((3, 2, 3)))
        assert state.mu == 2e-5 and state.rho == 2e-5

    def test_caps_hold(self):
        state = fresh_state(2, 1, mu=1e13, rho=1e13)
        update_multipliers(state, SolverConfig(lam=1.0))
        assert state.mu == 1e13 and state.rho == 1e13

    def test_growth_recurrence(self):
        state = fresh_state(2, 1)
        cfg = SolverConfig(lam=1.0)
        for k in range(1, 70):
            update_multipliers(state, cfg)
            assert state.mu == min(1e-5 * 2.0**k, 1e13)

    def test_absorbs_residuals(self):
        rng = np.random.default_rng(41)
        state = fresh_state(3, 1, mu=0.5, rho=0.25)
        state.z = [rng.standard_normal((3, 3))]
        state.g = rotate([rng.standard_normal((3, 3))])
        y_want = 0.5 * (np.eye(3) - state.z[0] - state.p[0])
        w_want = 0.25 * (rotate(state.z) - state.g)
        update_multipliers(state, SolverConfig(lam=1.0))
        np.testing.assert_allclose(state.y[0], y_want, atol=1e-14)
        np.testing.assert_allclose(state.w, w_want, atol=1e-14)


class TestResiduals:
    def test_initial_point_is_feasible(self):
        state = fresh_state(4, 3)
        assert residuals(state) == (0.0, 0.0)

    def test_unit_violations(self):
        state = fresh_state(3, 2)
        state.z = [np.eye(3), np.eye(3)]
        recon, match = residuals(state)
        assert recon == 1.0 and match == 1.0

    def test_mean_vs_per_view(self):
        state = fresh_state(2, 2)
        state.z = [np.eye(2) * 0.5, np.zeros((2, 2))]
        recon_pv, match_pv = per_view_residuals(state)
        assert recon_pv == [0.5, 0.0]
        assert match_pv == [0.5, 0.0]
        recon, match = residuals(state)
        assert recon == 0.25 and match == 0.25


class TestObjective:
    def test_identity_kernels_initial_point(self):
        n, n_views, lam = 4, 3, 0.7
        state = fresh_state(n, n_views)
        factors = [factor_kernel(np.eye(n)) for _ in range(n_views)]
        assert objective(state, factors, lam) == pytest.approx(
            lam * n_views * n, abs=1e-12
        )

    def test_all_zero_state(self):
        state = fresh_state(3, 2)
        state.p = [np.zeros((3, 3)) for _ in range(2)]
        factors = [factor_kernel(np.eye(3)) for _ in range(2)]
        assert objective(state, factors, 1.0) == 0.0

    def test_matches_independent_recomputation(self):
        rng = np.random.default_rng(42)
        n, n_views, lam = 4, 2, 0.9
        state = fresh_state(n, n_views)
        kernels = []
        for v in range(n_views):
            a = rng.standard_normal((n, n))
            kernels.append(a @ a.T)
            state.z[v] = rng.standard_normal((n, n))
            state.p[v] = rng.standard_normal((n, n))
        factors = [factor_kernel(k) for k in kernels]
        got = objective(state, factors, lam)
        h_sum = sum(
            np.sqrt(max(0.0, state.p[v][:, i] @ kernels[v] @ state.p[v][:, i]))
            for v in range(n_views)
            for i in range(n)
        )
        s_hat = dft_mode3(rotate(state.z))
        nuc = sum(
            scipy.linalg.svdvals(s_hat[:, :, j]).sum() for j in range(n)
        )
        assert got == pytest.approx(lam * h_sum + nuc, abs=1e-9)


class TestSolve:
    def test_single_view_identity_kernel_converges(self):
        factors = [factor_kernel(np.eye(4))]
        z, trace, converged = solve(factors, SolverConfig(lam=1.0))
        assert converged
        assert len(trace) <= 200
        assert trace.recon_error[-1] < 1e-7
        assert trace.match_error[-1] < 1e-7

    def test_two_view_subspace_data_converges(self):
        rng = np.random.default_rng(43)
        n_per, d = 8, 6
        views = []
        for _ in range(2):
            cols = []
            for _ in range(3):
                basis = np.linalg.qr(rng.standard_normal((d, 2)))[0]
                cols.append(basis @ rng.standard_normal((2, n_per)))
            x = np.concatenate(cols, axis=1)
            x /= np.maximum(np.linalg.norm(x, axis=0), 1e-12)
            views.append(x)
        factors = [
            factor_kernel(gram_matrix(x, KernelSpec("linear"))) for x in views
        ]
        z, trace, converged = solve(factors, SolverConfig(lam=0.1))
        assert converged
        assert len(trace) < 200
        assert trace.recon_error[-1] < trace.recon_error[5]
        assert trace.match_error[-1] < trace.match_error[5]

    def test_penalty_trace_follows_recurrence(self):
        factors = [factor_kernel(np.eye(3))]
        _, trace, _ = solve(factors, SolverConfig(lam=0.5))
        for k in range(len(trace)):
            assert trace.mu[k] == min(1e-5 * 2.0**k, 1e13)
            assert trace.rho[k] == min(1e-5 * 2.0**k, 1e13)

    def test_deterministic(self):
        rng = np.random.default_rng(44)
        x = rng.standard_normal((5, 12))
        factors = [factor_kernel(gram_matrix(x, KernelSpec("linear")))]
        z1, t1, c1 = solve(factors, SolverConfig(lam=0.3))
        z2, t2, c2 = solve(factors, SolverConfig(lam=0.3))
        assert c1 == c2
        np.testing.assert_array_equal(z1[0], z2[0])
        np.testing.assert_array_equal(t1.objective, t2.objective)
        np.testing.assert_array_equal(t1.recon_error, t2.recon_error)

    def test_callback_sees_every_iteration(self):
        factors = [factor_kernel(np.eye(3))]
        seen = []
        _, trace, _ = solve(
            factors, SolverConfig(lam=1.0), callback=lambda s: seen.append(s.iteration)
        )
        assert seen == list(range(len(trace)))

    def test_non_finite_iterate_raises(self):
        bad = KernelFactor(
            eigvecs=np.full((3, 1), np.nan), sigmas=np.array([1.0])
        )
        with pytest.raises(FloatingPointError, match="iteration 0"):
            solve([bad], SolverConfig(lam=1.0))

    def test_mismatched_views_rejected(self):
        f3 = factor_kernel(np.eye(3))
        f4 = factor_kernel(np.eye(4))
        with pytest.raises(ValueError, match="sample count"):
            solve([f3, f4], SolverConfig(lam=1.0))
        with pytest.raises(ValueError, match="at least one"):
            solve([], SolverConfig(lam=1.0))

    def test_final_state_meets_tolerance_per_view(self):
        rng = np.random.default_rng(45)
        x1 = rng.standard_normal((4, 9))
        x2 = rng.standard_normal((3, 9))
        factors = [
            factor_kernel(gram_matrix(x, KernelSpec("linear"))) for x in (x1, x2)
        ]
        states = []
        z, trace, converged = solve(
            factors, SolverConfig(lam=0.2), callback=lambda s: states.append(s)
        )
        assert converged
        recon_pv, match_pv = per_view_residuals(states[-1])
        assert max(recon_pv) < 1e-7
        assert max(match_pv) < 1e-7


class TestSolveTraceCsv:
    def test_round_trip_text(self, tmp_path):
        factors = [factor_kernel(np.eye(3))]
        _, trace, _ = solve(factors, SolverConfig(lam=1.0))
        path = tmp_path / "trace.csv"
        trace.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "iteration,recon_error,match_error,objective,mu,rho"
        assert len(lines) == len(trace) + 1
        first = lines[1].split(",")
        assert first[0] == "0"
        assert float(first[4]) == 1e-5
