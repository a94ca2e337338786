import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import crandn
from maedsim.channel import JammerProfile, SystemConfig, frame_rng, hadamard_pilots, synthesize_frame
from maedsim.errors import ConfigError, DimensionError
from maedsim.linalg import orth_complement_projector, right_pseudo_inverse
from maedsim.solver import (
    DESCENT_SIGN,
    SolverConfig,
    bb_stepsize,
    gradient_f,
    hard_decision,
    objective_f,
    prox_g,
    residual_matrix,
    run_maed,
    update_subspace,
)

SMALL = dict(B=16, U=4, T=4, D=8)


def _problem(rng, B=8, U=4, K=12):
    Y = crandn(rng, B, K)
    S = crandn(rng, U, K)
    P = orth_complement_projector(crandn(rng, B))
    return P, Y, S


class TestObjective:
    def test_zero_when_rows_explained(self, rng):
        S = crandn(rng, 4, 12)
        H = crandn(rng, 8, 4)
        assert objective_f(np.eye(8), H @ S, S) == pytest.approx(0.0, abs=1e-18 * 1e6)

    def test_zero_when_residual_along_p(self, rng):
        S = crandn(rng, 4, 12)
        H, hj = crandn(rng, 8, 4), crandn(rng, 8)
        w = crandn(rng, 12)
        Y = H @ S + np.outer(hj, w)
        assert objective_f(orth_complement_projector(hj), Y, S) < 1e-20 * np.linalg.norm(Y) ** 2
        assert objective_f(np.eye(8), Y, S) > 1e-3

    def test_matches_explicit_formula(self, rng):
        P, Y, S = _problem(rng)
        R = np.eye(12) - np.linalg.pinv(S) @ S
        assert objective_f(P, Y, S) == pytest.approx(np.linalg.norm(P @ Y @ R) ** 2, rel=1e-10)

    def test_dimension_errors(self, rng):
        P, Y, S = _problem(rng)
        with pytest.raises(DimensionError):
            objective_f(np.eye(7), Y, S)
        with pytest.raises(DimensionError):
            objective_f(P, Y, S[:, :10])


class TestGradient:
    def test_finite_differences(self, rng):
        # f(S + eps D) = f(S) - 2 eps Re<G, D> + O(eps^2)
        eps = 1e-5
        for _ in range(20):
            P, Y, S = _problem(rng)
            G = gradient_f(P, Y, S)
            D = np.zeros_like(S)
            D[:, 4:] = crandn(rng, 4, 8)
            fd = (objective_f(P, Y, S + eps * D) - objective_f(P, Y, S - eps * D)) / (2 * eps)
            assert fd == pytest.approx(-2.0 * np.vdot(G, D).real, rel=1e-4)

    def test_descent_direction(self, rng):
        P, Y, S = _problem(rng)
        G = gradient_f(P, Y, S)
        step = 1e-4 / np.linalg.norm(G)
        assert objective_f(P, Y, S + DESCENT_SIGN * step * G) < objective_f(P, Y, S)

    def test_vanishes_at_exact_fit(self, rng):
        S = crandn(rng, 4, 12)
        Y = crandn(rng, 8, 4) @ S
        assert np.linalg.norm(gradient_f(np.eye(8), Y, S)) < 1e-10

    def test_orthogonal_to_row_space(self, rng):
        # G (S^+ S) = 0: moving S within its own row space leaves f unchanged
        P, Y, S = _problem(rng)
        G = gradient_f(P, Y, S)
        np.testing.assert_allclose(G @ right_pseudo_inverse(S) @ S, 0, atol=1e-10)


class TestProx:
    def test_pilots_reset_and_box(self):
        S_T = hadamard_pilots(2, 2, 2.0)
        cand = np.array([[9, 9, 3 - 0.5j, -0.2 + 5j], [9, 9, 0.1j, -4 - 4j]], dtype=complex)
        out = prox_g(cand, S_T, 2.0)
        np.testing.assert_array_equal(out[:, :2], S_T)
        np.testing.assert_allclose(out[:, 2:], [[1 - 0.5j, -0.2 + 1j], [0.1j, -1 - 1j]])

    def test_does_not_mutate_input(self, rng):
        cand = crandn(rng, 4, 12) * 5
        before = cand.copy()
        prox_g(cand, hadamard_pilots(4, 4, 1.0), 1.0)
        np.testing.assert_array_equal(cand, before)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            prox_g(np.zeros((3, 8)), hadamard_pilots(4, 4, 1.0), 1.0)

    @given(arrays(np.float64, (2, 4, 12), elements=st.floats(-10, 10)), st.floats(0.1, 4.0))
    def test_projection_properties(self, parts, Es):
        cand = parts[0] + 1j * parts[1]
        S_T = hadamard_pilots(4, 4, Es)
        out = prox_g(cand, S_T, Es)
        a = np.sqrt(Es / 2)
        assert np.all(np.abs(out[:, 4:].real) <= a + 1e-12)
        assert np.all(np.abs(out[:, 4:].imag) <= a + 1e-12)
        np.testing.assert_array_equal(prox_g(out, S_T, Es), out)  # idempotent


class TestResidual:
    def test_orthogonal_to_rows(self, rng):
        _, Y, S = _problem(rng)
        E = residual_matrix(Y, S)
        np.testing.assert_allclose(E @ S.conj().T, 0, atol=1e-10)
        np.testing.assert_allclose(Y - E, (Y @ np.linalg.pinv(S)) @ S, atol=1e-10)


class TestUpdateSubspace:
    cfg = SolverConfig()

    def test_first_update_finds_rank_one(self, rng):
        hj = crandn(rng, 16)
        E = np.outer(hj, crandn(rng, 12))
        p = update_subspace(E, None, first=True, cfg=self.cfg)
        assert abs(np.vdot(p, hj)) / np.linalg.norm(hj) == pytest.approx(1.0, abs=1e-9)

    def test_later_update_is_single_power_step(self, rng):
        E = crandn(rng, 16, 12)
        prev = crandn(rng, 16)
        prev /= np.linalg.norm(prev)
        v = E @ (E.conj().T @ prev)
        np.testing.assert_allclose(update_subspace(E, prev, first=False, cfg=self.cfg), v / np.linalg.norm(v))

    def test_first_update_matches_chained_power_steps(self, rng):
        E = crandn(rng, 16, 12)
        M = E @ E.conj().T
        v = crandn(rng, 16)
        for _ in range(500):
            v = M @ v
            v /= np.linalg.norm(v)
        p = update_subspace(E, None, first=True, cfg=self.cfg)
        assert abs(np.vdot(p, v)) >= 1 - 1e-6

    def test_fixed_point_at_dominant_eigenvector(self, rng):
        E = crandn(rng, 16, 12)
        p = update_subspace(E, None, first=True, cfg=SolverConfig(power_tol=1e-12, power_max_iter=5000))
        q = update_subspace(E, p, first=False, cfg=self.cfg)
        assert abs(np.vdot(p, q)) == pytest.approx(1.0, abs=1e-9)

    def test_true_transmit_matrix_isolates_jammer(self):
        # at the true S~ the residual is the jammer alone, so one subspace
        # update finds hj and the projected objective vanishes
        cfg = SystemConfig(snr_db=np.inf, jammer=JammerProfile(kind="barrage"))
        fr = synthesize_frame(cfg, frame_rng(5, 0, 0))
        S = fr.truth.S
        p = update_subspace(residual_matrix(fr.Y, S), None, first=True, cfg=self.cfg)
        hj = fr.truth.hj / np.linalg.norm(fr.truth.hj)
        assert abs(np.vdot(p, hj)) >= 1 - 1e-6
        assert objective_f(orth_complement_projector(p), fr.Y, S) <= 1e-6 * np.linalg.norm(fr.Y) ** 2

    def test_zero_residual_keeps_previous(self, rng):
        prev = crandn(rng, 16)
        assert update_subspace(np.zeros((16, 12)), prev, False, self.cfg) is prev
        assert update_subspace(np.zeros((16, 12)), None, True, self.cfg) is None

    def test_annihilated_direction_keeps_previous(self, rng):
        E = np.zeros((4, 6), dtype=complex)
        E[0] = crandn(rng, 6)
        prev = np.array([0, 1, 0, 0], dtype=complex)
        assert update_subspace(E, prev, False, self.cfg) is prev


class TestBBStepsize:
    @pytest.mark.parametrize("rule", ["adaptive", "alternating", "bb1"])
    def test_quadratic_curvature(self, rule):
        # f(s) = a^2 |s|^2 / 2 has every spectral step equal to 1 / a^2
        a2 = 4.0
        cfg = SolverConfig(bb_rule=rule)
        s0, s1 = np.array([1 + 1j, 0.5]), np.array([0.2 - 1j, 2j])
        tau = bb_stepsize(s0, s1, a2 * s0, a2 * s1, 0.1, 0, cfg)
        assert tau == pytest.approx(1 / a2)

    @pytest.mark.parametrize("rule", ["adaptive", "alternating", "bb1"])
    def test_consistent_scaling(self, rule, rng):
        dG = crandn(rng, 3, 5)
        S0 = crandn(rng, 3, 5)
        tau = bb_stepsize(S0, S0 + 0.3 * dG, np.zeros_like(dG), dG, 0.1, 1, SolverConfig(bb_rule=rule))
        assert tau == pytest.approx(0.3)

    def test_adaptive_branches(self):
        cfg = SolverConfig()
        # ss=2, sg=1, gg=1: steep 2, minres 1, 2 minres == steep so steep - minres/2
        S0, S1 = np.zeros(2), np.array([1.0, 1.0])
        assert bb_stepsize(S0, S1, np.zeros(2), np.array([1.0, 0.0]), 0.1, 0, cfg) == pytest.approx(1.5)
        # ss=1, sg=1, gg=1.25: steep 1, minres 0.8 -> minres
        S1 = np.array([1.0, 0.0])
        assert bb_stepsize(S0, S1, np.zeros(2), np.array([1.0, 0.5]), 0.1, 0, cfg) == pytest.approx(0.8)

    def test_alternating_parity(self):
        cfg = SolverConfig(bb_rule="alternating")
        S0, S1, G0, G1 = np.zeros(2), np.array([1.0, 1.0]), np.zeros(2), np.array([1.0, 0.0])
        assert bb_stepsize(S0, S1, G0, G1, 0.1, 0, cfg) == pytest.approx(2.0)
        assert bb_stepsize(S0, S1, G0, G1, 0.1, 1, cfg) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "dG", [np.zeros(2), np.array([-1.0, 0.0]), np.array([np.nan, 0.0])]
    )
    def test_fallback(self, dG):
        assert bb_stepsize(np.zeros(2), np.ones(2), np.zeros(2), dG, 0.37, 0, SolverConfig()) == 0.37

    def test_no_move_keeps_tau(self):
        assert bb_stepsize(np.ones(2), np.ones(2), np.zeros(2), np.ones(2), 0.2, 0, SolverConfig()) == 0.2

    def test_clamped(self):
        cfg = SolverConfig(bb_floor=1e-3, bb_ceil=10.0)
        S0, S1 = np.zeros(1), np.ones(1)
        assert bb_stepsize(S0, S1, np.zeros(1), np.array([1e-6]), 0.1, 0, cfg) == 10.0
        assert bb_stepsize(S0, S1, np.zeros(1), np.array([1e6]), 0.1, 0, cfg) == 1e-3

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            SolverConfig(bb_rule="bb3")
        with pytest.raises(ConfigError):
            SolverConfig(t_max=0)
        with pytest.raises(ConfigError):
            SolverConfig(bb_floor=1.0, bb_ceil=0.5)


class TestHardDecision:
    def test_quadrants_and_bits(self):
        S, bits = hard_decision(np.array([[0.3 + 2j, -1 - 0.1j, 0.0 - 0.0j]]), 2.0)
        np.testing.assert_allclose(S, [[1 + 1j, -1 - 1j, 1 + 1j]])
        np.testing.assert_array_equal(bits, [[0, 0, 1, 1, 0, 0]])

    @given(arrays(np.float64, (2, 3, 5), elements=st.floats(-5, 5)))
    def test_nearest_point(self, parts):
        soft = parts[0] + 1j * parts[1]
        S, _ = hard_decision(soft, 1.0)
        a = np.sqrt(0.5)
        grid = a * np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])
        best = np.min(np.abs(soft[..., None] - grid), axis=-1)
        np.testing.assert_allclose(np.abs(soft - S), best, atol=1e-12)


def _reference_run(Y, S_T, Es, cfg):
    """Plain loop over the public B-domain building blocks."""
    U, T = S_T.shape
    K = Y.shape[1]
    S = np.zeros((U, K), dtype=complex)
    S[:, :T] = S_T
    p, tau = None, cfg.tau0
    P = np.eye(Y.shape[0])
    G = gradient_f(P, Y, S)
    objective = []
    for t in range(cfg.t_max):
        S_new = prox_g(S + DESCENT_SIGN * tau * G, S_T, Es)
        if cfg.project_enabled:
            p = update_subspace(residual_matrix(Y, S_new), p, first=p is None, cfg=cfg)
            P = orth_complement_projector(p)
        G_new = gradient_f(P, Y, S_new)
        objective.append(objective_f(P, Y, S_new))
        tau = bb_stepsize(S[:, T:], S_new[:, T:], -G[:, T:], -G_new[:, T:], tau, t, cfg)
        S, G = S_new, G_new
    return S[:, T:], p, objective


class TestRunMaed:
    @pytest.mark.parametrize("project", [True, False])
    def test_matches_reference_loop(self, project):
        cfg = SystemConfig(snr_db=8.0, jammer=JammerProfile(kind="barrage"), **SMALL)
        fr = synthesize_frame(cfg, frame_rng(3, 0, 0))
        scfg = SolverConfig(t_max=12, project_enabled=project)
        res = run_maed(fr.Y, fr.truth.S_T, cfg.Es, scfg)
        S_ref, p_ref, obj_ref = _reference_run(fr.Y, fr.truth.S_T, cfg.Es, scfg)
        np.testing.assert_allclose(res.S_D_soft, S_ref, atol=1e-8)
        np.testing.assert_allclose(res.objective, obj_ref, rtol=1e-7, atol=1e-9)
        if project:
            np.testing.assert_allclose(res.p_hat, p_ref, atol=1e-8)
        else:
            assert res.p_hat is None and p_ref is None

    def test_noiseless_recovery(self):
        cfg = SystemConfig(snr_db=np.inf, jammer=JammerProfile(kind="barrage"))
        for i in range(3):
            fr = synthesize_frame(cfg, frame_rng(21, 0, i))
            res = run_maed(fr.Y, fr.truth.S_T, cfg.Es)
            np.testing.assert_array_equal(res.bits, fr.truth.bits)
            hj = fr.truth.hj / np.linalg.norm(fr.truth.hj)
            assert abs(np.vdot(res.p_hat, hj)) > 0.999

    @pytest.mark.parametrize("project", [True, False])
    def test_warm_start_at_truth_is_stationary(self, project):
        cfg = SystemConfig(snr_db=np.inf, **SMALL)
        fr = synthesize_frame(cfg, frame_rng(5, 0, 0))
        scfg = SolverConfig(t_max=5, project_enabled=project)
        res = run_maed(fr.Y, fr.truth.S_T, cfg.Es, scfg, S_D_init=fr.truth.S_D)
        np.testing.assert_allclose(res.S_D_soft, fr.truth.S_D, atol=1e-8)
        assert max(res.objective) < 1e-12 * np.linalg.norm(fr.Y) ** 2

    def test_callback_invariants(self):
        cfg = SystemConfig(snr_db=6.0, jammer=JammerProfile(kind="pilot"), **SMALL)
        fr = synthesize_frame(cfg, frame_rng(8, 0, 0))
        a = np.sqrt(cfg.Es / 2)
        seen = []

        def check(state):
            seen.append(state.t)
            np.testing.assert_array_equal(state.S_tilde[:, :4], fr.truth.S_T)
            assert np.all(np.abs(state.S_tilde[:, 4:].real) <= a + 1e-12)
            assert np.all(np.abs(state.S_tilde[:, 4:].imag) <= a + 1e-12)
            assert np.linalg.norm(state.p_hat) == pytest.approx(1.0)
            P = state.P_tilde
            np.testing.assert_allclose(P @ P, P, atol=1e-12)
            np.testing.assert_allclose(state.E_tilde, residual_matrix(fr.Y, state.S_tilde), atol=1e-9)
            assert 1e-6 <= state.tau <= 1e3

        run_maed(fr.Y, fr.truth.S_T, cfg.Es, SolverConfig(t_max=7), callback=check)
        assert seen == list(range(7))

    def test_objective_reported_per_iteration(self):
        cfg = SystemConfig(snr_db=10.0, jammer=JammerProfile(kind="barrage"), **SMALL)
        fr = synthesize_frame(cfg, frame_rng(2, 0, 0))
        res = run_maed(fr.Y, fr.truth.S_T, cfg.Es, SolverConfig(t_max=9))
        assert len(res.objective) == len(res.taus) == 9
        assert all(f >= 0 for f in res.objective)

    def test_deterministic(self):
        cfg = SystemConfig(snr_db=4.0, jammer=JammerProfile(kind="sparse"), **SMALL)
        fr = synthesize_frame(cfg, frame_rng(1, 0, 0))
        a = run_maed(fr.Y, fr.truth.S_T, cfg.Es)
        b = run_maed(fr.Y, fr.truth.S_T, cfg.Es)
        assert np.array_equal(a.S_D_soft, b.S_D_soft)

    def test_bad_pilots(self):
        with pytest.raises(DimensionError):
            run_maed(np.zeros((8, 12)), np.ones((4, 2)), 1.0)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.sampled_from(["barrage", "pilot", "data", "sparse"]))
    def test_output_on_constellation(self, seed, kind):
        cfg = SystemConfig(snr_db=5.0, jammer=JammerProfile(kind=kind), **SMALL)
        fr = synthesize_frame(cfg, np.random.default_rng(seed))
        res = run_maed(fr.Y, fr.truth.S_T, cfg.Es, SolverConfig(t_max=5))
        a = np.sqrt(cfg.Es / 2)
        np.testing.assert_allclose(np.abs(res.S_D_hard.real), a)
        np.testing.assert_allclose(np.abs(res.S_D_hard.imag), a)
        assert res.bits.shape == (4, 16)
