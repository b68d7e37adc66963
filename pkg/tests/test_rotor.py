"""Rotor-core: grid conventions, transforms, propagator steps, observables."""

import numpy as np
import pytest

import ptkr
from ptkr.rotor import GUARD_MIN_MODES, Propagator


def random_state(basis, seed=0, normalize=True):
    """Random state supported on the central half of the ladder (clear of the guard)."""
    rng = np.random.default_rng(seed)
    n = basis.n_modes
    amp = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    amp[: n // 4] = 0.0
    amp[-(n // 4):] = 0.0
    if normalize:
        amp /= np.linalg.norm(amp)
    return ptkr.WaveState(basis, amp, "momentum")


def slow_dft_to_angle(basis, psi):
    """Independent O(N^2) momentum->angle transform by explicit sums."""
    n = basis.n_modes
    idx = np.arange(-(n // 2), n // 2)
    theta = -np.pi + 2.0 * np.pi * np.arange(n) / n
    return np.exp(1j * np.outer(theta, idx)) @ psi / np.sqrt(n)


class TestBasisSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ptkr.BasisSpec(2, 1.0)
        with pytest.raises(ValueError):
            ptkr.BasisSpec(9, 1.0)
        with pytest.raises(ValueError):
            ptkr.BasisSpec(8, -1.0)

    def test_grids(self):
        basis = ptkr.BasisSpec(8, 0.5)
        assert list(basis.momentum_indices()) == [-4, -3, -2, -1, 0, 1, 2, 3]
        assert np.allclose(basis.momentum_values(), 0.5 * basis.momentum_indices())
        theta = basis.angle_values()
        assert theta[0] == -np.pi
        assert np.allclose(np.diff(theta), 2 * np.pi / 8)
        assert theta[-1] < np.pi

    def test_parseval_round_trip(self):
        basis = ptkr.BasisSpec(256, 0.7)
        state = random_state(basis, seed=3)
        back = ptkr.to_momentum(ptkr.to_angle(state))
        assert np.max(np.abs(back.amplitudes - state.amplitudes)) < 1e-12
        a = ptkr.to_angle(state)
        assert abs(a.norm2() - state.norm2()) < 1e-12

    def test_transform_matches_slow_dft(self):
        basis = ptkr.BasisSpec(128, 1.0)
        state = random_state(basis, seed=5)
        fast = ptkr.to_angle(state).amplitudes
        slow = slow_dft_to_angle(basis, state.amplitudes)
        assert np.max(np.abs(fast - slow)) < 1e-12


class TestGaussianState:
    def test_zero_mean_momentum(self):
        basis = ptkr.BasisSpec(1024, 0.3)
        obs = ptkr.observables(ptkr.gaussian_state(basis, 10.0))
        assert abs(obs["p_mean"]) < 1e-10

    def test_unit_norm(self):
        basis = ptkr.BasisSpec(1024, 0.3)
        assert abs(ptkr.gaussian_state(basis, 10.0).norm2() - 1.0) < 1e-12

    def test_p2_against_direct_sum_oracle(self):
        # independent route: sample the same Gaussian, explicit slow DFT,
        # then the direct sum of p_n^2 |psi_n|^2
        basis = ptkr.BasisSpec(1024, 1.0)
        theta = basis.angle_values()
        sampled = np.exp(-10.0 * theta**2 / 2.0).astype(complex)
        sampled /= np.linalg.norm(sampled)
        n = basis.n_modes
        idx = np.arange(-(n // 2), n // 2)
        psi_oracle = np.exp(-1j * np.outer(idx, theta)) @ sampled / np.sqrt(n)
        p2_oracle = float(np.sum(basis.momentum_values() ** 2 * np.abs(psi_oracle) ** 2))

        obs = ptkr.observables(ptkr.gaussian_state(basis, 10.0))
        assert abs(obs["p2"] - p2_oracle) < 1e-10
        # quadrature value is sigma*hbar^2/2 up to truncation corrections
        assert abs(obs["p2"] - 10.0 * 1.0 / 2.0) < 1e-2

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            ptkr.gaussian_state(ptkr.BasisSpec(64, 1.0), -1.0)


class TestApplyKick:
    def test_zero_kick_is_identity(self):
        basis = ptkr.BasisSpec(256, 1.0)
        params = ptkr.ModelParams(0.0, 0.7, 1.0)
        state = random_state(basis, seed=1)
        out = ptkr.apply_kick(state, params, "forward")
        assert np.max(np.abs(out.amplitudes - state.amplitudes)) < 1e-12

    def test_hermitian_kick_preserves_norm(self):
        basis = ptkr.BasisSpec(1024, 1.0)
        params = ptkr.ModelParams(5.0, 0.0, 1.0)
        state = ptkr.gaussian_state(basis, 10.0)
        out = ptkr.apply_kick(state, params, "forward")
        assert abs(out.norm2() - state.norm2()) < 1e-12

    def test_gain_norm_against_quadrature_oracle(self):
        # post-kick norm must match the discrete quadrature of
        # |exp(K lam sin(theta)/hbar) psi(theta)|^2 on the same grid
        basis = ptkr.BasisSpec(1024, 1.0)
        params = ptkr.ModelParams(5.0, 0.15, 1.0)
        state = ptkr.gaussian_state(basis, 10.0)
        theta = basis.angle_values()
        a = slow_dft_to_angle(basis, state.amplitudes)
        oracle = float(np.sum(np.exp(2 * 5.0 * 0.15 * np.sin(theta) / 1.0) * np.abs(a) ** 2))
        out = ptkr.apply_kick(state, params, "forward")
        assert abs(out.norm2() - oracle) < 1e-10

    def test_adjoint_same_gain_opposite_phase(self):
        basis = ptkr.BasisSpec(256, 1.0)
        params = ptkr.ModelParams(3.0, 0.2, 1.0)
        state = random_state(basis, seed=2)
        fwd = ptkr.to_angle(ptkr.apply_kick(state, params, "forward"))
        adj = ptkr.to_angle(ptkr.apply_kick(state, params, "adjoint"))
        assert np.max(np.abs(np.abs(fwd.amplitudes) - np.abs(adj.amplitudes))) < 1e-12

    def test_gain_locality(self):
        # one forward kick on the angle-uniform state shifts probability
        # into theta in (0, pi) whenever lambda > 0
        basis = ptkr.BasisSpec(256, 1.0)
        params = ptkr.ModelParams(2.0, 0.3, 1.0)
        amp = np.zeros(basis.n_modes, dtype=complex)
        amp[basis.n_modes // 2] = 1.0  # n = 0: uniform in angle
        out = ptkr.apply_kick(ptkr.WaveState(basis, amp), params, "forward")
        dens = ptkr.observables(out)["angle_density"]
        theta = basis.angle_values()
        assert dens[np.sin(theta) > 0].sum() > dens[np.sin(theta) < 0].sum()


class TestApplyFree:
    def test_zero_momentum_eigenstate_unchanged(self):
        basis = ptkr.BasisSpec(64, 0.5)
        amp = np.zeros(64, dtype=complex)
        amp[32] = 1.0
        params = ptkr.ModelParams(3.0, 0.1, 0.5)
        out = ptkr.apply_free(ptkr.WaveState(basis, amp), params, "forward")
        assert np.array_equal(out.amplitudes, amp)

    def test_density_invariant(self):
        basis = ptkr.BasisSpec(256, 0.5)
        params = ptkr.ModelParams(3.0, 0.1, 0.5)
        state = random_state(basis, seed=4)
        out = ptkr.apply_free(state, params, "forward")
        assert np.max(np.abs(np.abs(out.amplitudes) ** 2 - np.abs(state.amplitudes) ** 2)) < 1e-12

    def test_forward_then_adjoint_identity(self):
        basis = ptkr.BasisSpec(256, 0.5)
        params = ptkr.ModelParams(3.0, 0.1, 0.5)
        state = random_state(basis, seed=5)
        out = ptkr.apply_free(ptkr.apply_free(state, params, "forward"), params, "adjoint")
        assert np.max(np.abs(out.amplitudes - state.amplitudes)) < 1e-12


class TestFloquetStep:
    def test_unitary_reversal_50_steps(self):
        basis = ptkr.BasisSpec(4096, 0.3)
        params = ptkr.ModelParams(6.0, 0.0, 0.3)
        initial = ptkr.gaussian_state(basis, 10.0)
        s = initial
        for _ in range(50):
            s = ptkr.floquet_step(s, params, "forward")
        for _ in range(50):
            s = ptkr.floquet_step(s, params, "adjoint")
        assert ptkr.fidelity(s, initial) > 1.0 - 1e-9

    def test_one_step_matches_dense_matrix(self):
        basis = ptkr.BasisSpec(8, 1.0)
        params = ptkr.ModelParams(1.0, 0.1, 1.0)
        state = random_state(basis, seed=6)
        dense = ptkr.dense_floquet_matrix(basis, params) @ state.amplitudes
        fast = ptkr.floquet_step(state, params, "forward").amplitudes
        assert np.max(np.abs(dense - fast)) < 1e-10

    def test_dense_equivalence_random_sequences(self):
        # any sequence of <= 10 forward/adjoint steps matches the matrix oracle
        rng = np.random.default_rng(11)
        for n_modes, k, lam, hbar in [(8, 1.0, 0.1, 1.0), (16, 2.0, 0.3, 0.5)]:
            basis = ptkr.BasisSpec(n_modes, hbar)
            params = ptkr.ModelParams(k, lam, hbar)
            mats = {
                "forward": ptkr.dense_floquet_matrix(basis, params, "forward"),
                "adjoint": ptkr.dense_floquet_matrix(basis, params, "adjoint"),
            }
            for _ in range(4):
                state = random_state(basis, seed=int(rng.integers(1 << 30)))
                seq = rng.choice(["forward", "adjoint"], size=rng.integers(1, 11))
                fast = state
                dense = state.amplitudes.copy()
                for direction in seq:
                    fast = ptkr.floquet_step(fast, params, direction)
                    dense = mats[direction] @ dense
                assert np.max(np.abs(fast.amplitudes - dense)) < 1e-9

    def test_unitarity_drift(self):
        # per-step drift < 1e-13; over 1e4 steps < 1e-9
        basis = ptkr.BasisSpec(512, 1.0)
        params = ptkr.ModelParams(5.0, 0.0, 1.0)
        s = ptkr.gaussian_state(basis, 10.0)
        s = ptkr.floquet_step(s, params, "forward")
        assert abs(s.norm2() - 1.0) < 1e-13
        prop = Propagator(basis, params)
        work = prop.fold(s.amplitudes)
        for _ in range(10_000):
            work = prop.step_std(work, "forward")
        assert abs(np.sum(np.abs(work) ** 2) - 1.0) < 1e-9

    def test_adjoint_inner_product_identity(self):
        # <u|F v> == <F_adj u|v> for lambda > 0 too
        basis = ptkr.BasisSpec(128, 0.5)
        params = ptkr.ModelParams(4.0, 0.25, 0.5)
        u = random_state(basis, seed=7)
        v = random_state(basis, seed=8)
        lhs = np.vdot(u.amplitudes, ptkr.floquet_step(v, params, "forward").amplitudes)
        rhs = np.vdot(ptkr.floquet_step(u, params, "adjoint").amplitudes, v.amplitudes)
        assert abs(lhs - rhs) < 1e-10

    def test_dynamical_localization_saturation(self):
        # Hermitian rotor: <p^2> saturates; late windows agree within 20%
        basis = ptkr.BasisSpec(1024, 1.0)
        params = ptkr.ModelParams(5.0, 0.0, 1.0)
        rec = ptkr.evolve_observables(params, basis, 10.0, 500)
        w1 = rec.p2[300:401].mean()
        w2 = rec.p2[400:501].mean()
        assert abs(w2 - w1) / w1 < 0.20

    def test_grid_overflow_raises(self):
        # ballistic broken-phase run on a deliberately tiny grid must abort
        basis = ptkr.BasisSpec(128, 0.3)
        params = ptkr.ModelParams(6.0, 0.9, 0.3)
        s = ptkr.gaussian_state(basis, 10.0)
        with pytest.raises(ptkr.GridOverflowError):
            for _ in range(200):
                s = ptkr.floquet_step(s, params, "forward")
                s.amplitudes /= np.sqrt(s.norm2())

    def test_direction_validation(self):
        basis = ptkr.BasisSpec(64, 1.0)
        params = ptkr.ModelParams(1.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            ptkr.floquet_step(random_state(basis), params, "backward")


class TestApplyP:
    def test_eigenstate_scaling(self):
        basis = ptkr.BasisSpec(16, 0.5)
        amp = np.zeros(16, dtype=complex)
        amp[8 + 3] = 1.0  # n = 3
        out = ptkr.apply_p(ptkr.WaveState(basis, amp))
        expected = amp * 1.5
        assert np.max(np.abs(out.amplitudes - expected)) < 1e-15

    def test_zero_momentum_eigenstate_raises(self):
        basis = ptkr.BasisSpec(16, 0.5)
        amp = np.zeros(16, dtype=complex)
        amp[8] = 1.0  # n = 0
        with pytest.raises(ptkr.ZeroStateError):
            ptkr.apply_p(ptkr.WaveState(basis, amp))

    def test_output_norm_is_direct_p2_sum(self):
        basis = ptkr.BasisSpec(1024, 0.3)
        state = ptkr.gaussian_state(basis, 10.0)
        out = ptkr.apply_p(state)
        direct = float(np.sum(basis.momentum_values() ** 2 * np.abs(state.amplitudes) ** 2))
        assert abs(out.norm2() - direct) < 1e-12


class TestObservables:
    def test_momentum_eigenstate_moments(self):
        basis = ptkr.BasisSpec(16, 1.0)
        amp = np.zeros(16, dtype=complex)
        amp[8 + 2] = 1.0  # n = 2
        obs = ptkr.observables(ptkr.WaveState(basis, amp))
        assert obs["p_mean"] == pytest.approx(2.0, abs=1e-12)
        assert obs["p2"] == pytest.approx(4.0, abs=1e-12)
        assert obs["p4"] == pytest.approx(16.0, abs=1e-12)

    def test_symmetric_superposition(self):
        basis = ptkr.BasisSpec(16, 1.0)
        amp = np.zeros(16, dtype=complex)
        amp[8 + 1] = amp[8 - 1] = 1.0 / np.sqrt(2)
        obs = ptkr.observables(ptkr.WaveState(basis, amp))
        assert abs(obs["p_mean"]) < 1e-12
        assert obs["p2"] == pytest.approx(1.0, abs=1e-12)

    def test_p_insertion_moment_identity(self):
        # <p^2> after apply_p equals <p^4>/<p^2> before
        basis = ptkr.BasisSpec(512, 0.3)
        state = ptkr.gaussian_state(basis, 10.0)
        before = ptkr.observables(state)
        after = ptkr.observables(ptkr.apply_p(state))
        assert after["p2"] == pytest.approx(before["p4"] / before["p2"], rel=1e-10)

    def test_densities_normalized(self):
        basis = ptkr.BasisSpec(256, 0.5)
        obs = ptkr.observables(random_state(basis, seed=9, normalize=False))
        assert obs["momentum_density"].sum() == pytest.approx(1.0, abs=1e-12)
        assert obs["angle_density"].sum() == pytest.approx(1.0, abs=1e-12)


class TestGuard:
    def test_tail_mass_reported(self):
        basis = ptkr.BasisSpec(128, 1.0)
        amp = np.zeros(128, dtype=complex)
        amp[0] = 1.0  # everything in the guard band
        assert ptkr.tail_mass(ptkr.WaveState(basis, amp)) == pytest.approx(1.0)

    def test_small_bases_exempt(self):
        assert GUARD_MIN_MODES > 16  # the dense-oracle regime stays guard-free
        basis = ptkr.BasisSpec(16, 1.0)
        params = ptkr.ModelParams(2.0, 0.3, 1.0)
        s = random_state(basis, seed=10)
        for _ in range(20):
            s = ptkr.floquet_step(s, params, "forward")
            s.amplitudes /= np.sqrt(s.norm2())
