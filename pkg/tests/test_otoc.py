"""OTOC engine: protocol bookkeeping, oracle agreement, reversal diagnostics."""

import numpy as np
import pytest

import ptkr


BASIS8 = ptkr.BasisSpec(8, 1.0)
PARAMS8 = ptkr.ModelParams(1.0, 0.1, 1.0)


class TestSampleTimes:
    def test_log_schedule(self):
        times = ptkr.log_sample_times(2500, 40)
        assert times[0] == 0
        assert times[1] == 1
        assert times[-1] == 2500
        assert np.all(np.diff(times) > 0)

    def test_t_zero(self):
        assert list(ptkr.log_sample_times(0)) == [0]

    def test_linear_schedule(self):
        times = ptkr.linear_sample_times(100, 10)
        assert times[0] == 0 and times[-1] == 100
        assert np.all(np.diff(times) > 0)


class TestForwardTrajectory:
    def test_t_max_zero(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 0)
        assert traj.t_max == 0
        assert set(traj.snapshots) == {0}
        assert traj.psi.p2.shape == (1,)

    def test_initial_phi_is_p_psi(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 0)
        psi0 = ptkr.gaussian_state(BASIS8, 1.0)
        phi0 = psi0.amplitudes * BASIS8.momentum_values()
        phi0 /= np.linalg.norm(phi0)
        assert np.max(np.abs(traj.state_pair_at(0)[1] - phi0)) < 1e-14

    def test_unitary_case_norms_stay_one(self):
        basis = ptkr.BasisSpec(4096, 0.3)
        params = ptkr.ModelParams(6.0, 0.0, 0.3)
        traj = ptkr.build_forward_trajectory(params, basis, 10.0, 100)
        # growth factors are the pre-forcing norms; unitary evolution keeps them at 1
        assert np.max(np.abs(traj.psi.growth - 1.0)) < 1e-12
        assert np.max(np.abs(traj.phi.growth - 1.0)) < 1e-12
        for t in (0, 50, 100):
            pair = traj.state_pair_at(t)
            assert np.sum(np.abs(pair[0]) ** 2) == pytest.approx(1.0, abs=1e-12)

    def test_stride_recompute_bitwise_identical(self):
        params = ptkr.ModelParams(2.0, 0.2, 1.0)
        basis = ptkr.BasisSpec(16, 1.0)
        full = ptkr.build_forward_trajectory(params, basis, 1.0, 20, storage_stride=1)
        strided = ptkr.build_forward_trajectory(params, basis, 1.0, 20, storage_stride=7)
        for t in range(21):
            a = full.state_pair_at(t)
            b = strided.state_pair_at(t)
            assert np.array_equal(a, b)

    def test_forced_norm_invariant(self):
        basis = ptkr.BasisSpec(1024, 0.5)
        params = ptkr.ModelParams(3.0, 0.2, 0.5)
        traj = ptkr.build_forward_trajectory(params, basis, 10.0, 50)
        for t in (10, 37, 50):
            pair = traj.state_pair_at(t)
            norms = np.sum(np.abs(pair) ** 2, axis=-1)
            assert np.max(np.abs(norms - 1.0)) < 1e-10


class TestBackwardPass:
    def test_zero_steps_is_p_insertion(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 5)
        bp = ptkr.backward_pass(traj, 0)
        p = BASIS8.momentum_values()
        psi0 = ptkr.gaussian_state(BASIS8, 1.0).amplitudes
        want_psi = p * psi0
        want_phi = p * p * psi0
        assert np.max(np.abs(bp.psi_r - want_psi / np.linalg.norm(want_psi))) < 1e-12
        assert np.max(np.abs(bp.phi_r - want_phi / np.linalg.norm(want_phi))) < 1e-12
        assert bp.norm_psi == pytest.approx(np.sum(p**2 * np.abs(psi0) ** 2), rel=1e-12)

    def test_hermitian_diagnostic_reversal(self):
        # lambda=0, skip the p insertions: the packet must come back exactly
        basis = ptkr.BasisSpec(4096, 0.3)
        params = ptkr.ModelParams(6.0, 0.0, 0.3)
        traj = ptkr.build_forward_trajectory(params, basis, 10.0, 200)
        bp = ptkr.backward_pass(traj, 200, insert_p=False)
        initial = ptkr.gaussian_state(basis, 10.0)
        fid = ptkr.fidelity(ptkr.WaveState(basis, bp.psi_r), initial)
        assert fid > 1.0 - 1e-9

    def test_diagnostic_ratio_is_unity(self):
        basis = ptkr.BasisSpec(1024, 0.5)
        params = ptkr.ModelParams(4.0, 0.0, 0.5)
        traj = ptkr.build_forward_trajectory(params, basis, 10.0, 100)
        bp = ptkr.backward_pass(traj, 100, insert_p=False)
        rrs = ptkr.reversal_ratio_series(traj, 100, bp)
        assert np.max(np.abs(rrs.ratio - 1.0)) < 1e-8

    def test_backward_series_shape(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 6)
        bp = ptkr.backward_pass(traj, 6)
        assert list(bp.times) == [6, 5, 4, 3, 2, 1, 0]
        assert bp.p2.shape == (2, 7)
        # label t_n entry carries the p-insertion jump <p^4>/<p^2>
        pair = traj.state_pair_at(6)
        p = BASIS8.momentum_values()
        dens = np.abs(pair[0]) ** 2
        dens /= dens.sum()
        jump = np.sum(p**4 * dens) / np.sum(p**2 * dens)
        assert bp.p2[0, 0] == pytest.approx(jump, rel=1e-12)


class TestOtocPoint:
    def test_zero_time_commutator_vanishes(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 0)
        pt = ptkr.otoc_point(traj, 0)
        # C1 = C2 = C3 = <p^4> at t = 0, so c cancels
        assert pt.c1 == pytest.approx(pt.c2, rel=1e-12)
        assert pt.c3.real == pytest.approx(pt.c1, rel=1e-12)
        assert abs(pt.c) < 1e-10 * pt.c1

    def test_ledger_identity_exact(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 4)
        pt = ptkr.otoc_point(traj, 4)
        assert pt.c == pt.c1 + pt.c2 - 2.0 * pt.c3.real  # bit-for-bit
        assert pt.c1 == pt.p2_r_t0 * pt.norm_r_t0

    def test_matches_dense_oracle(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 3)
        for t_n in (1, 2, 3):
            pt = ptkr.otoc_point(traj, t_n)
            ref = ptkr.dense_otoc_point(PARAMS8, BASIS8, 1.0, t_n)
            assert pt.c1 == pytest.approx(ref["c1"], rel=1e-9)
            assert pt.c2 == pytest.approx(ref["c2"], rel=1e-9)
            assert pt.c3 == pytest.approx(ref["c3"], rel=1e-9)
            assert pt.c == pytest.approx(ref["c"], rel=1e-9)

    def test_hermitian_cross_check_n16(self):
        basis = ptkr.BasisSpec(16, 1.0)
        params = ptkr.ModelParams(2.0, 0.0, 1.0)
        traj = ptkr.build_forward_trajectory(params, basis, 1.0, 5)
        pt = ptkr.otoc_point(traj, 5)
        ref = ptkr.dense_otoc_point(params, basis, 1.0, 5)
        assert pt.c1 == pytest.approx(ref["c1"], rel=1e-9)
        assert pt.c == pytest.approx(ref["c"], rel=1e-9)

    def test_shared_trajectory_consistency(self):
        short = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 3)
        long = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 10)
        a = ptkr.otoc_point(short, 3)
        b = ptkr.otoc_point(long, 3)
        assert (a.c1, a.c2, a.c3, a.c) == (b.c1, b.c2, b.c3, b.c)


class TestDenseOracle:
    def test_rejects_large_basis(self):
        with pytest.raises(ValueError):
            ptkr.dense_otoc_point(PARAMS8, ptkr.BasisSpec(32, 1.0), 1.0, 1)

    def test_free_rotor_commutes(self):
        # K = 0: U is diagonal in p, so [p(t), p] = 0 identically
        params = ptkr.ModelParams(0.0, 0.0, 1.0)
        for t_n in (0, 1, 4):
            ref = ptkr.dense_otoc_point(params, BASIS8, 1.0, t_n)
            assert abs(ref["c"]) < 1e-10 * ref["c1"]

    def test_unitary_dense_matrix(self):
        basis = ptkr.BasisSpec(16, 0.5)
        params = ptkr.ModelParams(2.0, 0.0, 0.5)
        u = ptkr.dense_floquet_matrix(basis, params)
        assert np.max(np.abs(u @ u.conj().T - np.eye(16))) < 1e-12


class TestOtocSeries:
    def test_series_matches_pointwise_calls(self):
        series = ptkr.otoc_series(PARAMS8, BASIS8, 1.0, [0, 1, 3, 5])
        assert [p.t for p in series.points] == [0, 1, 3, 5]
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 5)
        for pt in series.points:
            ref = ptkr.otoc_point(traj, pt.t)
            assert pt.c == ref.c

    def test_failures_recorded_not_dropped(self):
        # n = 0 eigenstate evolved by the free rotor stays an eigenstate, so
        # the p insertion annihilates it; engineer that via a direct call
        basis = ptkr.BasisSpec(16, 1.0)
        params = ptkr.ModelParams(0.0, 0.0, 1.0)
        traj = ptkr.build_forward_trajectory(params, basis, 1.0, 2)
        # overwrite the stored packet with the n=0 eigenstate on both branches
        eig = np.zeros(16, dtype=complex)
        eig[8] = 1.0
        traj.snapshots[2] = np.stack([eig, eig])
        series = ptkr.otoc_series_from_trajectory(traj, [0, 2])
        assert [p.t for p in series.points] == [0]
        assert len(series.failures) == 1
        assert series.failures[0][0] == 2
        assert "ZeroStateError" in series.failures[0][1]

    def test_arrays_columns(self):
        series = ptkr.otoc_series(PARAMS8, BASIS8, 1.0, [0, 1, 2])
        arr = series.arrays()
        assert set(arr) == {"t", "c1", "c2", "re_c3", "im_c3", "c", "p2_r_t0", "norm_r_t0"}
        assert np.allclose(arr["c"], arr["c1"] + arr["c2"] - 2 * arr["re_c3"])

    def test_empty_times_rejected(self):
        with pytest.raises(ValueError):
            ptkr.otoc_series(PARAMS8, BASIS8, 1.0, [])


class TestReversalRatio:
    def test_axes(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 5)
        rrs = ptkr.reversal_ratio_series(traj, 5)
        assert list(rrs.times) == [0, 1, 2, 3, 4, 5]
        assert list(rrs.times_doubled) == [10, 9, 8, 7, 6, 5]
        assert rrs.ratio.shape == (6,)

    def test_mismatched_backward_rejected(self):
        traj = ptkr.build_forward_trajectory(PARAMS8, BASIS8, 1.0, 5)
        bp = ptkr.backward_pass(traj, 3)
        with pytest.raises(ValueError):
            ptkr.reversal_ratio_series(traj, 5, bp)
