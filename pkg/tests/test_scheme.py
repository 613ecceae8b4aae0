"""Time stepper: linear algebra, oracle cross-checks, batching, recording."""

import numpy as np
import pytest

from spdefem import drift, fem1d, noise, scheme
from spdefem.errors import InvalidArgumentError, NumericalBlowupError

from dense_reference import dense_one_step

CUBIC = drift.DriftPolynomial(q=2, coeffs=(0.0, 1.0, 0.0, -1.0))
TAMING = drift.TamingParams(alpha=0.25, theta=1.0, rho=2.0, beta1=1.0, beta2=1.0)


def ops_for(h_exp, L=1.0):
    return fem1d.assemble_operators(fem1d.build_mesh(L, 2**h_exp - 1))


def config_for(h_exp, tau, with_drift=True, initial=None, L=1.0):
    ops = ops_for(h_exp, L)
    if initial is None:
        initial = np.zeros(ops.mesh.n_interior)
    d = CUBIC if with_drift else None
    t = TAMING if with_drift else None
    return scheme.make_scheme_config(ops, d, t, tau, initial)


class TestShiftedOperator:
    def test_frozen_entries(self):
        # h = 1/4, tau = 1/8: main 2h/3 + 2 tau/h, off h/6 - tau/h
        cfg = config_for(2, 0.125, with_drift=False)
        A = scheme.shifted_tridiag(cfg.ops, cfg.tau)
        assert A.main[0] == pytest.approx(1.1666666666666667, rel=1e-15)
        assert A.off[0] == pytest.approx(-0.4583333333333333, rel=1e-15)

    def test_factorization_solves(self):
        cfg = config_for(4, 0.01, with_drift=False)
        A = scheme.shifted_tridiag(cfg.ops, cfg.tau)
        rhs = np.sin(np.arange(A.dim) + 0.3)
        x = scheme.shifted_operator(cfg).solve(rhs)
        assert np.allclose(fem1d.tridiag_matvec(A, x), rhs, atol=1e-13)


class TestConfigValidation:
    def test_tau_must_be_positive(self):
        ops = ops_for(3)
        with pytest.raises(InvalidArgumentError):
            scheme.make_scheme_config(ops, None, None, 0.0, np.zeros(7))

    def test_initial_length_checked(self):
        with pytest.raises(InvalidArgumentError):
            config_for(3, 0.1, initial=np.zeros(5))

    def test_initial_must_be_finite(self):
        bad = np.zeros(7)
        bad[2] = np.inf
        with pytest.raises(InvalidArgumentError):
            config_for(3, 0.1, initial=bad)

    def test_drift_requires_taming(self):
        ops = ops_for(3)
        with pytest.raises(InvalidArgumentError):
            scheme.make_scheme_config(ops, CUBIC, None, 0.1, np.zeros(7))

    def test_contraction_flag(self):
        # cubic one-sided constant is 1, below the smallest eigenvalue
        assert config_for(3, 0.1).contraction is True
        assert config_for(3, 0.1, with_drift=False).contraction is None


class TestSingleStepOracle:
    def test_matches_dense_reference(self):
        rng = np.random.default_rng(77)
        for trial in range(25):
            n = int(rng.integers(1, 9))
            L = float(rng.uniform(0.5, 3.0))
            tau = float(rng.uniform(0.01, 0.5))
            K = int(rng.integers(1, n + 1))
            x0 = rng.standard_normal(n)
            inc = rng.standard_normal(K) * 0.1
            ops = fem1d.assemble_operators(fem1d.build_mesh(L, n))
            cfg = scheme.make_scheme_config(ops, CUBIC, TAMING, tau, x0)
            load = fem1d.sine_load_matrix(ops.mesh, K) @ inc
            got = scheme.step(cfg, scheme.SchemeState(0, x0, 0.0), load).x
            expect = dense_one_step(x0, inc, L, tau, (0.0, 1.0, 0.0, -1.0), 2,
                                    0.25, 1.0, 2.0, 1.0, 1.0)
            assert np.allclose(got, expect, rtol=1e-10, atol=1e-13)

    def test_pure_heat_step_matches_dense(self):
        n, L, tau = 7, 1.0, 0.05
        x0 = np.sin(np.linspace(0.1, 2.0, n))
        ops = fem1d.assemble_operators(fem1d.build_mesh(L, n))
        cfg = scheme.make_scheme_config(ops, None, None, tau, x0)
        got = scheme.step(cfg, scheme.SchemeState(0, x0, 0.0), np.zeros(n)).x
        expect = dense_one_step(x0, np.zeros(1), L, tau, None, 2,
                                0.25, 1.0, 2.0, 0.0, 0.0)
        assert np.allclose(got, expect, rtol=1e-12)


class TestRunBehaviour:
    def test_heat_decay_monotone(self):
        ops = ops_for(5)
        v = fem1d.project_sine_coeffs(ops, np.array([1.0]))
        cfg = scheme.make_scheme_config(ops, None, None, 0.01, v)
        _, rec = scheme.run(cfg, None, scheme.RecordSpec(norms=False), n_steps=50)
        assert np.all(np.diff(rec.l2) < 0)

    def test_zero_noise_needs_step_count(self):
        cfg = config_for(3, 0.1, with_drift=False)
        with pytest.raises(InvalidArgumentError):
            scheme.run(cfg, None)

    def test_blowup_reported_with_location(self):
        # an absurd initial state overflows the cubic before taming bites
        ops = ops_for(3)
        big = np.full(7, 1e200)
        cfg = scheme.make_scheme_config(ops, CUBIC, TAMING, 0.1, big)
        with np.errstate(all="ignore"):
            with pytest.raises(NumericalBlowupError) as exc:
                scheme.run(cfg, None, n_steps=4)
        assert exc.value.step_index == 1

    def test_soft_cap_warns_once(self):
        ops = ops_for(3)
        cfg = scheme.make_scheme_config(ops, None, None, 0.1, np.full(7, 1e7))
        with pytest.warns(RuntimeWarning):
            scheme.run(cfg, None, n_steps=3)

    def test_final_state_time(self):
        cfg = config_for(3, 0.25, with_drift=False)
        state, _ = scheme.run(cfg, None, n_steps=8)
        assert state.m == 8
        assert state.t == pytest.approx(2.0)


class TestDrivingPathForms:
    def model(self):
        return noise.make_noise_model(0.5005, 4, 1.0)

    def test_tape_equals_increment_list(self):
        m = self.model()
        cfg = config_for(3, 1.0 / 16)
        tape = noise.make_path(m, 5, 1.0, 16)
        s1, _ = scheme.run(cfg, tape)
        s2, _ = scheme.run(cfg, tape.increments)
        assert np.array_equal(s1.x, s2.x)

    def test_tape_autocoarsens(self):
        m = self.model()
        cfg = config_for(3, 1.0 / 8)
        fine = noise.make_path(m, 5, 1.0, 64)     # 8x finer than tau
        s1, _ = scheme.run(cfg, fine)
        s2, _ = scheme.run(cfg, noise.coarsen_coeffs(fine.coeffs, 8))
        assert np.array_equal(s1.x, s2.x)

    def test_tape_coarser_than_tau_rejected(self):
        m = self.model()
        cfg = config_for(3, 1.0 / 32)
        with pytest.raises(InvalidArgumentError):
            scheme.run(cfg, noise.make_path(m, 5, 1.0, 16))

    def test_increment_tau_mismatch_rejected(self):
        m = self.model()
        cfg = config_for(3, 1.0 / 8)
        wrong = noise.make_path(m, 5, 1.0, 16).increments
        with pytest.raises(InvalidArgumentError):
            scheme.run(cfg, wrong)

    def test_batched_matches_sample_loop(self):
        m = self.model()
        cfg = config_for(3, 1.0 / 16)
        tapes = [noise.sample_tape_coeffs(m, 9, 1.0, 16, noise.stream_context(0, i))
                 for i in range(3)]
        batched, _ = scheme.run(cfg, np.stack(tapes, axis=2))
        for i, tape in enumerate(tapes):
            single, _ = scheme.run(cfg, tape)
            # matmul takes different BLAS paths for 1-D and 2-D operands,
            # so agreement is to round-off, not bitwise
            assert np.allclose(batched.x[:, i], single.x, rtol=1e-12, atol=1e-15)


class TestRecording:
    def test_stride_subsamples_without_perturbing(self):
        m = noise.make_noise_model(0.5005, 4, 1.0)
        cfg = config_for(3, 1.0 / 16)
        tape = noise.make_path(m, 5, 1.0, 16)
        s1, r1 = scheme.run(cfg, tape, scheme.RecordSpec(stride=1))
        s4, r4 = scheme.run(cfg, tape, scheme.RecordSpec(stride=4))
        assert np.array_equal(s1.x, s4.x)
        assert np.array_equal(r4.times, r1.times[::4])
        assert np.array_equal(r4.l2, r1.l2[::4])

    def test_recorded_quantities_match_manual(self):
        m = noise.make_noise_model(0.5005, 4, 1.0)
        cfg = config_for(4, 1.0 / 8)
        tape = noise.make_path(m, 6, 1.0, 8)
        spec = scheme.RecordSpec(norms=True, gamma=1.0,
                                 phi=lambda x, l2sq: np.sin(np.pi / 4 - l2sq))
        state, rec = scheme.run(cfg, tape, spec)
        x = state.x
        l2sq = fem1d.l2_norm_sq_mass(cfg.ops, x)
        assert rec.l2[-1] == pytest.approx(np.sqrt(l2sq), rel=1e-14)
        assert rec.l4[-1] == pytest.approx(fem1d.lp_norm(cfg.ops.mesh, x, 4), rel=1e-14)
        assert rec.l_high[-1] == pytest.approx(fem1d.lp_norm(cfg.ops.mesh, x, 12), rel=1e-14)
        # gamma = 1 seminorm is the stiffness quadratic form
        assert rec.hgamma_sq[-1] == pytest.approx(
            x @ fem1d.tridiag_matvec(cfg.ops.stiffness, x), rel=1e-13)
        assert rec.phi[-1] == pytest.approx(np.sin(np.pi / 4 - l2sq), rel=1e-14)

    def test_gamma_seminorm_uses_spectrum(self):
        cfg = config_for(4, 1.0 / 8, with_drift=False)
        spec_dec = fem1d.discrete_spectrum(cfg.ops)
        v = np.cos(np.linspace(0.0, 1.0, cfg.ops.mesh.n_interior))
        frac = fem1d.fractional_seminorm_sq(spec_dec, cfg.ops, 0.75, v)
        run_spec = scheme.RecordSpec(norms=False, gamma=0.75)
        _, rec = scheme.run(
            scheme.make_scheme_config(cfg.ops, None, None, 1.0 / 8, v),
            None, run_spec, n_steps=1)
        assert rec.hgamma_sq[0] == pytest.approx(frac, rel=1e-12)
