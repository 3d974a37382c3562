import math

import numpy as np
import pytest

from pontus import (
    ExponentialCosineSchedule,
    FieldVector,
    IntegratorConfig,
    NotConverged,
    ParameterPoint,
    PiecewiseTwoStepSchedule,
    RateTriple,
    rate_at,
    relaxation_time,
    run_continuous,
    run_direct,
    run_two_step,
)

PLANAR_S = ParameterPoint.make((0.707, 0.707, 0.0), (0.5, 0.1, 0.0), "S")
PLANAR_F = ParameterPoint.make((0.707, 0.707, 0.0), (0.01, 0.05, 0.0), "F")

DETOUR_S = ParameterPoint.make((0.0, 0.998, 0.062), (0.0, 0.2, 0.0), "S")
DETOUR_A = ParameterPoint.make((0.0, 2.0, 2.0), (1.0, 0.0, 0.0), "A")
DETOUR_F = ParameterPoint.make((0.0, -0.966, 0.258), (0.0, 0.2, 0.0), "F")

# pure relaxation along z from the north pole: distance exp(-0.2 t), so the
# 1e-4 cutoff is crossed at ln(1e4)/0.2
Z_S = ParameterPoint.make((0.0, 0.0, 0.5), (1.0, 0.0, 0.0), "S")  # north pole
Z_F = ParameterPoint.make((0.0, 0.0, 0.5), (0.0, 0.2, 0.0), "F")  # south pole
TAU_Z = math.log(1e4) / 0.2


def exp_cos(kappa, omega, gs=PLANAR_S, gf=PLANAR_F):
    return ExponentialCosineSchedule(
        gamma_s=gs.gamma, gamma_f=gf.gamma, h=gs.h, kappa=kappa, omega=omega
    )


class TestRateAt:
    def test_starts_at_initial_rates(self):
        s = exp_cos(0.3, 1.7)
        assert np.array_equal(rate_at(s, 0.0).as_array(), PLANAR_S.gamma.as_array())

    def test_damped_value(self):
        s = ExponentialCosineSchedule(
            gamma_s=RateTriple(0.5, 0, 0),
            gamma_f=RateTriple(0.01, 0, 0),
            h=FieldVector(1, 0, 0),
            kappa=0.2,
            omega=0.0,
        )
        expected = 0.01 + 0.49 * math.exp(-1.0)  # = 0.190268...
        assert rate_at(s, 5.0).gamma_plus == pytest.approx(expected, abs=1e-15)

    def test_two_step_switches_after_t_i(self):
        s = PiecewiseTwoStepSchedule(DETOUR_A, DETOUR_F, t_i=2.0)
        assert np.array_equal(rate_at(s, 2.0).as_array(), DETOUR_A.gamma.as_array())
        assert np.array_equal(
            rate_at(s, 2.0 + 1e-12).as_array(), DETOUR_F.gamma.as_array()
        )

    def test_negative_instants_under_oscillation(self):
        s = exp_cos(0.1, 1.0)
        g = rate_at(s, math.pi)  # cosine trough
        assert g.gamma_plus < 0

    def test_rejects_negative_times(self):
        with pytest.raises(ValueError):
            rate_at(exp_cos(0.2, 0.0), -1.0)


class TestScheduleProperties:
    def test_envelope_bounds_deviation_from_final(self):
        s = exp_cos(0.37, 2.1)
        dg = np.abs(PLANAR_S.gamma.as_array() - PLANAR_F.gamma.as_array())
        for t in np.linspace(0, 40, 400):
            dev = np.abs(s.rates(t) - PLANAR_F.gamma.as_array())
            assert np.all(dev <= dg * math.exp(-0.37 * t) + 1e-15)

    def test_rates_array_matches_scalar_path(self):
        s = exp_cos(0.37, 2.1)
        ts = np.linspace(0, 10, 97)
        arr = s.rates_array(ts)
        for k in (0, 13, 96):
            assert np.allclose(arr[k], s.rates(ts[k]), atol=1e-15)


class TestRunDirect:
    def test_identical_endpoints_relax_instantly(self):
        res = run_direct(PLANAR_S, PLANAR_S)
        assert res.converged and res.tau == 0.0

    def test_analytic_z_relaxation_time(self):
        res = run_direct(Z_S, Z_F)
        assert res.converged
        assert res.tau == pytest.approx(TAU_Z, abs=1e-6)
        assert not res.inconclusive

    def test_reference_relaxation_time(self):
        res = run_direct(PLANAR_S, PLANAR_F)
        assert res.converged
        assert abs(res.tau - 160.0) <= 16.0

    def test_distance_monotone_non_increasing(self):
        res = run_direct(PLANAR_S, PLANAR_F)
        assert np.all(np.diff(res.trajectory.dist) <= 1e-10)

    def test_timeout_flagged(self):
        res = run_direct(PLANAR_S, PLANAR_F, cfg=IntegratorConfig(t_cap=5.0))
        assert res.timed_out and not res.converged and res.tau is None


class TestRunTwoStep:
    def test_small_detour_approaches_direct(self):
        direct = run_direct(DETOUR_S, DETOUR_F)
        two = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=0.01)
        assert abs(two.tau - direct.tau) < 0.2

    def test_degenerate_detour_equals_direct(self):
        direct = run_direct(DETOUR_S, DETOUR_F)
        two = run_two_step(DETOUR_S, DETOUR_F, DETOUR_F, t_i=3.0)
        assert two.converged
        assert two.tau == pytest.approx(direct.tau, abs=1e-9)

    def test_first_stage_contracts_toward_auxiliary_attractor(self):
        from pontus import assemble_generator, steady_state

        res = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=8.0)
        r_a = steady_state(assemble_generator(DETOUR_A)).as_array()
        stage = res.trajectory.r[res.trajectory.t <= 8.0]
        d_to_a = 0.5 * np.linalg.norm(stage - r_a, axis=1)
        assert np.all(np.diff(d_to_a) <= 1e-10)

    def test_distance_to_final_not_monotone_during_detour(self):
        res = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=8.0)
        stage = res.trajectory.dist[res.trajectory.t <= 8.0]
        assert np.any(np.diff(stage) > 1e-6)

    def test_records_switch_state(self):
        res = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=2.1)
        assert res.t_intermediate == 2.1
        k = np.searchsorted(res.trajectory.t, 2.1)
        assert np.allclose(res.trajectory.r[k], res.r_intermediate, atol=1e-12)

    def test_rejects_bad_switch_times(self):
        with pytest.raises(ValueError):
            run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=0.0)
        with pytest.raises(ValueError):
            run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=1e5)


class TestRunContinuous:
    def test_sudden_limit_recovers_direct(self):
        direct = run_direct(PLANAR_S, PLANAR_F)
        fast = run_continuous(PLANAR_S, PLANAR_F, kappa=1e6, omega=0.0)
        assert abs(fast.tau - direct.tau) / direct.tau < 0.01

    def test_reference_speedup(self):
        res = run_continuous(PLANAR_S, PLANAR_F, kappa=0.2, omega=0.0)
        assert res.converged
        assert abs(res.tau - 60.0) <= 6.0
        assert not res.inconclusive

    def test_slow_ramp_is_slower_than_direct(self):
        res = run_continuous(PLANAR_S, PLANAR_F, kappa=0.035, omega=0.0)
        assert abs(res.tau - 200.0) <= 20.0

    def test_quasi_static_exhausts_time_cap(self):
        res = run_continuous(
            PLANAR_S, PLANAR_F, kappa=1e-4, omega=0.0, cfg=IntegratorConfig(t_cap=200.0)
        )
        assert res.timed_out and not res.converged

    def test_requires_static_field(self):
        other = ParameterPoint.make((0.5, 0.5, 0.1), (0.01, 0.05, 0.0), "F")
        with pytest.raises(ValueError):
            run_continuous(PLANAR_S, other, kappa=0.2, omega=0.0)

    def test_final_samples_satisfy_stop_rule(self):
        eps = 1e-4
        res = run_continuous(PLANAR_S, PLANAR_F, kappa=0.2, omega=0.0, eps=eps)
        traj = res.trajectory
        # the stop event roots exactly on the boundary of the rule
        assert traj.dist[-1] <= eps / 10 + 1e-12
        assert traj.modulation.envelope(traj.t[-1]) <= eps + 1e-12


class TestRelaxationTime:
    def test_monotone_exponential_series(self):
        res = run_direct(Z_S, Z_F)
        tau, inconclusive = relaxation_time(res.trajectory, 1e-4)
        assert tau == pytest.approx(TAU_Z, abs=1e-6)
        assert not inconclusive

    def test_series_entirely_below_cutoff(self):
        res = run_direct(PLANAR_S, PLANAR_S)
        tau, inconclusive = relaxation_time(res.trajectory, 1e-4)
        assert tau == 0.0 and not inconclusive

    def test_timed_out_trajectory_raises(self):
        res = run_direct(PLANAR_S, PLANAR_F, cfg=IntegratorConfig(t_cap=5.0))
        with pytest.raises(NotConverged):
            relaxation_time(res.trajectory, 1e-4)

    def test_oscillatory_crossing_is_inconclusive(self):
        # cutoff reached while the rate modulation is still above it
        s = ParameterPoint.make((0.183, 0.183, -0.966), (0.5, 0.1, 0.0), "S")
        f = ParameterPoint.make((0.183, 0.183, -0.966), (0.1, 0.5, 0.0), "F")
        res = run_continuous(s, f, kappa=0.4, omega=0.45)
        assert res.converged and res.inconclusive
        env = res.trajectory.modulation.envelope(res.tau)
        assert env > res.epsilon

    def test_late_crossing_is_conclusive(self):
        s = ParameterPoint.make((0.183, 0.183, -0.966), (0.5, 0.1, 0.0), "S")
        f = ParameterPoint.make((0.183, 0.183, -0.966), (0.1, 0.5, 0.0), "F")
        res = run_continuous(s, f, kappa=0.6, omega=0.2)
        assert res.converged and not res.inconclusive
