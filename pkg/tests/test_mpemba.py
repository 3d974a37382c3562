import math

import numpy as np
import pytest

from pontus import (
    BlochVector,
    ContinuousClass,
    NotConverged,
    ParameterPoint,
    ProtocolResult,
    Trajectory,
    TwoStepClass,
    ZeroDenominator,
    classify_continuous,
    classify_two_step,
    count_crossings,
    gain,
    relevant_crossings,
    run_continuous,
    run_direct,
    run_two_step,
    two_step_distances,
)

PLANAR_S = ParameterPoint.make((0.707, 0.707, 0.0), (0.5, 0.1, 0.0), "S")
PLANAR_F = ParameterPoint.make((0.707, 0.707, 0.0), (0.01, 0.05, 0.0), "F")

DETOUR_S = ParameterPoint.make((0.0, 0.998, 0.062), (0.0, 0.2, 0.0), "S")
DETOUR_A = ParameterPoint.make((0.0, 2.0, 2.0), (1.0, 0.0, 0.0), "A")
DETOUR_F = ParameterPoint.make((0.0, -0.966, 0.258), (0.0, 0.2, 0.0), "F")

TILTED_S = ParameterPoint.make((0.183, 0.183, -0.966), (0.5, 0.1, 0.0), "S")
TILTED_F = ParameterPoint.make((0.183, 0.183, -0.966), (0.1, 0.5, 0.0), "F")


class TestGain:
    def test_reference_values(self):
        assert gain(160.0, 60.0).g == pytest.approx(160.0 / 60.0 - 1.0)

    def test_equal_times_give_zero(self):
        assert gain(37.2, 37.2).g == 0.0

    def test_quasi_static_limit_approaches_minus_one(self):
        assert gain(100.0, 1e12).g == pytest.approx(-1.0, abs=1e-9)

    def test_zero_denominator(self):
        with pytest.raises(ZeroDenominator):
            gain(10.0, 0.0)

    def test_scale_covariance(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            td, tc = rng.uniform(0.1, 500, 2)
            c = rng.uniform(0.01, 100)
            assert gain(c * td, c * tc).g == pytest.approx(gain(td, tc).g, rel=1e-12)


class TestCountCrossings:
    GRID = np.linspace(0, 10, 500)

    def test_identical_series(self):
        a = np.exp(-self.GRID)
        assert count_crossings(a, a.copy()) == 0

    def test_ordered_exponentials(self):
        a = np.exp(-self.GRID)
        assert count_crossings(a, 0.5 * a) == 0

    def test_single_crossing(self):
        a = np.exp(-self.GRID)
        b = 0.5 * np.exp(-0.5 * self.GRID)
        assert count_crossings(a, b) == 1

    def test_touching_without_crossing_counts_zero(self):
        a = np.abs(self.GRID - 5.0)
        b = np.zeros_like(a)
        assert count_crossings(a, b) == 0

    def test_small_excursions_are_ignored(self):
        a = np.ones_like(self.GRID)
        b = np.ones_like(self.GRID)
        b[200:210] += 5e-9  # below the default tolerance
        assert count_crossings(a, b) == 0

    def test_alternating_excursions(self):
        a = np.ones_like(self.GRID)
        b = np.ones_like(self.GRID)
        # below, above, below: two sign changes of the difference
        b[100:110] -= 1e-6
        b[200:210] += 1e-6
        b[300:310] -= 1e-6
        assert count_crossings(a, b) == 2
        # a repeated same-side dip returns to contact: no extra crossing
        b[400:410] -= 1e-6
        assert count_crossings(a, b) == 2


def _fake_result(dists, target, t_i=None, r_i=None, tau=None, kind="two-step"):
    """Synthetic converged result with a prescribed distance series."""
    n = len(dists)
    t = np.arange(n) * 0.05
    tgt = target.as_array()
    # place all samples along x so the recorded distances are exact
    r = np.column_stack([tgt[0] + 2 * np.asarray(dists), [tgt[1]] * n, [tgt[2]] * n])
    traj = Trajectory(
        t=t,
        r=r,
        rates=np.zeros((n, 3)),
        dist=np.asarray(dists, dtype=float),
        target=target,
        epsilon=1e-4,
        tau=tau,
        converged=True,
        distance_of=lambda x: float(np.interp(x, t, dists)),
    )
    return ProtocolResult(
        kind=kind,
        trajectory=traj,
        tau=tau,
        converged=True,
        inconclusive=False,
        timed_out=False,
        p_start=DETOUR_S,
        p_final=DETOUR_F,
        epsilon=1e-4,
        t_intermediate=t_i,
        r_intermediate=r_i,
    )


class TestClassifyTwoStep:
    DIRECT = run_direct(DETOUR_S, DETOUR_F)

    def test_degenerate_detour_is_no_effect(self):
        two = run_two_step(DETOUR_S, DETOUR_F, DETOUR_F, t_i=2.0)
        assert classify_two_step(two, self.DIRECT) is TwoStepClass.NO_EFFECT

    def test_weak_type_a_realized(self):
        two = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=0.35)
        assert classify_two_step(two, self.DIRECT) is TwoStepClass.WEAK_TYPE_A

    def test_weak_type_b_realized(self):
        two = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=1.2)
        assert classify_two_step(two, self.DIRECT) is TwoStepClass.WEAK_TYPE_B

    def test_strong_realized(self):
        two = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, t_i=2.1)
        cls = classify_two_step(two, self.DIRECT)
        assert cls is TwoStepClass.STRONG
        d_s, d_i, _ = two_step_distances(two, self.DIRECT)
        assert d_i >= d_s

    def test_unconverged_raises(self):
        from pontus import IntegratorConfig

        slow = run_two_step(DETOUR_S, DETOUR_A, DETOUR_F, 2.0, cfg=IntegratorConfig(t_cap=5.0))
        with pytest.raises(NotConverged):
            classify_two_step(slow, self.DIRECT)

    def test_depends_only_on_distances(self):
        # two synthetic runs whose switch states differ as vectors but agree
        # in distance must classify identically
        tgt = self.DIRECT.trajectory.target
        tarr = tgt.as_array()
        d_s = float(self.DIRECT.trajectory.dist[0])
        d_sf = float(self.DIRECT.trajectory.distance_of(1.0))
        d_i = 0.5 * (d_sf + d_s)  # strictly between: weak type-B territory
        east = tarr + [2 * d_i, 0, 0]
        up = tarr + [0, 0, 2 * d_i]
        for r_i in (east, up):
            fake = _fake_result(
                dists=np.linspace(d_s, 0.0, 200),
                target=tgt,
                t_i=1.0,
                r_i=np.asarray(r_i),
                tau=self.DIRECT.tau / 2,
            )
            assert classify_two_step(fake, self.DIRECT) is TwoStepClass.WEAK_TYPE_B
            _, got_d_i, _ = two_step_distances(fake, self.DIRECT)
            assert got_d_i == pytest.approx(d_i)


class TestClassifyContinuous:
    DIRECT = run_direct(PLANAR_S, PLANAR_F)

    def test_sudden_limit_is_no_effect(self):
        cpm = run_continuous(PLANAR_S, PLANAR_F, kappa=1e6, omega=0.0)
        assert classify_continuous(cpm, self.DIRECT) is ContinuousClass.NO_EFFECT

    def test_reference_case_classified_with_positive_gain(self):
        cpm = run_continuous(PLANAR_S, PLANAR_F, kappa=0.2, omega=0.0)
        cls = classify_continuous(cpm, self.DIRECT)
        # the ramp starts on its attractor with zero slope, so it separates
        # above the direct curve: the speed-up is of the strong kind here
        assert cls is ContinuousClass.STRONG
        assert gain(self.DIRECT.tau, cpm.tau).g > 0

    def test_parity_matches_strong_class(self):
        cpm = run_continuous(PLANAR_S, PLANAR_F, kappa=0.2, omega=0.0)
        assert relevant_crossings(cpm, self.DIRECT) % 2 == 1

    def test_inconclusive_takes_precedence(self):
        direct3 = run_direct(TILTED_S, TILTED_F)
        cpm = run_continuous(TILTED_S, TILTED_F, kappa=0.4, omega=0.45)
        assert classify_continuous(cpm, direct3) is ContinuousClass.INCONCLUSIVE

    def test_crossing_case_at_reference_time(self):
        direct3 = run_direct(TILTED_S, TILTED_F)
        cpm = run_continuous(TILTED_S, TILTED_F, kappa=0.6, omega=0.2)
        assert relevant_crossings(cpm, direct3) == 1
        assert gain(direct3.tau, cpm.tau).g > 0

    def test_slower_ramp_is_no_effect(self):
        cpm = run_continuous(PLANAR_S, PLANAR_F, kappa=0.035, omega=0.0)
        assert classify_continuous(cpm, self.DIRECT) is ContinuousClass.NO_EFFECT
        assert gain(self.DIRECT.tau, cpm.tau).g < 0

    def test_direct_against_itself_is_no_effect(self):
        assert (
            classify_continuous(self.DIRECT, self.DIRECT)
            is ContinuousClass.NO_EFFECT
        )
