"""Adaptive-cruise benchmark: plant, barrier, nominal law, presets."""

from __future__ import annotations

import numpy as np
import pytest

from safehold.acc_benchmark import (
    SWEEP_FREQUENCIES,
    TUNINGS,
    X0_FAR,
    X0_NEAR,
    AccParams,
    acc_barrier,
    acc_closed_form_lie,
    acc_dynamics,
    acc_filter,
    acc_nominal,
    acc_scenarios,
    approach_region,
    build_scenario,
    certified_tuning,
    ride_region,
    thin_band_tuning,
    wide_band_tuning,
)
from safehold.cbf_core import lie_derivatives
from safehold.constants import boundary_points
from safehold.errors import ConfigurationError
from safehold.simulator import analyze, run


class TestParams:
    def test_default_values(self):
        p = AccParams()
        assert (p.mass, p.f0, p.f1, p.f2) == (1650.0, 0.1, 5.0, 0.25)
        assert (p.lead_speed, p.desired_speed) == (13.89, 24.0)
        assert (p.tracking_gain, p.headway) == (5.0, 1.8)

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            AccParams(mass=-1.0)
        with pytest.raises(ConfigurationError):
            AccParams(headway=0.0)
        with pytest.raises(ConfigurationError):
            AccParams(f1=float("nan"))


class TestPlant:
    def test_drift_hand_values_at_twenty(self):
        dyn = acc_dynamics()
        f = dyn.drift(np.array([0.0, 20.0, 300.0]))
        # resistance at v=20 is 0.1 + 100 + 100 = 200.1
        assert f[0] == 20.0
        assert f[1] == pytest.approx(-200.1 / 1650.0, rel=1e-12)
        assert f[2] == pytest.approx(13.89 - 20.0, rel=1e-12)

    def test_actuation_column_is_constant(self):
        dyn = acc_dynamics()
        for v in (1.0, 15.0, 30.0):
            g = dyn.actuation(np.array([0.0, v, 100.0]))
            assert g.shape == (3, 1)
            assert np.array_equal(g[:, 0], [0.0, 1.0 / 1650.0, 0.0])

    def test_nominal_hand_values(self):
        nom = acc_nominal()
        # v=20: tracking push plus resistance compensation
        assert nom(np.array([0.0, 20.0, 200.0]))[0] == pytest.approx(16700.1, rel=1e-12)
        # at the desired speed only resistance remains
        assert nom(np.array([0.0, 24.0, 200.0]))[0] == pytest.approx(264.1, rel=1e-12)

    def test_nominal_alone_tracks_the_desired_speed(self):
        # closed loop under the raw nominal: vdot = -(gain/2)(v - v_d); the
        # speed must relax at that rate (within 2%) and never overshoot
        p = AccParams()
        dyn = acc_dynamics(p)
        nom = acc_nominal(p)
        x = np.array([0.0, 20.0, 5000.0])
        dt = 1e-3
        rate = p.tracking_gain / 2.0
        vs = [x[1]]
        from safehold.simulator import rk4_step
        for _ in range(2000):
            x = rk4_step(dyn, x, nom(x), dt)
            vs.append(x[1])
        vs = np.array(vs)
        assert np.all(vs <= p.desired_speed + 1e-9)
        measured = -np.log((p.desired_speed - vs[-1]) / (p.desired_speed - vs[0])) / 2.0
        assert measured == pytest.approx(rate, rel=0.02)


class TestBarrier:
    def test_values_at_the_named_starts(self):
        barrier = acc_barrier()
        assert barrier.value(np.asarray(X0_FAR)) == pytest.approx(280.0, abs=1e-12)
        assert barrier.value(np.asarray(X0_NEAR)) == pytest.approx(15.0, abs=1e-12)

    def test_gradient(self):
        barrier = acc_barrier()
        g = barrier.gradient(np.array([12.0, 20.0, 300.0]))
        assert np.array_equal(g, [0.0, -2.0 * 1.8 * 20.0, 1.0])

    def test_zero_on_the_braking_parabola(self):
        barrier = acc_barrier()
        for v in (5.0, 17.0, 29.0):
            assert barrier.value(np.array([0.0, v, 1.8 * v * v])) == pytest.approx(0.0, abs=1e-12)

    def test_boundary_points_obey_the_parabola(self):
        barrier = acc_barrier()
        pts = boundary_points(approach_region(), barrier, 128)
        for p in pts:
            assert p[2] == pytest.approx(1.8 * p[1] ** 2, rel=1e-9)


class TestLieDerivatives:
    def test_actuation_row_hand_value(self):
        p = AccParams()
        _, lgh = acc_closed_form_lie(p, np.array([0.0, 20.0, 300.0]))
        assert lgh[0] == pytest.approx(-72.0 / 1650.0, rel=1e-12)

    def test_closed_form_agrees_with_generic_route(self):
        p = AccParams()
        dyn, barrier = acc_dynamics(p), acc_barrier(p)
        rng = np.random.default_rng(101)
        pts = approach_region().sample(rng, 1000)
        for x in pts:
            lfh_c, lgh_c = acc_closed_form_lie(p, x)
            lfh_g, lgh_g = lie_derivatives(dyn, barrier, x)
            assert lfh_c == pytest.approx(lfh_g, rel=1e-10, abs=1e-10)
            assert lgh_c[0] == pytest.approx(lgh_g[0], rel=1e-10, abs=1e-10)


class TestRegions:
    def test_boxes(self):
        a = approach_region()
        assert a.lower == (0.0, 1.0, 5.0) and a.upper == (2000.0, 30.0, 1200.0)
        r = ride_region()
        assert r.lower == (0.0, 16.5, 590.0) and r.upper == (500.0, 20.5, 740.0)

    def test_named_starts_live_in_the_approach_box(self):
        a = approach_region()
        assert a.contains(np.asarray(X0_FAR)) and a.contains(np.asarray(X0_NEAR))


class TestTuningPresets:
    def test_registry_and_factories_agree(self):
        assert set(TUNINGS) == {"thin-band", "wide-band", "certified"}
        assert TUNINGS["thin-band"]() == thin_band_tuning()
        assert TUNINGS["wide-band"]() == wide_band_tuning()
        assert TUNINGS["certified"]() == certified_tuning()

    def test_thin_band_values(self):
        t = thin_band_tuning()
        assert (t.c, t.delta, t.band, t.epsilon, t.margin) == (9.18, 5e-4, 5e-3, 1.0, 0.004)

    def test_wide_band_values(self):
        t = wide_band_tuning()
        assert (t.c, t.delta, t.band, t.margin) == (9.18, 0.5, 5.0, 0.004)
        assert t.epsilon == pytest.approx(1.0 / 3000.0, rel=1e-12)
        assert t.sharpness == 0.25

    def test_certified_values(self):
        t = certified_tuning()
        assert (t.c, t.delta, t.band, t.epsilon, t.margin) == (3.0, 1.0, 10.0, 1.5e-4, 2.0)


class TestBuildScenario:
    def test_error_paths_name_the_problem(self):
        with pytest.raises(ConfigurationError, match="kind"):
            build_scenario("nope")
        with pytest.raises(ConfigurationError, match="period"):
            build_scenario("periodic")
        with pytest.raises(ConfigurationError, match="setting"):
            build_scenario("event", setting="nope")
        with pytest.raises(ConfigurationError, match="tuning"):
            build_scenario("event", tuning="nope")

    def test_periodic_defaults_to_the_near_start(self):
        sc = build_scenario("periodic", period=0.5)
        assert tuple(sc.x0) == X0_NEAR

    def test_event_on_approach_defaults_to_the_far_start(self):
        sc = build_scenario("event")
        assert tuple(sc.x0) == X0_FAR

    def test_amplification_reaches_the_trigger(self):
        sc = build_scenario("event")
        assert sc.trigger_c == wide_band_tuning().c

    def test_floor_is_wired_through(self):
        sc = build_scenario("event", floor=0.25)
        assert sc.schedule.floor == 0.25


class TestScenarioFamily:
    def test_twelve_scenarios_with_a_shared_start(self):
        family = acc_scenarios()
        assert len(family) == 12
        names = [s.name for s in family]
        assert len(set(names)) == 12
        for s in family:
            assert tuple(s.x0) == X0_NEAR
            assert s.integrator.horizon == 60.0
            assert s.barrier.value(np.asarray(s.x0)) > 0.0

    def test_sweep_frequencies_cover_both_controllers(self):
        family = {s.name: s for s in acc_scenarios()}
        assert SWEEP_FREQUENCIES == (0.5, 1.0, 2.0, 5.0, 10.0)
        for f in SWEEP_FREQUENCIES:
            plain = family[f"acc-periodic-{f:g}hz"]
            boosted = family[f"acc-periodic-boosted-{f:g}hz"]
            # controlled comparison: same schedule, same start, same plant
            assert plain.schedule.period == boosted.schedule.period == pytest.approx(1.0 / f)
            assert tuple(plain.x0) == tuple(boosted.x0)
            assert plain.trigger_c == boosted.trigger_c

    def test_family_includes_the_event_run(self):
        family = {s.name: s for s in acc_scenarios()}
        assert family["acc-event"].schedule.mode == "event"
        assert family["acc-periodic-boosted-2.5hz"].schedule.period == pytest.approx(0.4)

    def test_custom_params_propagate(self):
        p = AccParams(mass=1500.0)
        sc = build_scenario("periodic", period=0.5, params=p)
        g = sc.dynamics.actuation(np.asarray(sc.x0))
        assert g[1, 0] == pytest.approx(1.0 / 1500.0, rel=1e-15)


class TestFilteredLoopSpotCheck:
    def test_boosted_loop_dual_route_consistency(self):
        # one closed-loop step through the public scenario equals composing
        # the exported pieces by hand
        sc = build_scenario("periodic-boosted", period=0.5, horizon=0.01, substep=0.01)
        tr = run(sc)
        filt = acc_filter()
        from safehold.safety_filter import tunable_control
        u_hand = tunable_control(filt, wide_band_tuning().sigmoid, np.asarray(sc.x0))
        assert tr.u[0, 0] == pytest.approx(u_hand[0], rel=1e-12)

    def test_plain_short_run_summary_shape(self):
        sc = build_scenario("periodic", period=0.1, horizon=0.5)
        s = analyze(run(sc))
        assert s.num_events == 5
        assert s.min_h > 0.0
