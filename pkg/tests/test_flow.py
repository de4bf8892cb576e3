import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from csf3d import geometry
from csf3d.errors import DegenerateParametrizationError, InvalidArgumentError
from csf3d.flow import (
    FlowState,
    Mode,
    StepControl,
    StopRule,
    rhs_physical,
    rhs_rescaled,
    run,
    stable_dt,
    step,
)
from csf3d.geometry import DiscreteCurve
from csf3d.scenarios import ScenarioSpec, circle_oracle, make_curve, rescaled_circle_radius

from conftest import circle_fn, make

SQRT2 = np.sqrt(2.0)


def radii(curve):
    return np.linalg.norm(curve.nodes, axis=1)


class TestControl:
    @pytest.mark.parametrize(
        "kwargs",
        [{"safety": 0.0}, {"safety": 1.5}, {"dt_min": 0.0}, {"redistribute_every": -1}, {"scheme": "x"}],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            StepControl(**kwargs)

    def test_mode_defaults(self):
        assert StepControl.for_mode("physical").redistribute_every == 10
        assert StepControl.for_mode("rescaled").redistribute_every == 0
        assert StepControl.for_mode("rescaled", redistribute_every=5).redistribute_every == 5

    def test_stop_rule_needs_a_condition(self):
        with pytest.raises(InvalidArgumentError):
            StopRule()
        with pytest.raises(InvalidArgumentError):
            StopRule(max_steps=-1)


class TestRhs:
    def test_unit_circle_points_inward(self, unit_circle):
        x = unit_circle.x
        expected = np.stack([-np.cos(x), -np.sin(x), 0 * x], axis=1)
        np.testing.assert_allclose(rhs_physical(unit_circle), expected, atol=1e-12)

    @pytest.mark.parametrize("r", [0.5, 2.0, 3.0])
    def test_circle_speed_is_inverse_radius(self, r):
        c = make(circle_fn(r, (0.3, -0.2, 1.0)))
        v = rhs_physical(c)
        inward = -(c.nodes - [0.3, -0.2, 1.0]) / r
        np.testing.assert_allclose(v, inward / r, atol=1e-12)

    def test_zero_velocity_where_second_derivative_is_parallel(self):
        # u'' vanishes at x = 0 and x = pi for this planar figure eight
        c = make(lambda x: (np.sin(x), np.sin(2 * x), 0 * x), 64)
        v = rhs_physical(c)
        assert np.linalg.norm(v[0]) <= 1e-12
        assert np.linalg.norm(v[32]) <= 1e-12

    def test_degenerate_speed(self):
        with pytest.raises(DegenerateParametrizationError):
            rhs_physical(DiscreteCurve(np.ones((16, 3))))

    def test_soliton_is_stationary(self):
        assert np.max(np.abs(rhs_rescaled(make(circle_fn(SQRT2))))) <= 1e-12

    @pytest.mark.parametrize("r, expected", [(1.0, -0.5), (2.0, 0.5), (SQRT2, 0.0)])
    def test_rescaled_radial_velocity(self, r, expected):
        c = make(circle_fn(r))
        radial = np.einsum("ij,ij->i", rhs_rescaled(c), c.nodes) / r
        np.testing.assert_allclose(radial, expected, atol=1e-12)

    def test_fd4_scheme_agrees(self, twisted):
        a = rhs_physical(twisted)
        b = rhs_physical(twisted, scheme="fd4")
        assert np.max(np.abs(a - b)) < 1e-4


class TestStableDt:
    def test_bound(self, unit_circle):
        dt = stable_dt(unit_circle, StepControl(safety=0.5))
        assert 0 < dt <= (2 * np.pi / 128) ** 2

    def test_quarter_per_doubling(self):
        ctl = StepControl()
        ratio = stable_dt(make(circle_fn(), 64), ctl) / stable_dt(make(circle_fn(), 128), ctl)
        assert 3.5 <= ratio <= 4.5

    def test_clamped_by_dt_min(self, unit_circle):
        assert stable_dt(unit_circle, StepControl(dt_min=0.5)) == 0.5


class TestStep:
    def test_circle_oracle_single_step(self, unit_circle):
        out = step(FlowState(unit_circle), 1e-4, StepControl())
        np.testing.assert_allclose(radii(out.curve), np.sqrt(1 - 2e-4), atol=1e-8)
        assert out.clock == 1e-4 and out.steps == 1

    def test_soliton_does_not_move(self):
        c = make(circle_fn(SQRT2))
        state = FlowState(c, 0.0, Mode.RESCALED)
        ctl = StepControl.for_mode("rescaled")
        out = step(state, stable_dt(c, ctl, Mode.RESCALED), ctl)
        assert np.max(np.abs(out.curve.nodes - c.nodes)) <= 1e-10

    def test_zero_step_is_identity(self, twisted):
        state = FlowState(twisted, 0.25)
        assert step(state, 0.0, StepControl()) is state

    def test_negative_step(self, twisted):
        with pytest.raises(InvalidArgumentError):
            step(FlowState(twisted), -1e-3, StepControl())

    def test_redistribution_on_schedule(self):
        c = make_curve(ScenarioSpec("ellipse"))
        ctl = StepControl(redistribute_every=1)
        out = step(FlowState(c), 1e-5, ctl)
        s = geometry.speed(out.curve)
        assert np.ptp(s) <= 1e-8 * s.mean()


class TestRun:
    def test_max_steps_zero(self, twisted):
        traj = run(FlowState(twisted), StopRule(max_steps=0), StepControl())
        assert len(traj) == 1 and traj.stop_reason == "max-steps"

    def test_clock_limit_is_hit_exactly(self, twisted):
        traj = run(FlowState(twisted), StopRule(clock=0.01), StepControl())
        assert traj.stop_reason == "clock-limit"
        assert traj.snapshots[-1].clock == 0.01
        assert np.all(np.diff(traj.clocks) > 0)

    def test_sample_every_keeps_final_state(self, twisted):
        traj = run(FlowState(twisted), StopRule(max_steps=7), StepControl(), sample_every=3)
        assert [s.steps for s in traj.snapshots] == [0, 3, 6, 7]

    def test_sampled_grid_is_uniform(self, twisted):
        traj = run(FlowState(twisted), StopRule(clock=0.02), StepControl(), sample_dt=0.004)
        np.testing.assert_allclose(traj.clocks, 0.004 * np.arange(6), atol=1e-15)
        assert traj.stop_reason == "clock-limit"

    def test_curvature_threshold(self):
        traj = run(FlowState(make(circle_fn(), 64)), StopRule(max_curvature=3.0), StepControl())
        assert traj.stop_reason == "curvature-threshold"
        assert geometry.max_curvature(traj.snapshots[-1].curve.nodes) >= 3.0
        assert geometry.max_curvature(traj.snapshots[-2].curve.nodes) < 3.0
        # H = 1/sqrt(1 - 2t) reaches 3 at t = 4/9
        assert traj.snapshots[-1].clock == pytest.approx(4 / 9, abs=2e-3)

    @pytest.mark.parametrize("sample_dt", [None, 0.05])
    def test_blow_up_past_singular_time(self, sample_dt):
        traj = run(FlowState(make(circle_fn(), 32)), StopRule(clock=1.0), StepControl(dt_min=1e-6), sample_dt=sample_dt)
        assert traj.stop_reason == "blow-up"
        assert traj.snapshots[-1].clock < 0.5

    def test_soliton_trajectory(self):
        c = make(circle_fn(SQRT2))
        traj = run(FlowState(c, 0.0, Mode.RESCALED), StopRule(clock=0.2), StepControl.for_mode("rescaled"), sample_dt=0.01)
        assert len(traj) == 21
        for snap in traj.snapshots:
            assert np.max(np.abs(snap.curve.nodes - c.nodes)) <= 1e-10

    def test_physical_length_decreases(self):
        c = make_curve(ScenarioSpec("fourier_random", {"seed": 3}))
        traj = run(FlowState(c), StopRule(clock=0.05), StepControl.for_mode("physical"))
        lengths = np.array([geometry.length(s.curve) for s in traj.snapshots])
        assert np.all(lengths[1:] < lengths[:-1] + 1e-12)

    @pytest.mark.parametrize("mode", ["physical", "rescaled"])
    def test_planarity_is_preserved(self, mode):
        c = make_curve(ScenarioSpec("planar_random", {"seed": 11}))
        traj = run(FlowState(c, 0.0, mode), StopRule(clock=0.05), StepControl.for_mode(mode), sample_dt=0.01)
        assert max(np.max(np.abs(s.curve.nodes[:, 2])) for s in traj.snapshots) <= 1e-10

    def test_circle_radius_follows_oracle(self):
        c = make(circle_fn(), 128)
        traj = run(FlowState(c), StopRule(clock=0.45), StepControl.for_mode("physical"), sample_dt=0.05)
        for snap in traj.snapshots:
            np.testing.assert_allclose(radii(snap.curve), circle_oracle(1.0, snap.clock), atol=1e-6)

    def test_rescaled_circle_ode(self):
        c = make(circle_fn(1.2), 64)
        traj = run(FlowState(c, 0.0, Mode.RESCALED), StopRule(clock=1.0), StepControl.for_mode("rescaled"), sample_dt=0.25)
        for snap in traj.snapshots:
            np.testing.assert_allclose(radii(snap.curve), rescaled_circle_radius(1.2, snap.clock), atol=1e-6)

    def test_redistribution_is_geometrically_neutral(self):
        c = make_curve(ScenarioSpec("ellipse"))
        images = []
        for every in (0, 10):
            traj = run(FlowState(c), StopRule(clock=0.05), StepControl(redistribute_every=every), sample_dt=0.025)
            images.append(traj.snapshots)
        for a, b in zip(*images):
            assert a.clock == b.clock
            assert geometry.hausdorff_distance(a.curve, b.curve) <= 1e-6


@given(st.floats(0.5, 3.0), st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_physical_rhs_is_translation_invariant_and_scales(r, shift):
    c = make(circle_fn(1.0), 32)
    moved = DiscreteCurve(c.nodes * r + np.asarray(shift))
    np.testing.assert_allclose(rhs_physical(moved), rhs_physical(c) / r, atol=1e-11)
