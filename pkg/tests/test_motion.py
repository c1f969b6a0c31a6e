import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from birange.config import AxisMotionLimits, FacilityConfig
from birange.geometry import MachineState
from birange.motion import (
    AxisProfile,
    plan_profile,
    sample_profile,
    verify_trajectory,
)
from birange.trajfile import Trajectory


def integrate_profile(profile: AxisProfile, dt_target=1e-4):
    """Forward integration of the jerk sequence, independent of the
    planner's phase arithmetic: march small constant-jerk steps within each
    segment and report the final kinematic state."""
    p, v, a = 0.0, 0.0, 0.0
    for seg_dt, jerk in profile.segments:
        m = max(1, int(math.ceil(seg_dt / dt_target)))
        h = seg_dt / m
        for _ in range(m):
            p += v * h + 0.5 * a * h * h + jerk * h**3 / 6.0
            v += a * h + 0.5 * jerk * h * h
            a += jerk * h
    return profile.start + p, v, a


LIM = AxisMotionLimits(v_max=6.0, a_max=3.0, d_max=2.0, j_max=8.0)


class TestAxisProfile:
    @pytest.mark.parametrize("dist", [0.0, 1e-4, 0.05, 0.5, 3.0, 40.0, 180.0])
    def test_duration_against_integration_oracle(self, dist):
        p = AxisProfile.plan("moving_az", 0.0, dist, LIM)
        pos, vel, acc = integrate_profile(p)
        assert pos == pytest.approx(dist, abs=max(1e-9, 0.01 * dist))
        assert abs(vel) < 1e-6 * max(1.0, LIM.v_max)
        assert abs(acc) < 1e-6 * max(1.0, LIM.a_max)

    def test_long_move_has_cruise(self):
        p = AxisProfile.plan("moving_az", 0.0, 120.0, LIM)
        # cruise time = total - ramp times; duration close to d/v + constants
        ramp = LIM.v_max / LIM.a_max + LIM.a_max / LIM.j_max
        ramp += LIM.v_max / LIM.d_max + LIM.d_max / LIM.j_max
        expect = 120.0 / LIM.v_max + ramp / 2.0
        assert p.duration == pytest.approx(expect, rel=1e-9)
        vels = [p.pva(t)[1] for t in np.linspace(0, p.duration, 500)]
        assert max(vels) == pytest.approx(LIM.v_max, rel=1e-9)

    @given(st.floats(1e-6, 200.0), st.floats(0.2, 10.0), st.floats(0.2, 10.0),
           st.floats(0.2, 10.0), st.floats(0.5, 30.0))
    @settings(max_examples=120, deadline=None)
    def test_bounds_never_violated(self, dist, v, a, d, j):
        lim = AxisMotionLimits(v, a, d, j)
        p = AxisProfile.plan("x", 0.0, dist, lim)
        ts = np.arange(0.0, p.duration, 0.001)
        tol = 1e-9
        for t in ts:
            _, vel, acc = p.pva(float(t))
            assert abs(vel) <= v * (1 + 1e-9) + tol
            assert -d * (1 + 1e-9) - tol <= acc <= a * (1 + 1e-9) + tol
        pos_end, *_ = p.pva(p.duration)
        assert pos_end == pytest.approx(dist, abs=1e-9)

    @given(st.floats(-100, 100), st.floats(-100, 100))
    @settings(max_examples=80, deadline=None)
    def test_time_reversal(self, a, b):
        fwd = AxisProfile.plan("x", a, b, LIM)
        rev = AxisProfile.plan("x", b, a, LIM)
        assert fwd.duration == pytest.approx(rev.duration, abs=1e-12)

    @given(st.floats(0.01, 150.0))
    @settings(max_examples=60, deadline=None)
    def test_scaling_never_slower(self, dist):
        fast = AxisMotionLimits(2 * LIM.v_max, 2 * LIM.a_max, 2 * LIM.d_max, 2 * LIM.j_max)
        assert (
            AxisProfile.plan("x", 0, dist, fast).duration
            <= AxisProfile.plan("x", 0, dist, LIM).duration + 1e-12
        )


class TestMotionProfile:
    def test_null_move(self, cfg):
        s = MachineState()
        p = plan_profile(s, s, cfg=cfg)
        assert p.duration == 0.0
        samples = sample_profile(p, 0.1)
        assert len(samples) == 1 and samples[0][1] == s

    def test_duration_is_max_over_axes(self, cfg):
        a = MachineState()
        b = MachineState(moving_az=40.0, turntable=5.0)
        p = plan_profile(a, b, cfg=cfg)
        assert p.duration == pytest.approx(
            max(pr.duration for pr in p.axes.values()), abs=0.0
        )

    def test_sampling(self, cfg):
        a = MachineState()
        b = MachineState(moving_az=20.0)
        p = plan_profile(a, b, cfg=cfg)
        samples = sample_profile(p, 10 * p.duration)
        assert len(samples) == 2
        assert samples[-1][1] == b
        fine = sample_profile(p, 0.001)
        ts = [t for t, _, _ in fine]
        assert all(t1 > t0 for t0, t1 in zip(ts, ts[1:]))
        assert fine[-1][1] == b
        # quadrature of sampled velocity reproduces the displacement
        vs = np.array([v["moving_az"] for _, _, v in fine])
        disp = np.trapezoid(vs, ts)
        assert disp == pytest.approx(20.0, abs=1e-5)


def _traj(states):
    return Trajectory(tuple(states), {}, tuple(range(1, len(states) + 1)))


class TestVerifyTrajectory:
    def test_empty_accepted(self, cfg, coarse_table):
        rep = verify_trajectory(_traj([]), table=coarse_table, cfg=cfg)
        assert rep.accepted and rep.total_duration_s == 0.0

    # a comfortably free corridor in the default geometry: carriage on the
    # far side from the static pedestal, both booms raised toward +x
    FREE = dict(moving_coel=30.0, static_coel=61.0)

    def test_overhead_per_waypoint(self, cfg, coarse_table):
        wps = [
            MachineState(moving_az=40.0, **self.FREE),
            MachineState(moving_az=52.0, **self.FREE),
            MachineState(moving_az=64.0, **self.FREE),
        ]
        rep_s = verify_trajectory(_traj(wps), table=coarse_table, mode="stepped", cfg=cfg)
        rep_c = verify_trajectory(_traj(wps), table=coarse_table, mode="continuous", cfg=cfg)
        assert rep_s.accepted and rep_c.accepted
        assert rep_s.total_duration_s - rep_c.total_duration_s == pytest.approx(
            3 * 0.1, abs=1e-9
        )

    def test_colliding_leg_rejected(self, cfg, coarse_table):
        free = MachineState(moving_az=40.0, **self.FREE)
        hit = MachineState(moving_az=-40.0, **self.FREE)
        assert not verify_trajectory(_traj([free]), table=coarse_table, cfg=cfg).first_violation
        rep = verify_trajectory(_traj([free, hit]), table=coarse_table, cfg=cfg)
        assert not rep.accepted
        assert rep.first_violation.kind == "collision"
        assert rep.first_violation.waypoint_index == 1
        assert rep.first_violation.time_s > 0

    def test_continuous_samples_are_collision_free_when_accepted(self, cfg, coarse_table):
        from birange.collision import query_table

        wps = [
            MachineState(moving_az=20.0, **self.FREE),
            MachineState(moving_az=60.0, moving_coel=-2.0, static_coel=61.0),
        ]
        rep = verify_trajectory(_traj(wps), table=coarse_table, mode="continuous", cfg=cfg)
        assert rep.accepted
        prof = plan_profile(wps[0], wps[1], cfg=cfg)
        for t in np.arange(0, prof.duration, 0.001):
            assert not query_table(coarse_table, prof.state_at(float(t)))

    def test_detour_metric(self, cfg, coarse_table):
        wps = [
            MachineState(moving_az=40.0, **self.FREE),
            MachineState(moving_az=60.0, **self.FREE),
            MachineState(moving_az=50.0, **self.FREE),
        ]
        rep = verify_trajectory(_traj(wps), table=coarse_table, cfg=cfg)
        assert rep.detour["moving_az"] == pytest.approx(30.0 / 10.0)

    def test_directive_block_slows_the_plan(self, cfg, coarse_table):
        from birange.trajfile import parse

        base = "40 30 61 0 0 0 3.44 3.44\n64 30 61 0 0 0 3.44 3.44\n"
        plain = verify_trajectory(parse(base), table=coarse_table, cfg=cfg)
        slowed = verify_trajectory(
            parse("!velocity 0.5\n" + base), table=coarse_table, cfg=cfg
        )
        assert slowed.accepted
        assert slowed.total_duration_s > plain.total_duration_s

    def test_bad_directive_factor(self, cfg, coarse_table):
        from birange.trajfile import parse

        with pytest.raises(ValueError, match="velocity"):
            verify_trajectory(
                parse("!velocity 2.0\n40 30 61 0 0 0 3.44 3.44\n"),
                table=coarse_table, cfg=cfg,
            )

    def test_report_text_round_trip_fields(self, cfg, coarse_table):
        rep = verify_trajectory(
            _traj([MachineState(moving_az=40.0, **self.FREE)]), table=coarse_table, cfg=cfg
        )
        text = rep.to_text()
        assert "accepted: true" in text
        assert "total_duration_s:" in text
        d = rep.to_dict()
        assert d["accepted"] is True
