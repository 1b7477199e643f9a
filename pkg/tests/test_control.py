"""Wrench PID, yaw loop, reference generation, and SE(3) tracking tests."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catenary_sim.control import (
    BoxReference,
    Gains,
    IntegralState,
    QuadReference,
    box_wrench_pid,
    box_yaw,
    quad_reference_from_box,
    rotate_reference_about_axis,
    se3_controller,
    yaw_setpoints,
)
from catenary_sim.cable import ContactPoint
from catenary_sim.dynamics import (
    DEFAULT_QUAD_PARAMS,
    GRAVITY,
    BoxParams,
    BoxState,
    FlatOnGround,
    QuadrotorState,
    quad_derivative,
    rk4_step,
)
from catenary_sim.errors import AttitudeSingular
from catenary_sim.geometry import rot_x, rot_z, vee, wrap_angle
from catenary_sim.modes import ActionKind
from catenary_sim.planner import ContactPlacement

BOX = BoxParams(w=0.155, l=0.155, h=0.155, m_b=0.08)


def still_box(yaw: float = 0.0, yaw_rate: float = 0.0) -> BoxState:
    return BoxState(r_b=np.array([0.0, 0.0, BOX.h / 2]), v_b=np.zeros(3),
                    R_b=rot_z(yaw),
                    omega_b=np.array([0.0, 0.0, yaw_rate]),
                    support=FlatOnGround())


def still_ref(**kw) -> BoxReference:
    base = dict(r=np.array([0.0, 0.0, BOX.h / 2]), v=np.zeros(3),
                a=np.zeros(3))
    base.update(kw)
    return BoxReference(**base)


def example_placement(arm: float = 0.3) -> ContactPlacement:
    return ContactPlacement(
        p1=ContactPoint(p=np.array([-0.0775, -0.0775, 0.0425]), edge="rear"),
        p2=ContactPoint(p=np.array([-0.0775, 0.0775, 0.0425]), edge="rear"),
        alpha=math.pi / 4, gamma=math.pi / 12, z_contact=0.12,
        action=ActionKind.ROLL, motion_yaw=0.0, l1=arm, l2=arm, wrap=0.155)


class TestGains:
    def test_defaults_valid(self):
        gains = Gains()
        np.testing.assert_array_equal(np.diag(gains.K_p), [4.0, 4.0, 4.0])
        assert gains.integral_clamp == 0.5

    def test_scalar_and_vector_forms_expand(self):
        gains = Gains(K_p=2.0, K_v=[1.0, 2.0, 3.0])
        np.testing.assert_array_equal(np.diag(gains.K_p), [2.0, 2.0, 2.0])
        np.testing.assert_array_equal(np.diag(gains.K_v), [1.0, 2.0, 3.0])

    def test_negative_gain_rejected(self):
        with pytest.raises(ValueError):
            Gains(k_x=-1.0)
        with pytest.raises(ValueError):
            Gains(K_p=-2.0)

    def test_zero_clamp_rejected(self):
        with pytest.raises(ValueError):
            Gains(integral_clamp=0.0)


class TestBoxWrenchPid:
    def test_equilibrium_force_is_zero(self):
        force, _ = box_wrench_pid(still_ref(), still_box(), BOX, Gains(),
                                  1e-3, IntegralState())
        np.testing.assert_allclose(force, np.zeros(3), atol=1e-15)

    def test_pure_proportional_term(self):
        gains = Gains(K_p=2.0, K_v=0.0, K_i=0.0)
        ref = still_ref(r=np.array([0.1, 0.0, BOX.h / 2]))
        force, _ = box_wrench_pid(ref, still_box(), BOX, gains, 1e-3,
                                  IntegralState())
        np.testing.assert_allclose(force, [0.2, 0.0, 0.0], atol=1e-15)

    def test_trapezoid_integral_on_constant_error(self):
        gains = Gains(K_p=0.0, K_v=0.0, K_i=1.0, integral_clamp=10.0)
        ref = still_ref(r=np.array([0.1, -0.2, BOX.h / 2]))
        integral = IntegralState()
        for _ in range(100):
            force, integral = box_wrench_pid(ref, still_box(), BOX, gains,
                                             0.01, integral)
        np.testing.assert_allclose(force, [0.1, -0.2, 0.0], atol=1e-12)

    def test_integral_clamped_componentwise(self):
        gains = Gains(K_p=0.0, K_v=0.0, K_i=1.0, integral_clamp=0.5)
        ref = still_ref(r=np.array([5.0, 0.0, BOX.h / 2]))
        integral = IntegralState()
        for _ in range(2000):
            force, integral = box_wrench_pid(ref, still_box(), BOX, gains,
                                             0.01, integral)
            assert np.all(np.abs(integral.value) <= 0.5 + 1e-15)
        assert force[0] == pytest.approx(0.5)

    def test_acceleration_feedforward_scales_with_mass(self):
        gains = Gains(K_p=0.0, K_v=0.0, K_i=0.0)
        ref = still_ref(a=np.array([1.0, 0.0, 0.0]))
        force, _ = box_wrench_pid(ref, still_box(), BOX, gains, 1e-3,
                                  IntegralState())
        np.testing.assert_allclose(force, [BOX.m_b, 0.0, 0.0], atol=1e-15)

    def test_non_positive_dt_rejected(self):
        with pytest.raises(ValueError):
            box_wrench_pid(still_ref(), still_box(), BOX, Gains(), 0.0,
                           IntegralState())


class TestYawSetpoints:
    def test_zero_error_returns_desired_yaw(self):
        psi1, psi2 = yaw_setpoints(still_ref(psi=0.7), still_box(yaw=0.7),
                                   Gains())
        assert psi1 == psi2 == pytest.approx(0.7)

    def test_proportional_correction(self):
        gains = Gains(k_p_yaw=1.0, k_v_yaw=0.0)
        psi1, _ = yaw_setpoints(still_ref(psi=0.1), still_box(yaw=0.0), gains)
        assert psi1 == pytest.approx(0.1 + 0.1)

    def test_error_wraps_to_shortest_path(self):
        gains = Gains(k_p_yaw=1.0, k_v_yaw=0.0)
        ref = still_ref(psi=math.pi - 0.05)
        psi1, _ = yaw_setpoints(ref, still_box(yaw=-math.pi + 0.05), gains)
        assert psi1 - ref.psi == pytest.approx(-0.1, abs=1e-12)

    @given(st.floats(-10.0, 10.0), st.floats(-math.pi, math.pi))
    def test_correction_bounded_by_wrapped_error(self, psi_d, yaw):
        gains = Gains(k_p_yaw=1.0, k_v_yaw=0.0)
        psi1, _ = yaw_setpoints(still_ref(psi=psi_d), still_box(yaw=yaw),
                                gains)
        err = psi1 - psi_d
        assert -math.pi <= err <= math.pi
        assert err == pytest.approx(wrap_angle(psi_d - yaw), abs=1e-12)


class TestQuadReferenceFromBox:
    def test_frozen_rotation_example(self):
        ref = still_ref(r=np.zeros(3))
        q1, q2 = quad_reference_from_box(ref, example_placement())
        np.testing.assert_allclose(
            q1.r, [0.1274038105676658, -0.2824038105676658,
                   0.12014571353075623], atol=1e-15)
        assert q2.r[1] == pytest.approx(-q1.r[1])

    def test_zero_spin_copies_box_velocity(self):
        ref = still_ref(v=np.array([0.3, -0.1, 0.0]))
        q1, q2 = quad_reference_from_box(ref, example_placement())
        np.testing.assert_allclose(q1.v, ref.v, atol=1e-15)
        np.testing.assert_allclose(q2.v, ref.v, atol=1e-15)

    def test_separation_within_cable_length(self):
        placement = example_placement()
        budget = placement.l1 + placement.l2 + placement.wrap
        for psi in (0.0, 0.8, -2.0):
            q1, q2 = quad_reference_from_box(still_ref(psi=psi), placement)
            assert np.linalg.norm(q1.r - q2.r) <= budget

    def test_floor_clamp_flags_and_raises_altitude(self):
        ref = still_ref(r=np.zeros(3))
        q1, _ = quad_reference_from_box(ref, example_placement(), floor=0.15)
        assert q1.clamped and q1.r[2] == 0.15

    def test_finite_difference_consistency_on_arc(self):
        """Analytic velocity/acceleration references match central
        differences of the position reference within 1e-4."""
        placement = example_placement()

        def at(t: float) -> BoxReference:
            return BoxReference(
                r=np.array([math.sin(t), math.cos(t), BOX.h / 2]),
                v=np.array([math.cos(t), -math.sin(t), 0.0]),
                a=np.array([-math.sin(t), -math.cos(t), 0.0]),
                psi=-t, psi_dot=-1.0, psi_ddot=0.0)

        dt = 1e-3
        for t in np.linspace(0.2, 3.0, 7):
            minus, mid, plus = (quad_reference_from_box(at(t + k * dt),
                                                        placement)[0]
                                for k in (-1, 0, 1))
            fd_v = (plus.r - minus.r) / (2 * dt)
            fd_a = (plus.v - minus.v) / (2 * dt)
            np.testing.assert_allclose(mid.v, fd_v, atol=1e-4)
            np.testing.assert_allclose(mid.a, fd_a, atol=1e-4)

    def test_explicit_yaw_setpoints_pass_through(self):
        q1, q2 = quad_reference_from_box(still_ref(), example_placement(),
                                         yaws=(0.3, -0.3))
        assert q1.yaw == 0.3 and q2.yaw == -0.3


class TestRotateReferenceAboutAxis:
    anchor = np.array([0.0775, 0.0, 0.0])
    axis = np.array([0.0, 1.0, 0.0])

    def test_zero_angle_is_identity(self):
        qref = QuadReference(r=np.array([-0.2, 0.0, 0.3]), v=np.zeros(3),
                             a=np.zeros(3))
        out = rotate_reference_about_axis(qref, self.anchor, self.axis,
                                          0.0, 0.0)
        np.testing.assert_allclose(out.r, qref.r, atol=1e-15)
        np.testing.assert_allclose(out.v, qref.v, atol=1e-15)

    def test_quarter_turn_carries_position(self):
        qref = QuadReference(r=self.anchor + [-1.0, 0.0, 0.0], v=np.zeros(3),
                             a=np.zeros(3))
        out = rotate_reference_about_axis(qref, self.anchor, self.axis,
                                          math.pi / 2, 0.0)
        # Rotation about +y maps -x to -z ... -e1 -> +e3 direction check:
        np.testing.assert_allclose(out.r, self.anchor + [0.0, 0.0, 1.0],
                                   atol=1e-12)

    def test_finite_difference_consistency_through_pivot(self):
        qref = QuadReference(r=np.array([-0.3, 0.1, 0.25]), v=np.zeros(3),
                             a=np.zeros(3))

        def at(t: float) -> QuadReference:
            return rotate_reference_about_axis(
                qref, self.anchor, self.axis, 0.5 * t * t, t, 1.0)

        dt = 1e-3
        for t in np.linspace(0.1, 1.4, 5):
            minus, mid, plus = at(t - dt), at(t), at(t + dt)
            np.testing.assert_allclose(mid.v, (plus.r - minus.r) / (2 * dt),
                                       atol=1e-4)
            np.testing.assert_allclose(mid.a, (plus.v - minus.v) / (2 * dt),
                                       atol=1e-4)


def hover_state(offset=(0.0, 0.0, 0.0)) -> QuadrotorState:
    return QuadrotorState(r=np.array([0.0, 0.0, 0.5]) + offset,
                          v=np.zeros(3), R=np.eye(3), omega=np.zeros(3))


def hover_ref() -> QuadReference:
    return QuadReference(r=np.array([0.0, 0.0, 0.5]), v=np.zeros(3),
                         a=np.zeros(3))


class TestSe3Controller:
    params = DEFAULT_QUAD_PARAMS

    def test_hover_equilibrium(self):
        cmd = se3_controller(hover_state(), hover_ref(), self.params, Gains())
        assert cmd.f == pytest.approx(self.params.m * GRAVITY, abs=1e-12)
        np.testing.assert_allclose(cmd.tau, np.zeros(3), atol=1e-15)

    def test_below_setpoint_thrusts_harder(self):
        cmd = se3_controller(hover_state(offset=(0, 0, -0.01)), hover_ref(),
                             self.params, Gains())
        assert cmd.f > self.params.m * GRAVITY

    def test_matched_attitude_gives_zero_torque(self):
        R = rot_x(0.2)
        state = QuadrotorState(r=np.array([0.0, 0.0, 0.5]), v=np.zeros(3),
                               R=R, omega=np.zeros(3))
        # Acceleration reference whose required force lies along body z.
        force_dir = R[:, 2]
        a = GRAVITY * force_dir - GRAVITY * np.array([0.0, 0.0, 1.0])
        ref = QuadReference(r=state.r.copy(), v=np.zeros(3), a=a)
        cmd = se3_controller(state, ref, self.params, Gains())
        np.testing.assert_allclose(cmd.tau, np.zeros(3), atol=1e-12)
        assert cmd.f == pytest.approx(self.params.m * GRAVITY, abs=1e-12)

    def test_freefall_reference_is_singular(self):
        ref = QuadReference(r=np.array([0.0, 0.0, 0.5]), v=np.zeros(3),
                            a=np.array([0.0, 0.0, -GRAVITY]))
        with pytest.raises(AttitudeSingular):
            se3_controller(hover_state(), ref, self.params, Gains())

    def test_tension_feedforward_tilts_attitude(self):
        pull = np.array([0.1, 0.0, 0.0])
        cmd = se3_controller(hover_state(), hover_ref(), self.params, Gains(),
                             tension_ff=pull)
        assert cmd.f == pytest.approx(self.params.m * GRAVITY, abs=1e-12)
        assert np.linalg.norm(cmd.tau) > 1e-4  # steering toward the pull

    def test_thrust_never_negative(self):
        cmd = se3_controller(hover_state(offset=(0, 0, 1.0)), hover_ref(),
                             self.params, Gains())
        assert cmd.f == 0.0

    @given(st.floats(-3.0, 3.0), st.floats(-1.2, 1.2))
    def test_attitude_error_vanishes_when_matched(self, psi, tilt):
        # Yaw-then-tilt rotations are exactly reconstructed from their
        # thrust direction and heading, so a matched state sees no torque.
        R = rot_z(psi) @ rot_x(tilt)
        state = QuadrotorState(r=np.zeros(3) + [0, 0, 0.5], v=np.zeros(3),
                               R=R, omega=np.zeros(3))
        a_ref = GRAVITY * R[:, 2] - GRAVITY * np.array([0.0, 0.0, 1.0])
        ref = QuadReference(r=state.r.copy(), v=np.zeros(3), a=a_ref,
                            yaw=math.atan2(R[1, 0], R[0, 0]))
        cmd = se3_controller(state, ref, self.params, Gains())
        np.testing.assert_allclose(cmd.tau, np.zeros(3), atol=1e-9)

    def test_attitude_error_identity_on_random_rotations(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            q = rng.normal(size=4)
            q /= np.linalg.norm(q)
            w, x, y, z = q
            R = np.array([
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ])
            e_R = 0.5 * vee(R.T @ R - R.T @ R)
            np.testing.assert_array_equal(e_R, np.zeros(3))


class TestHoverRegulation:
    def test_settles_from_five_centimeters(self):
        """Closed-loop hover: a 5 cm offset decays below 1 mm within 5 s."""
        params = DEFAULT_QUAD_PARAMS
        gains = Gains()
        target = hover_ref()
        state = hover_state(offset=(0.05, 0.0, 0.0))
        dt = 1e-3

        def pack(s: QuadrotorState) -> np.ndarray:
            return np.concatenate([s.r, s.v, s.R.reshape(9), s.omega])

        def unpack(y: np.ndarray) -> QuadrotorState:
            return QuadrotorState(r=y[:3], v=y[3:6], R=y[6:15].reshape(3, 3),
                                  omega=y[15:18])

        y = pack(state)
        for _ in range(5000):
            cmd = se3_controller(unpack(y), target, params, gains)

            def deriv(yv):
                d = quad_derivative(unpack(yv), params, cmd.f, cmd.tau,
                                    np.zeros(3))
                return np.concatenate([d.dr, d.dv, d.dR.reshape(9), d.domega])

            y = rk4_step(y, deriv, dt)
        final = unpack(y)
        assert np.linalg.norm(final.r - target.r) < 1e-3
        assert np.linalg.norm(final.v) < 1e-3
