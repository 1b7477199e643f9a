"""Action choice, contact placement, and approach planning tests."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from catenary_sim.dynamics import (
    GRAVITY,
    BoxParams,
    BoxState,
    FlatOnGround,
    GroundModel,
    pivot_gravity_torque,
    planar_box_force,
)
from catenary_sim.errors import FloorViolation, Unreachable
from catenary_sim.geometry import rot_z, solve_catenary
from catenary_sim.modes import ActionKind
from catenary_sim.planner import (
    ActionDecision,
    ApproachLeg,
    ContactPlacement,
    approach_waypoints,
    cable_direction,
    choose_action,
    drag_placement,
    gamma_perpendicular,
    quad_offsets_body,
    raise_gamma_for_floor,
    roll_placement,
)
from oracles import tip_or_slide

BOX = BoxParams(w=0.155, l=0.155, h=0.155, m_b=0.08)
CABLE = 1.0
PLUS_X = np.array([1.0, 0.0, 0.0])


def box_at_origin() -> BoxState:
    return BoxState(r_b=np.array([0.0, 0.0, BOX.h / 2]), v_b=np.zeros(3),
                    R_b=np.eye(3), omega_b=np.zeros(3), support=FlatOnGround())


class TestChooseAction:
    def test_threshold_matches_torque_balance(self):
        decision = choose_action(BOX, GroundModel(0.3, 0.3), 0.12)
        assert decision.mu_star == pytest.approx(0.6458333333333334, abs=1e-12)

    def test_low_friction_drags(self):
        assert choose_action(BOX, GroundModel(0.2, 0.2),
                             0.12).action is ActionKind.DRAG

    def test_high_friction_rolls(self):
        assert choose_action(BOX, GroundModel(0.8, 0.8),
                             0.12).action is ActionKind.ROLL

    def test_boundary_ties_to_drag(self):
        mu_star = 0.0775 / 0.12
        assert choose_action(BOX, GroundModel(mu_star, mu_star),
                             0.12).action is ActionKind.DRAG

    @pytest.mark.parametrize("z", [0.0, -0.1, 0.156])
    def test_contact_height_outside_box_rejected(self, z):
        with pytest.raises(ValueError):
            choose_action(BOX, GroundModel(0.3, 0.3), z)

    def test_decision_requires_positive_threshold(self):
        with pytest.raises(ValueError):
            ActionDecision(action=ActionKind.DRAG, mu_star=0.0)

    @given(st.floats(0.01, 2.0), st.floats(0.01, 2.0))
    def test_monotone_in_friction(self, mu_a, mu_b):
        lo, hi = sorted((mu_a, mu_b))
        if choose_action(BOX, GroundModel(lo, lo), 0.12).action is ActionKind.ROLL:
            assert choose_action(BOX, GroundModel(hi, hi),
                                 0.12).action is ActionKind.ROLL

    def test_matches_independent_tipping_oracle(self):
        for mu in np.arange(0.1, 1.01, 0.05):
            decision = choose_action(BOX, GroundModel(mu, mu), 0.12)
            if abs(mu - decision.mu_star) < 0.05:
                continue
            want = "tip" if decision.action is ActionKind.ROLL else "slide"
            assert tip_or_slide(mu, BOX.w, 0.12) == want

    def test_matches_quasi_static_force_ramp(self):
        """Ramping a horizontal pull at the contact height, the first
        failure (slide via the friction cone, tip via edge torque) agrees
        with the planner's choice away from the threshold."""
        z = 0.12
        weight = BOX.m_b * GRAVITY
        for mu in np.arange(0.1, 1.01, 0.05):
            decision = choose_action(BOX, GroundModel(mu, mu), z)
            if abs(mu - decision.mu_star) < 0.05:
                continue
            ground = GroundModel(mu, mu)
            first = None
            for f in np.arange(0.0, 1.5 * weight, 1e-3):
                slides = np.linalg.norm(planar_box_force(
                    np.zeros(2), np.array([f, 0.0]), weight, ground)) > 0
                tips = f * z + pivot_gravity_torque(0.0, BOX) >= 0.0
                if slides or tips:
                    first = "tip" if tips and not slides else "slide"
                    break
            expect = "tip" if decision.action is ActionKind.ROLL else "slide"
            assert first == expect, f"mu={mu}"


class TestDragPlacement:
    def test_grips_just_above_ground(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        assert placement.p1.p[2] == pytest.approx(-0.0675, abs=1e-15)
        assert placement.z_contact == pytest.approx(0.01, abs=1e-15)

    def test_default_angles(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        assert placement.alpha == math.pi / 4
        assert placement.gamma == math.pi / 12

    def test_contacts_on_rear_edges_for_forward_motion(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        np.testing.assert_allclose(placement.p1.p,
                                   [-0.0775, -0.0775, -0.0675], atol=1e-15)
        np.testing.assert_allclose(placement.p2.p,
                                   [-0.0775, 0.0775, -0.0675], atol=1e-15)
        placement.validate(BOX)

    def test_contacts_follow_motion_direction(self):
        placement = drag_placement(BOX, np.array([0.0, -1.0, 0.0]), CABLE)
        # Motion along -y: the rear face is +y; both grips sit on it.
        assert placement.p1.p[1] == pytest.approx(BOX.w / 2, abs=1e-12)
        assert placement.p2.p[1] == pytest.approx(BOX.w / 2, abs=1e-12)
        placement.validate(BOX)

    def test_arm_lengths_split_the_free_cable(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        assert placement.l1 == placement.l2 == pytest.approx(0.4225)
        assert placement.wrap == pytest.approx(BOX.w)
        assert placement.l1 + placement.l2 + placement.wrap == pytest.approx(CABLE)

    def test_drag_grips_below_center(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        assert placement.p1.p[2] < 0.0 and placement.p2.p[2] < 0.0

    def test_non_unit_motion_rejected(self):
        with pytest.raises(ValueError):
            drag_placement(BOX, np.array([1.0, 1.0, 0.0]), CABLE)


class TestRollPlacement:
    def test_grips_near_top(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        assert placement.p1.p[2] == pytest.approx(0.0425, abs=1e-15)
        assert placement.z_contact == pytest.approx(0.12)

    def test_gap_to_top_edge(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        assert BOX.h - placement.z_contact == pytest.approx(0.035)

    def test_roll_grips_above_center(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        assert placement.p1.p[2] > 0.0 and placement.p2.p[2] > 0.0
        placement.validate(BOX)

    def test_height_split_invariant_enforced(self):
        good = roll_placement(BOX, PLUS_X, CABLE)
        with pytest.raises(ValueError):
            ContactPlacement(p1=good.p1, p2=good.p2, alpha=good.alpha,
                             gamma=good.gamma, z_contact=good.z_contact,
                             action=ActionKind.DRAG, motion_yaw=0.0,
                             l1=good.l1, l2=good.l2, wrap=good.wrap)

    def test_perpendicular_elevation_matches_arm_geometry(self):
        gamma = gamma_perpendicular(BOX, 0.12)
        assert gamma == pytest.approx(0.9119902906774203, abs=1e-12)
        assert gamma == pytest.approx(0.91, abs=2e-3)

    def test_out_of_range_height_rejected(self):
        with pytest.raises(ValueError):
            roll_placement(BOX, PLUS_X, CABLE, z_roll=0.2)


class TestFloorRaise:
    def test_drag_elevation_raised_to_clear_floor(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        raised = raise_gamma_for_floor(placement, box_at_origin(), 0.15)
        assert raised.gamma == pytest.approx(0.3629457145519785, abs=1e-12)
        z_quad = 0.01 + raised.l1 * math.sin(raised.gamma)
        assert z_quad == pytest.approx(0.16, abs=1e-12)

    def test_roll_elevation_already_clears_floor(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        raised = raise_gamma_for_floor(placement, box_at_origin(), 0.15)
        assert raised.gamma == placement.gamma

    def test_unflyable_floor_rejected(self):
        placement = drag_placement(BOX, PLUS_X, CABLE)
        with pytest.raises(FloorViolation):
            raise_gamma_for_floor(placement, box_at_origin(), 0.5)


class TestQuadOffsets:
    def test_cable_direction_frozen_rotation(self):
        np.testing.assert_allclose(
            cable_direction(math.pi / 4, math.pi / 12, -1.0),
            [0.6830127018922194, -0.6830127018922194, 0.25881904510252074],
            atol=1e-15)

    def test_offsets_mirror_in_y(self):
        off1, off2 = quad_offsets_body(drag_placement(BOX, PLUS_X, CABLE))
        assert off1[0] == pytest.approx(off2[0])
        assert off1[1] == pytest.approx(-off2[1])
        assert off1[2] == pytest.approx(off2[2])
        assert off2[1] == pytest.approx(0.36607286654946264, abs=1e-12)

    def test_quad_separation_within_cable_length(self):
        for make in (drag_placement, roll_placement):
            off1, off2 = quad_offsets_body(make(BOX, PLUS_X, CABLE))
            assert np.linalg.norm(off1 - off2) <= CABLE

    def test_offsets_rotate_with_motion_yaw(self):
        off1_x, _ = quad_offsets_body(drag_placement(BOX, PLUS_X, CABLE))
        off1_y, _ = quad_offsets_body(
            drag_placement(BOX, np.array([0.0, 1.0, 0.0]), CABLE))
        np.testing.assert_allclose(off1_y, rot_z(math.pi / 2) @ off1_x,
                                   atol=1e-12)


class TestApproachWaypoints:
    quads = np.array([[0.3, -0.2, 0.3], [0.3, 0.2, 0.3]])

    def legs(self, placement) -> list[ApproachLeg]:
        return approach_waypoints(self.quads, placement, box_at_origin(), BOX)

    def test_leg_sequence(self):
        legs = self.legs(roll_placement(BOX, PLUS_X, CABLE))
        assert [leg.name for leg in legs] == ["lift", "carry", "advance",
                                              "narrow", "settle"]
        assert legs[-1].hold > 0.0

    def test_carry_drapes_lowest_point_at_contact_height(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        legs = self.legs(placement)
        carry = next(leg for leg in legs if leg.name == "carry")
        length = placement.l1 + placement.wrap + placement.l2
        shape = solve_catenary(np.stack([carry.quad1, carry.quad2]), length)
        low = shape.lowest_point
        assert abs(low[2] - placement.z_contact) < 1e-6
        assert low[0] < -BOX.l / 2  # hangs behind the rear face

    def test_final_leg_targets_rear_grip_positions(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        legs = self.legs(placement)
        off1, off2 = quad_offsets_body(placement)
        box = box_at_origin()
        np.testing.assert_allclose(legs[-1].quad1,
                                   box.r_b + off1 + [3e-3, 0, 0], atol=1e-12)
        np.testing.assert_allclose(legs[-1].quad2,
                                   box.r_b + off2 + [3e-3, 0, 0], atol=1e-12)

    def test_grip_midpoint_is_rear_face_center(self):
        placement = roll_placement(BOX, PLUS_X, CABLE)
        box = box_at_origin()
        c1 = box.r_b + box.R_b @ placement.p1.p
        c2 = box.r_b + box.R_b @ placement.p2.p
        np.testing.assert_allclose((c1 + c2) / 2, [-BOX.l / 2, 0.0, 0.12],
                                   atol=1e-12)

    def test_all_legs_respect_floor(self):
        for make in (drag_placement, roll_placement):
            for leg in self.legs(make(BOX, PLUS_X, CABLE)):
                assert leg.quad1[2] >= 0.15 - 1e-12
                assert leg.quad2[2] >= 0.15 - 1e-12

    def test_carry_stages_behind_the_advance(self):
        legs = self.legs(roll_placement(BOX, PLUS_X, CABLE))
        carry, advance = legs[1], legs[2]
        assert carry.quad1[0] < advance.quad1[0]
        np.testing.assert_allclose(advance.quad1 - carry.quad1,
                                   advance.quad2 - carry.quad2, atol=1e-12)

    def test_excessive_height_unreachable(self):
        good = roll_placement(BOX, PLUS_X, CABLE)
        bad = ContactPlacement(
            p1=good.p1, p2=good.p2, alpha=good.alpha, gamma=good.gamma,
            z_contact=0.9, action=ActionKind.ROLL, motion_yaw=0.0,
            l1=good.l1, l2=good.l2, wrap=good.wrap)
        with pytest.raises(Unreachable):
            approach_waypoints(self.quads, bad, box_at_origin(), BOX)
