"""Closed-loop scenario driver.

Runs the full desk-scale manipulation loop: the quadrotors fly a planned
approach that lays the hanging cable against the box, the contact automaton
advances through touch and tautness into the active mode, and the mode
director either tracks the configured trajectory (dragging) or paces a
quarter-turn pivot (rolling).  Demanded planar box forces pass through an
exact two-cable tension solve before being applied to the rigid bodies,
which are integrated with fixed-step RK4.

Every step appends one log record, so identical configurations reproduce
byte-identical logs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .cable import (
    CableFriction,
    ContactPoint,
    contact_point_world,
    detect_contact,
    detect_taut,
    measured_contact_angles,
    slip_check,
)
from .control import (
    BoxReference,
    Gains,
    IntegralState,
    QuadCommand,
    QuadReference,
    box_wrench_pid,
    box_yaw,
    quad_reference_from_box,
    rotate_reference_about_axis,
    se3_controller,
)
from .dynamics import (
    GRAVITY,
    VELOCITY_FLOOR,
    BoxParams,
    BoxState,
    FlatOnGround,
    GroundModel,
    PivotingOnEdge,
    QuadrotorParams,
    QuadrotorState,
    box_derivative,
    box_pose_from_pivot,
    friction_twist,
    impact_resolution,
    pivot_gravity_torque,
    pivot_inertia,
    quad_derivative,
    rk4_step,
    rolling_pivot_derivative,
)
from .errors import (
    DegenerateVertical,
    SimulationDiverged,
    SimulationError,
    TautOrOverstretched,
)
from .geometry import (E1, E3, cross3, renormalize_rotation, rot_z,
                       solve_catenary, wrap_angle)
from .modes import ActionKind, GuardEvent, GuardFlags, Mode, emit_guards, step_mode
from .planner import (
    ApproachLeg,
    ContactPlacement,
    approach_waypoints,
    cable_direction,
    choose_action,
    drag_placement,
    quad_offsets_body,
    raise_gamma_for_floor,
    roll_placement,
)
from .scenario import LogRecord, ScenarioConfig, build_trajectory

__all__ = ["RunResult", "run_scenario", "smooth_clock", "shape_demand"]

# Drag startup: wall seconds over which the trajectory clock eases from
# standstill to real time, so the reference does not step in velocity.
WARMUP = 2.0
# Drag shutdown ramp.  Longer than the entry ramp because the rig offset
# that balances the yaw torque sweeps with the slowing reference, and the
# torque trim integrator can only follow a gentle sweep.
EASE_OUT = 3.5
# Roll pacing: pre-tension hold before the pivot ramp, then the ramp itself.
ROLL_STAGE = 1.5
ROLL_DURATION = 3.5
K_P_PIVOT = 16.0
K_D_PIVOT = 8.0
# Fraction of the breakaway torque held on the cables while staging a roll.
PRETENSION = 0.7
# The tensions may lift at most this fraction of the box weight, which keeps
# the ground normal force strictly positive during drags.
HEADROOM = 0.8
# Any state magnitude beyond this aborts the run as numerically divergent.
DIVERGENCE_BOUND = 1e3
# Altitude the quadrotors spawn at and retreat to between engagements; high
# enough that the hanging cable clears the box.
SAFE_ALTITUDE = 0.45
RETREAT_SPEED = 0.25
# Catenary sampling density used for per-step touch detection.
DETECT_SAMPLES = 512
# Drag completion tolerances against the trajectory endpoint.
DRAG_TOL_POS = 0.02
DRAG_TOL_YAW = 0.05
# Planar speed (m/s) below which the box counts as resting for the friction
# feedforward; numerical creep under RK4 Coulomb switching sits well below it.
REST_SPEED = 5e-3
# Yaw control while dragging.  The two nonnegative tensions that realize a
# planar force demand exactly also apply a yaw torque fixed entirely by the
# rig geometry, and rotating the rig about the box sweeps that torque
# monotonically (roughly 0.03 N m per radian of offset at drag tensions).
# The rig angle is therefore the yaw actuator: a feedforward plus a small PD
# picks a torque target, and a bisection on the quasi-static tension split
# finds the rig offset that lands on it, leaving the force solve exact.
K_PSI_P = 3e-3
K_PSI_D = 2.5e-3
TAU_CLIP = 6e-3
RIG_OFFSET_MAX = 0.6
# The quasi-static bisection is open loop; quad tracking lag and the box's
# own yaw deviation bias the realized torque by a few mN m.  An integrator
# on the measured torque shortfall trims the rig offset (scaled by the
# curve's slope) until delivered matches target; it freezes when the
# cables carry no tension, because then there is nothing to measure.
RIG_CURVE_SLOPE = 0.03
K_I_RIG = 1.0
RIG_TRIM_MAX = 0.35
# The geometric spring (slope above) against the box yaw inertia forms a
# lightly damped ~10 rad/s mode at drag speed; leading the rig with the
# yaw-rate error adds the missing damping (seconds of lead per rad/s).
RIG_DAMP = 0.1
# Smoothing and clamp for the differenced rig sweep rate fed forward to
# the quad velocity references.
RIG_RATE_FILTER = 0.05
RIG_RATE_MAX = 1.0
# Wall-clock spans of the built-in drag trajectories (action-local seconds).
_TRAJECTORY_SPANS = {"dragging_semicircle": math.pi}


def smooth_clock(s: float, warmup: float, span: float = math.inf,
                 ramp_out: float | None = None) -> tuple[float, float, float]:
    """Warped action clock: returns (tau, rate, rate_dot) for wall time s.

    The clock runs at zero rate at s = 0, eases up to unit rate along a
    smoothstep profile, cruises, and - when the trajectory has a finite
    ``span`` - eases back to zero rate so tau settles at exactly ``span``.
    The entry ramp takes ``warmup`` wall seconds and the exit ramp
    ``ramp_out`` (default ``warmup``); both shrink proportionally for
    spans too short to reach cruise.  Velocity and acceleration references
    scale by the chain rule with rate and rate_dot.
    """
    if warmup <= 0.0:
        if s >= span:
            return span, 0.0, 0.0
        return s, 1.0, 0.0
    ramp_in = warmup
    exit_ramp = warmup if ramp_out is None else ramp_out
    if math.isfinite(span):
        need = 0.5 * (ramp_in + exit_ramp)
        if 0.0 < span < need:
            ramp_in *= span / need
            exit_ramp *= span / need
    if ramp_in <= 0.0 or s <= 0.0:
        return 0.0, 0.0, 0.0
    if s < ramp_in:  # ease in; covers ramp_in/2 of trajectory time
        u = s / ramp_in
        tau = ramp_in * (u ** 3 - 0.5 * u ** 4)
        rate = (3.0 - 2.0 * u) * u * u
        rate_dot = 6.0 * u * (1.0 - u) / ramp_in
        return tau, rate, rate_dot
    start_out = span + 0.5 * (ramp_in - exit_ramp)
    if s < start_out or exit_ramp <= 0.0:  # cruise at unit rate
        if s - 0.5 * ramp_in >= span:
            return span, 0.0, 0.0
        return s - 0.5 * ramp_in, 1.0, 0.0
    if s < start_out + exit_ramp:  # ease out; covers the last exit_ramp/2
        u = (s - start_out) / exit_ramp
        tau = span - 0.5 * exit_ramp + exit_ramp * (u - u ** 3 + 0.5 * u ** 4)
        rate = 1.0 - (3.0 - 2.0 * u) * u * u
        rate_dot = -6.0 * u * (1.0 - u) / exit_ramp
        return tau, rate, rate_dot
    return span, 0.0, 0.0


def shape_demand(
    f_xy: np.ndarray,
    box: BoxState,
    params: BoxParams,
    ground: GroundModel,
    contacts_world: list[np.ndarray],
    quad_positions: np.ndarray,
    coupled: bool,
    v_ref: np.ndarray | None = None,
    rest_speed: float = REST_SPEED,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Clamp a planar force demand into the cone the two pulling cables span.

    Mirrors the exact tension solve, but instead of failing on infeasible
    demands it zeroes negative cable magnitudes and caps the total upward
    pull at HEADROOM of the box weight.  With ``coupled`` the solve folds the
    flat-support kinetic friction into the demand (the net-force convention);
    otherwise the planar tension components match the demand directly.

    The friction feedforward direction follows the box's planar velocity
    when it moves faster than ``rest_speed``, or the reference velocity
    ``v_ref`` otherwise; with neither available no friction is compensated,
    so a box at rest is not kicked by a feedforward whose direction is only
    velocity noise.

    Returns ``(f_cmd, t1, t2, vhat)`` where f_cmd is the planar force the
    returned tensions actually command under the same convention.
    """
    f_xy = np.asarray(f_xy, dtype=float)[:2]
    d1 = quad_positions[0] - contacts_world[0]
    d2 = quad_positions[1] - contacts_world[1]
    n1 = np.linalg.norm(d1)
    n2 = np.linalg.norm(d2)
    weight = params.m_b * GRAVITY
    disturbance = ground.disturbance
    if coupled:
        speed = math.hypot(box.v_b[0], box.v_b[1])
        ref_speed = 0.0 if v_ref is None else math.hypot(v_ref[0], v_ref[1])
        if speed > rest_speed:
            vhat = box.v_b[:2] / speed
        elif ref_speed > rest_speed:
            vhat = np.asarray(v_ref, dtype=float)[:2] / ref_speed
        else:
            vhat = np.zeros(2)
        offset = -disturbance[:2] + ground.mu_k * (weight - disturbance[2]) * vhat
    else:
        vhat = np.zeros(2)
        offset = np.zeros(2)
    zero = np.zeros(3)
    if n1 < 1e-9 or n2 < 1e-9:
        return -offset, zero, zero, vhat
    u1 = d1 / n1
    u2 = d2 / n2
    if coupled:
        w1 = u1[:2] + ground.mu_k * u1[2] * vhat
        w2 = u2[:2] + ground.mu_k * u2[2] * vhat
    else:
        w1 = u1[:2]
        w2 = u2[:2]
    b = f_xy + offset
    det = w1[0] * w2[1] - w1[1] * w2[0]
    if abs(det) < 1e-12:
        return -offset, zero, zero, vhat
    m1 = (b[0] * w2[1] - b[1] * w2[0]) / det
    m2 = (w1[0] * b[1] - w1[1] * b[0]) / det
    m1 = max(m1, 0.0)
    m2 = max(m2, 0.0)
    if isinstance(box.support, FlatOnGround):
        lift = m1 * max(u1[2], 0.0) + m2 * max(u2[2], 0.0)
        cap = HEADROOM * weight
        if lift > cap:
            scale = cap / lift
            m1 *= scale
            m2 *= scale
    f_cmd = m1 * w1 + m2 * w2 - offset
    return f_cmd, m1 * u1, m2 * u2, vhat


@dataclass
class RunResult:
    """Everything a finished run produced besides the CSV file itself."""

    config: ScenarioConfig
    records: list[LogRecord]
    events: list[tuple[float, str, str]]
    t: np.ndarray
    demand: np.ndarray  # (n, 2) commanded planar box force per step
    tensions: np.ndarray  # (n, 2, 3) world tension vectors per step
    vhat: np.ndarray  # (n, 2) friction direction used by the solve
    coupled: np.ndarray  # (n,) True where the friction-coupled solve ran
    taut: np.ndarray  # (n,) True on steps commanded through taut cables
    max_tension_residual: float
    wall_time: float


class _LegRunner:
    """Plays a waypoint leg list as two synchronized position references."""

    def __init__(self, legs, start1: np.ndarray, start2: np.ndarray) -> None:
        self.legs = list(legs)
        self.index = 0
        self.clock = 0.0
        self.start1 = np.array(start1, dtype=float)
        self.start2 = np.array(start2, dtype=float)

    def _leg_total(self, leg) -> tuple[float, float]:
        d1 = float(np.linalg.norm(leg.quad1 - self.start1))
        d2 = float(np.linalg.norm(leg.quad2 - self.start2))
        move = max(d1, d2) / leg.speed if leg.speed > 0.0 and max(d1, d2) > 0.0 else 0.0
        return move, move + leg.hold

    def refs(self, dt: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Reference positions and velocities for this step; advances time."""
        while self.index < len(self.legs):
            leg = self.legs[self.index]
            move, total = self._leg_total(leg)
            if self.clock >= total:
                self.start1 = np.array(leg.quad1, dtype=float)
                self.start2 = np.array(leg.quad2, dtype=float)
                self.clock -= total
                self.index += 1
                continue
            break
        if self.index >= len(self.legs):
            self.clock += dt
            return self.start1.copy(), np.zeros(3), self.start2.copy(), np.zeros(3)
        leg = self.legs[self.index]
        move, _ = self._leg_total(leg)
        if move > 0.0 and self.clock < move:
            frac = self.clock / move
            r1 = self.start1 + (leg.quad1 - self.start1) * frac
            r2 = self.start2 + (leg.quad2 - self.start2) * frac
            v1 = (leg.quad1 - self.start1) / move
            v2 = (leg.quad2 - self.start2) / move
        else:
            r1 = np.array(leg.quad1, dtype=float)
            r2 = np.array(leg.quad2, dtype=float)
            v1 = np.zeros(3)
            v2 = np.zeros(3)
        self.clock += dt
        return r1, v1, r2, v2

    @property
    def presenting(self) -> bool:
        """True once the cable is being swept onto the box (advance onward)."""
        if self.index >= len(self.legs):
            return True
        return self.legs[self.index].name in ("advance", "narrow", "settle")

    @property
    def tightening(self) -> bool:
        """True once the span is being narrowed to pull the cable taut."""
        if self.index >= len(self.legs):
            return True
        return self.legs[self.index].name in ("narrow", "settle")


def _pack_quad(state: QuadrotorState) -> np.ndarray:
    return np.concatenate([state.r, state.v, state.R.ravel(), state.omega])


def _pack_box(state: BoxState) -> np.ndarray:
    return np.concatenate([state.r_b, state.v_b, state.R_b.ravel(), state.omega_b])


class _Driver:
    """Owns all mutable run state and advances it one control period at a time."""

    def __init__(self, config: ScenarioConfig) -> None:
        self.config = config
        self.dt = config.sim.dt
        self.floor = config.sim.floor
        self.box_params = config.box.to_params()
        self.ground = config.ground.to_model()
        self.cable_length = config.cable.length
        self.cable_friction = config.cable.to_friction()
        self.gains = config.gains.to_gains()
        self.quad_params = config.quad.to_params()
        self.trajectory = build_trajectory(config)
        self.scheduled = bool(config.trajectory.schedule)
        self.schedule = sorted(config.trajectory.schedule or [], key=lambda e: e.t)
        self.schedule_idx = 0

        ref0 = self.trajectory(0.0)
        h = self.box_params.h
        self.box = BoxState(
            r_b=np.array([ref0.r[0], ref0.r[1], h / 2.0]),
            v_b=np.zeros(3),
            R_b=rot_z(ref0.psi),
            omega_b=np.zeros(3),
            support=FlatOnGround(),
        )

        self.mode = Mode.FREE_CATENARY
        self.prev = GuardFlags()
        self.events: list[tuple[float, str, str]] = []
        self.records: list[LogRecord] = []
        self.k = 0
        self.done = False
        self.attempt = 1
        self.integral = IntegralState()
        self.contacts: list[ContactPoint] | None = None
        self.placement: ContactPlacement | None = None
        self.pending_kind: ActionKind | None = None
        self.action_t0 = 0.0
        self.tau_offset = 0.0
        self.rig_delta = 0.0
        self.rig_delta_model = 0.0
        self.rig_trim = 0.0
        self.rig_ff_prev = 0.0
        self.rig_rate = 0.0
        self.s_end = config.sim.duration
        self.quarter_t0 = 0.0
        self.quarters = 0
        self.log_phi = 0.0
        self.last_t1 = np.zeros(3)
        self.last_t2 = np.zeros(3)
        self.rig = None

        # Traces for the per-step tension audit.
        self.trace_t: list[float] = []
        self.trace_demand: list[np.ndarray] = []
        self.trace_tension: list[np.ndarray] = []
        self.trace_vhat: list[np.ndarray] = []
        self.trace_coupled: list[bool] = []
        self.trace_taut: list[bool] = []
        self.max_residual = 0.0

        self._plan_attempt(with_retreat=False, spawn=True)

    # ---------------------------------------------------------------- planning

    def _motion_dir_body(self) -> np.ndarray:
        """Unit motion direction in the box frame, probed from the trajectory."""
        for probe in (1e-3, 0.1, 0.5, 1.0):
            v = self.trajectory(probe).v[:2]
            speed = np.linalg.norm(v)
            if speed > 1e-9:
                d = np.append(v / speed, 0.0)
                return self.box.R_b.T @ d
        return self.box.R_b.T @ E1

    def _build_placement(self, kind: ActionKind) -> ContactPlacement:
        cfg = self.config.placement
        motion = self._motion_dir_body()
        if kind is ActionKind.DRAG:
            placement = drag_placement(
                self.box_params,
                motion,
                self.cable_length,
                alpha=cfg.alpha,
                gamma=cfg.gamma,
                clearance=cfg.clearance,
            )
        else:
            placement = roll_placement(
                self.box_params,
                motion,
                self.cable_length,
                z_roll=cfg.z_roll,
                alpha=cfg.alpha,
                gamma=cfg.gamma,
            )
        if cfg.gamma_override is not None and self.attempt == 1:
            placement = replace(placement, gamma=cfg.gamma_override)
        return raise_gamma_for_floor(placement, self.box, self.floor)

    def _decide_kind(self) -> ActionKind:
        if self.scheduled:
            first = self.schedule[0].action
            return ActionKind.DRAG if first == "drag" else ActionKind.ROLL
        decision = choose_action(self.box_params, self.ground, self.config.placement.z_roll)
        return decision.action

    def _plan_attempt(self, with_retreat: bool, spawn: bool = False) -> None:
        kind = self._decide_kind()
        self.pending_kind = kind
        self.placement = self._build_placement(kind)
        adv = self.box.R_b @ (rot_z(self.placement.motion_yaw) @ E1)
        adv = adv / np.linalg.norm(adv)
        self.free_yaw = math.atan2(adv[1], adv[0])

        if spawn:
            # Spawn hovering above the carry stage so the first legs are short.
            probe = approach_waypoints(
                np.zeros((2, 3)) + np.array([0.0, 0.0, SAFE_ALTITUDE]),
                self.placement,
                self.box,
                self.box_params,
                floor=self.floor,
            )
            carry = next(leg for leg in probe if leg.name == "carry")
            spawn1 = np.array([carry.quad1[0], carry.quad1[1], SAFE_ALTITUDE])
            spawn2 = np.array([carry.quad2[0], carry.quad2[1], SAFE_ALTITUDE])
            self.quad1 = QuadrotorState(
                r=spawn1, v=np.zeros(3), R=np.eye(3), omega=np.zeros(3)
            )
            self.quad2 = QuadrotorState(
                r=spawn2, v=np.zeros(3), R=np.eye(3), omega=np.zeros(3)
            )

        legs = []
        q1 = self.quad1.r.copy()
        q2 = self.quad2.r.copy()
        if with_retreat:
            lift1 = np.array([q1[0], q1[1], SAFE_ALTITUDE])
            lift2 = np.array([q2[0], q2[1], SAFE_ALTITUDE])
            legs.append(ApproachLeg("retreat", lift1, lift2, speed=RETREAT_SPEED))
            q1, q2 = lift1, lift2
        legs.extend(
            approach_waypoints(
                np.stack([q1, q2]),
                self.placement,
                self.box,
                self.box_params,
                floor=self.floor,
            )
        )
        self.runner = _LegRunner(legs, self.quad1.r, self.quad2.r)

    def _plan_park(self) -> None:
        """After the mission completes the quadrotors lift the cable clear."""
        q1 = self.quad1.r.copy()
        q2 = self.quad2.r.copy()
        lift1 = np.array([q1[0], q1[1], SAFE_ALTITUDE])
        lift2 = np.array([q2[0], q2[1], SAFE_ALTITUDE])
        legs = [ApproachLeg("park", lift1, lift2, speed=RETREAT_SPEED)]
        self.runner = _LegRunner(legs, q1, q2)

    # ------------------------------------------------------------- transitions

    def _transition(self, event: GuardEvent, t: float) -> None:
        self.mode = step_mode(self.mode, event, action=self.pending_kind)
        self.events.append((t, event.value, self.mode.token))
        self.prev = GuardFlags()
        if self.mode is Mode.ACTION_DRAG:
            self.contacts = [self.placement.p1, self.placement.p2]
            self.action_t0 = t
            self.integral = IntegralState()
            self.s_end = self._trajectory_span()
            self.tau_offset = self._nearest_trajectory_parameter()
            self.rig_delta = 0.0
            self.rig_delta_model = 0.0
            self.rig_trim = 0.0
            self.rig_ff_prev = 0.0
            self.rig_rate = 0.0
            self._rig_offsets = quad_offsets_body(self.placement)
            self.log_phi = 0.0
        elif self.mode is Mode.ACTION_ROLL:
            self.quarters = 0
            self.quarter_t0 = t
            self.log_phi = 0.0
            self._roll_rig()
        elif self.mode is Mode.FREE_CATENARY:
            self.contacts = None
            self.last_t1 = np.zeros(3)
            self.last_t2 = np.zeros(3)
            if not self.scheduled:
                if event is GuardEvent.ACTION_COMPLETE:
                    self.done = True
                    self._plan_park()
                elif event in (GuardEvent.SLIP_DETECTED, GuardEvent.LIFT_OFF_DETECTED):
                    self.attempt += 1
                    self._plan_attempt(with_retreat=True)

    def _apply_schedule(self, t: float) -> None:
        while self.schedule_idx < len(self.schedule):
            entry = self.schedule[self.schedule_idx]
            if t < entry.t - 1e-12:
                break
            kind = ActionKind.DRAG if entry.action == "drag" else ActionKind.ROLL
            if self.mode.is_action:
                self._transition(GuardEvent.ACTION_COMPLETE, t)
            if self.mode is Mode.FREE_CATENARY:
                self.pending_kind = kind
                self.placement = self._build_placement(kind)
                self._transition(GuardEvent.CONTACT_MADE, t)
            if self.mode is Mode.INITIAL_CONTACT:
                self.pending_kind = kind
                self._transition(GuardEvent.CABLE_TAUT, t)
            self.schedule_idx += 1

    def _trajectory_span(self) -> float:
        traj = self.config.trajectory
        if traj.builtin is not None:
            span = _TRAJECTORY_SPANS.get(traj.builtin)
            if span is not None:
                return span
            return self.config.sim.duration
        return max(seg.t_end for seg in traj.segments)

    def _nearest_trajectory_parameter(self) -> float:
        """Trajectory parameter whose position is closest to the box.

        A drag that re-engages after a slip resumes from where the box
        actually is instead of snapping the reference back to the start.
        """
        best_tau, best_err = 0.0, math.inf
        for tau in np.linspace(0.0, self.s_end, 257):
            ref = self.trajectory(float(tau))
            err = float(np.hypot(ref.r[0] - self.box.r_b[0],
                                 ref.r[1] - self.box.r_b[1]))
            if err < best_err:
                best_tau, best_err = float(tau), err
        return best_tau

    # ------------------------------------------------------------------ guards

    def _cable_touches_box(self) -> bool:
        positions = np.stack([self.quad1.r, self.quad2.r])
        try:
            shape = solve_catenary(positions, self.cable_length)
        except (TautOrOverstretched, DegenerateVertical):
            return False
        return len(detect_contact(shape, self.box, self.box_params, n=DETECT_SAMPLES)) > 0

    def _completion(self) -> bool:
        if self.mode is Mode.ACTION_ROLL:
            return self.quarters >= self.config.placement.quarter_rolls
        end = self.trajectory(self.s_end)
        err = np.linalg.norm(self.box.r_b[:2] - end.r[:2])
        yaw_err = abs(wrap_angle(box_yaw(self.box) - end.psi))
        return err <= DRAG_TOL_POS and yaw_err <= DRAG_TOL_YAW

    def _flags(self) -> GuardFlags:
        flags = GuardFlags()
        if self.done:
            return flags
        if self.mode is Mode.FREE_CATENARY:
            if self.runner.presenting:
                flags.contact = self._cable_touches_box()
        elif self.mode is Mode.INITIAL_CONTACT:
            if self.runner.tightening:
                worlds = [
                    contact_point_world(self.placement.p1, self.box),
                    contact_point_world(self.placement.p2, self.box),
                ]
                positions = np.stack([self.quad1.r, self.quad2.r])
                flags.taut = detect_taut(positions, worlds, self.cable_length)
        elif self.mode.is_action:
            positions = np.stack([self.quad1.r, self.quad2.r])
            anchor = None
            if isinstance(self.box.support, PivotingOnEdge):
                anchor = self.box.support.anchor
            angles = measured_contact_angles(self.contacts, self.box, positions, pivot_anchor=anchor)
            flags.slip = slip_check(angles, self.cable_friction)
            flags.complete = self._completion()
            if isinstance(self.box.support, FlatOnGround):
                lift = self.last_t1[2] + self.last_t2[2] + self.ground.disturbance[2]
                flags.liftoff = lift > self.box_params.m_b * GRAVITY
        return flags

    # --------------------------------------------------------------- directors

    def _direct_legs(self, t: float):
        r1, v1, r2, v2 = self.runner.refs(self.dt)
        yaw = self.free_yaw
        ref1 = QuadReference(r=r1, v=v1, a=np.zeros(3), yaw=yaw)
        ref2 = QuadReference(r=r2, v=v2, a=np.zeros(3), yaw=yaw)
        cmd1 = se3_controller(self.quad1, ref1, self.quad_params, self.gains)
        cmd2 = se3_controller(self.quad2, ref2, self.quad_params, self.gains)
        zero = np.zeros(3)
        return cmd1, cmd2, zero, zero, np.zeros(2), np.zeros(2), False, False

    def _warped_reference(self, t: float) -> BoxReference:
        s = t - self.action_t0
        tau, rate, rate_dot = smooth_clock(s, WARMUP, span=self.s_end - self.tau_offset,
                                           ramp_out=EASE_OUT)
        tau += self.tau_offset
        if tau >= self.s_end:
            end = self.trajectory(self.s_end)
            r = np.array([end.r[0], end.r[1], self.box_params.h / 2.0])
            return BoxReference(
                r=r, v=np.zeros(3), a=np.zeros(3), psi=end.psi, psi_dot=0.0, psi_ddot=0.0
            )
        ref = self.trajectory(tau)
        r = np.array([ref.r[0], ref.r[1], self.box_params.h / 2.0])
        v = rate * ref.v
        a = rate * rate * ref.a + rate_dot * ref.v
        psi_dot = rate * ref.psi_dot
        psi_ddot = rate * rate * ref.psi_ddot + rate_dot * ref.psi_dot
        return BoxReference(r=r, v=v, a=a, psi=ref.psi, psi_dot=psi_dot, psi_ddot=psi_ddot)

    def _rig_torque_at(self, ref: BoxReference, delta: float,
                       vhat: np.ndarray, b: np.ndarray) -> float:
        """Yaw torque the exact-force tension split applies at rig offset
        ``delta``, evaluated quasi-statically on the reference pose."""
        mu = self.ground.mu_k
        cx, cy = ref.r[0], ref.r[1]
        cz = self.box_params.h / 2.0
        cp, sp = math.cos(ref.psi), math.sin(ref.psi)
        cd = math.cos(ref.psi + delta)
        sd = math.sin(ref.psi + delta)
        torque = 0.0
        cols = []
        arms = []
        for p_body, off in ((self.placement.p1.p, self._rig_offsets[0]),
                            (self.placement.p2.p, self._rig_offsets[1])):
            ax = cp * p_body[0] - sp * p_body[1]
            ay = sp * p_body[0] + cp * p_body[1]
            dx = (cd * off[0] - sd * off[1]) - ax
            dy = (sd * off[0] + cd * off[1]) - ay
            dz = (off[2]) - p_body[2]
            n = math.sqrt(dx * dx + dy * dy + dz * dz)
            ux, uy, uz = dx / n, dy / n, dz / n
            cols.append((ux, uy, uz,
                         ux + mu * uz * vhat[0], uy + mu * uz * vhat[1]))
            arms.append((ax, ay))
        (u1x, u1y, _, w1x, w1y), (u2x, u2y, _, w2x, w2y) = cols
        det = w1x * w2y - w1y * w2x
        if abs(det) < 1e-12:
            return 0.0
        m1 = max((b[0] * w2y - b[1] * w2x) / det, 0.0)
        m2 = max((w1x * b[1] - w1y * b[0]) / det, 0.0)
        torque += m1 * (arms[0][0] * u1y - arms[0][1] * u1x)
        torque += m2 * (arms[1][0] * u2y - arms[1][1] * u2x)
        return torque

    def _rig_yaw_offset(self, ref: BoxReference, tau_target: float,
                        fallback: float) -> float:
        """Rig yaw offset whose tension split lands on ``tau_target``.

        The torque sweeps monotonically with the offset, so a bisection
        suffices; when the target lies outside the achievable band the
        nearer bound is used, and a degenerate band (slack demand, no
        tension) keeps the caller's ``fallback`` offset for continuity.
        """
        weight = self.box_params.m_b * GRAVITY
        disturbance = self.ground.disturbance
        speed = math.hypot(ref.v[0], ref.v[1])
        if speed > REST_SPEED:
            vhat = np.array([ref.v[0], ref.v[1]]) / speed
        else:
            vhat = np.zeros(2)
        offset = -disturbance[:2] + self.ground.mu_k * (weight - disturbance[2]) * vhat
        b = self.box_params.m_b * np.array([ref.a[0], ref.a[1]]) + offset
        lo, hi = -RIG_OFFSET_MAX, RIG_OFFSET_MAX
        g_lo = self._rig_torque_at(ref, lo, vhat, b) - tau_target
        g_hi = self._rig_torque_at(ref, hi, vhat, b) - tau_target
        if abs(g_hi - g_lo) < 1e-9:
            return fallback
        if g_lo >= 0.0 and g_hi >= 0.0:
            return lo if g_lo <= g_hi else hi
        if g_lo <= 0.0 and g_hi <= 0.0:
            return hi if g_hi >= g_lo else lo
        if g_lo > g_hi:
            lo, hi = hi, lo  # keep g(lo) < 0 < g(hi)
        for _ in range(30):
            mid = 0.5 * (lo + hi)
            if self._rig_torque_at(ref, mid, vhat, b) - tau_target < 0.0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def _direct_drag(self, t: float):
        ref = self._warped_reference(t)
        force, self.integral = box_wrench_pid(
            ref, self.box, self.box_params, self.gains, self.dt, self.integral
        )
        contacts_world = [contact_point_world(p, self.box) for p in self.contacts]
        positions = np.stack([self.quad1.r, self.quad2.r])
        # Yaw regulation through the rig angle: feedforward cancels the
        # contact-patch friction resisting the reference yaw rate, a small
        # PD carries tracking errors, and the bisection turns the torque
        # target into the rig offset that realizes it.
        yaw_err = wrap_angle(ref.psi - box_yaw(self.box))
        weight = self.box_params.m_b * GRAVITY
        tau_ff = -friction_twist(
            ref.v[:2], ref.psi_dot, weight, self.box_params, self.ground
        )
        j_z = float(self.box_params.J_b[2, 2])
        tau_target = (
            tau_ff
            + K_PSI_P * yaw_err
            + K_PSI_D * (ref.psi_dot - self.box.omega_b[2])
            + j_z * ref.psi_ddot
        )
        tau_target = max(-TAU_CLIP, min(TAU_CLIP, tau_target))
        delta_model = self._rig_yaw_offset(ref, tau_target, self.rig_delta_model)
        self.rig_delta_model = delta_model
        # The balancing offset sweeps as the reference slows or turns.  Its
        # sweep rate must enter the quad velocity feedforward or the quads
        # lag the swinging rig by enough to flip the realized torque sign.
        # The rate is differenced from a feedforward-only solve - a pure
        # function of the reference - so it cannot couple box state back
        # into the quad commands and excite the rig-box spring mode.
        tau_ff_only = max(-TAU_CLIP, min(TAU_CLIP, tau_ff + j_z * ref.psi_ddot))
        delta_ff = self._rig_yaw_offset(ref, tau_ff_only, self.rig_ff_prev)
        rate_raw = (delta_ff - self.rig_ff_prev) / self.dt
        self.rig_ff_prev = delta_ff
        blend = self.dt / (self.dt + RIG_RATE_FILTER)
        self.rig_rate += blend * (rate_raw - self.rig_rate)
        self.rig_rate = max(-RIG_RATE_MAX, min(RIG_RATE_MAX, self.rig_rate))
        f_cmd, t1, t2, vhat = shape_demand(
            force[:2],
            self.box,
            self.box_params,
            self.ground,
            contacts_world,
            positions,
            coupled=True,
            v_ref=ref.v,
        )
        tau_act = 0.0
        for cw, tension in zip(contacts_world, (t1, t2)):
            arm_x = cw[0] - self.box.r_b[0]
            arm_y = cw[1] - self.box.r_b[1]
            tau_act += arm_x * tension[1] - arm_y * tension[0]
        if np.linalg.norm(t1) + np.linalg.norm(t2) > 1e-2:
            self.rig_trim += self.dt * K_I_RIG * (tau_target - tau_act) / RIG_CURVE_SLOPE
            self.rig_trim = max(-RIG_TRIM_MAX, min(RIG_TRIM_MAX, self.rig_trim))
        damp = RIG_DAMP * (ref.psi_dot - self.box.omega_b[2])
        self.rig_delta = delta_model + self.rig_trim + damp
        rig = BoxReference(
            r=ref.r, v=ref.v, a=ref.a, psi=ref.psi + self.rig_delta,
            psi_dot=ref.psi_dot + self.rig_rate, psi_ddot=ref.psi_ddot,
        )
        ref1, ref2 = quad_reference_from_box(
            rig, self.placement, floor=self.floor, yaws=(rig.psi, rig.psi)
        )
        cmd1 = se3_controller(self.quad1, ref1, self.quad_params, self.gains, tension_ff=t1)
        cmd2 = se3_controller(self.quad2, ref2, self.quad_params, self.gains, tension_ff=t2)
        self.log_ref = (ref.r[0], ref.r[1], ref.psi, 0.0)
        return cmd1, cmd2, t1, t2, f_cmd, vhat, True, True

    def _roll_rig(self) -> None:
        """Freeze the pivot geometry and grip targets from the current pose."""
        pl = self.placement
        p = self.box_params
        fwd = self.box.R_b @ (rot_z(pl.motion_yaw) @ E1)
        fwd = np.array([fwd[0], fwd[1], 0.0])
        fwd /= np.linalg.norm(fwd)
        axis = np.array([-fwd[1], fwd[0], 0.0])
        anchor = self.box.r_b + fwd * (p.l / 2.0)
        anchor = np.array([anchor[0], anchor[1], 0.0])
        rear = self.box.r_b[:2] - fwd[:2] * (p.l / 2.0)
        c1 = np.array([rear[0], rear[1], pl.z_contact]) - axis * (p.w / 2.0)
        c2 = np.array([rear[0], rear[1], pl.z_contact]) + axis * (p.w / 2.0)
        body1 = self.box.R_b.T @ (c1 - self.box.r_b)
        body2 = self.box.R_b.T @ (c2 - self.box.r_b)
        self.contacts = [
            ContactPoint(p=body1, edge="rear-vertical"),
            ContactPoint(p=body2, edge="rear-vertical"),
        ]
        yaw = math.atan2(fwd[1], fwd[0])
        turn = rot_z(yaw)
        grip1 = c1 + pl.l1 * (turn @ cable_direction(pl.alpha, pl.gamma, side=-1))
        grip2 = c2 + pl.l2 * (turn @ cable_direction(pl.alpha, pl.gamma, side=+1))
        target = self.box.r_b + fwd * (p.l / 2.0 + p.h / 2.0)
        self.rig = {
            "fwd": fwd,
            "axis": axis,
            "anchor": anchor,
            "grips": (grip1, grip2),
            "yaw": yaw,
            "target": target,
        }

    def _pivot_pacing(self, t: float) -> tuple[float, float, float, float]:
        """Returns (phi_d, phi_dot_d, phi_ddot_d, stage_fraction or -1)."""
        s = t - self.quarter_t0
        if self.quarters >= self.config.placement.quarter_rolls:
            return math.pi / 2.0, 0.0, 0.0, -1.0
        if s < ROLL_STAGE:
            return 0.0, 0.0, 0.0, s / ROLL_STAGE
        u = (s - ROLL_STAGE) / ROLL_DURATION
        if u >= 1.0:
            return math.pi / 2.0, 0.0, 0.0, -1.0
        half_pi = math.pi / 2.0
        phi = half_pi * (3.0 - 2.0 * u) * u * u
        phi_dot = half_pi * 6.0 * u * (1.0 - u) / ROLL_DURATION
        phi_ddot = half_pi * (6.0 - 12.0 * u) / ROLL_DURATION ** 2
        return phi, phi_dot, phi_ddot, -1.0

    def _direct_roll(self, t: float):
        p = self.box_params
        rig = self.rig
        phi_d, phi_dot_d, phi_ddot_d, staging = self._pivot_pacing(t)
        pivoting = isinstance(self.box.support, PivotingOnEdge)
        theta = self.box.support.theta if pivoting else 0.0
        theta_dot = self.box.support.theta_dot if pivoting else 0.0
        inertia = pivot_inertia(p)
        if self.quarters >= self.config.placement.quarter_rolls:
            torque = 0.0
        elif staging >= 0.0:
            torque = staging * PRETENSION * (-pivot_gravity_torque(0.0, p))
        else:
            accel = (
                phi_ddot_d
                + K_P_PIVOT * (phi_d - theta)
                + K_D_PIVOT * (phi_dot_d - theta_dot)
            )
            torque = inertia * accel - pivot_gravity_torque(theta, p)
        torque = max(torque, 0.0)

        contacts_world = [contact_point_world(c, self.box) for c in self.contacts]
        positions = np.stack([self.quad1.r, self.quad2.r])
        f_cmd = np.zeros(2)
        t1 = np.zeros(3)
        t2 = np.zeros(3)
        vhat = np.zeros(2)
        if torque > 0.0:
            unit_cmd, u1, u2, _ = shape_demand(
                rig["fwd"][:2],
                self.box,
                p,
                self.ground,
                contacts_world,
                positions,
                coupled=False,
            )
            per_unit = sum(
                np.dot(cross3(cw - rig["anchor"], u), rig["axis"])
                for cw, u in zip(contacts_world, (u1, u2))
            )
            if per_unit > 1e-9:
                scale = torque / per_unit
                f_cmd, t1, t2, vhat = shape_demand(
                    scale * rig["fwd"][:2],
                    self.box,
                    p,
                    self.ground,
                    contacts_world,
                    positions,
                    coupled=False,
                )

        if not pivoting and torque > 0.0:
            applied = sum(
                np.dot(cross3(cw - rig["anchor"], tw), rig["axis"])
                for cw, tw in zip(contacts_world, (t1, t2))
            )
            if applied + pivot_gravity_torque(0.0, p) > 1e-12:
                self.box.support = PivotingOnEdge(
                    edge_id="leading-bottom",
                    theta=0.0,
                    theta_dot=0.0,
                    anchor=rig["anchor"].copy(),
                    axis=rig["axis"].copy(),
                    forward=rig["fwd"].copy(),
                    com0=self.box.r_b.copy(),
                    R0=self.box.R_b.copy(),
                )
                self.box.v_b = np.zeros(3)
                self.box.omega_b = np.zeros(3)

        grip1, grip2 = rig["grips"]
        base1 = QuadReference(r=grip1, v=np.zeros(3), a=np.zeros(3), yaw=rig["yaw"])
        base2 = QuadReference(r=grip2, v=np.zeros(3), a=np.zeros(3), yaw=rig["yaw"])
        ref1 = rotate_reference_about_axis(
            base1, rig["anchor"], rig["axis"], phi_d, phi_dot_d, phi_ddot_d
        )
        ref2 = rotate_reference_about_axis(
            base2, rig["anchor"], rig["axis"], phi_d, phi_dot_d, phi_ddot_d
        )
        cmd1 = se3_controller(self.quad1, ref1, self.quad_params, self.gains, tension_ff=t1)
        cmd2 = se3_controller(self.quad2, ref2, self.quad_params, self.gains, tension_ff=t2)
        target = rig["target"]
        self.log_ref = (target[0], target[1], rig["yaw"], phi_d)
        return cmd1, cmd2, t1, t2, f_cmd, vhat, False, True

    def _direct(self, t: float):
        if self.mode is Mode.ACTION_DRAG:
            return self._direct_drag(t)
        if self.mode is Mode.ACTION_ROLL:
            return self._direct_roll(t)
        return self._direct_legs(t)

    # ------------------------------------------------------------- integration

    def _integrate_quad(self, state: QuadrotorState, cmd: QuadCommand, tension_world: np.ndarray) -> QuadrotorState:
        pull = -tension_world

        def deriv(y: np.ndarray) -> np.ndarray:
            s = QuadrotorState(
                r=y[0:3], v=y[3:6], R=y[6:15].reshape(3, 3), omega=y[15:18]
            )
            d = quad_derivative(s, self.quad_params, cmd.f, cmd.tau, s.R.T @ pull)
            return np.concatenate([d.dr, d.dv, d.dR.ravel(), d.domega])

        y = rk4_step(_pack_quad(state), deriv, self.dt)
        return QuadrotorState(
            r=y[0:3],
            v=y[3:6],
            R=renormalize_rotation(y[6:15].reshape(3, 3)),
            omega=y[15:18],
        )

    def _integrate_box_flat(self, t1: np.ndarray, t2: np.ndarray) -> None:
        pairs = list(zip((c.p for c in self.contacts), (t1, t2))) if self.contacts else []
        support = self.box.support

        def deriv(y: np.ndarray) -> np.ndarray:
            s = BoxState(
                r_b=y[0:3],
                v_b=y[3:6],
                R_b=y[6:15].reshape(3, 3),
                omega_b=y[15:18],
                support=support,
            )
            d = box_derivative(s, self.box_params, self.ground, pairs)
            return np.concatenate([d.dr, d.dv, d.dR.ravel(), d.domega])

        y = rk4_step(_pack_box(self.box), deriv, self.dt)
        self.box = BoxState(
            r_b=y[0:3],
            v_b=y[3:6],
            R_b=renormalize_rotation(y[6:15].reshape(3, 3)),
            omega_b=y[15:18],
            support=support,
        )
        self._stick_snap(t1, t2)

    def _stick_snap(self, t1: np.ndarray, t2: np.ndarray) -> None:
        """Kill sub-step Coulomb chatter: a box the static cone holds stays put."""
        d = self.ground.disturbance
        normal = self.box_params.m_b * GRAVITY - d[2] - t1[2] - t2[2]
        if normal <= 0.0:
            return
        applied = t1[:2] + t2[:2] + d[:2]
        if np.linalg.norm(applied) > self.ground.mu_s * normal:
            return
        creep = self.ground.mu_k * normal / self.box_params.m_b * self.dt * 1.5
        if np.linalg.norm(self.box.v_b[:2]) <= creep:
            self.box.v_b = np.zeros(3)

    def _integrate_box_pivot(self, t: float, t1: np.ndarray, t2: np.ndarray) -> None:
        support = self.box.support
        pairs = list(zip((c.p for c in self.contacts), (t1, t2)))
        probe = BoxState(
            r_b=self.box.r_b,
            v_b=self.box.v_b,
            R_b=self.box.R_b,
            omega_b=self.box.omega_b,
            support=support,
        )

        def deriv(y: np.ndarray) -> np.ndarray:
            support.theta = y[0]
            support.theta_dot = y[1]
            return np.array([y[1], rolling_pivot_derivative(probe, self.box_params, pairs)])

        y = rk4_step(np.array([support.theta, support.theta_dot]), deriv, self.dt)
        support.theta = y[0]
        support.theta_dot = y[1]
        if support.theta >= math.pi / 2.0:
            self.box = impact_resolution(
                BoxState(
                    r_b=self.box.r_b,
                    v_b=self.box.v_b,
                    R_b=self.box.R_b,
                    omega_b=self.box.omega_b,
                    support=support,
                )
            )
            self.quarters += 1
            self.log_phi = math.pi / 2.0
            if self.quarters < self.config.placement.quarter_rolls:
                self.quarter_t0 = t + self.dt
                self.log_phi = 0.0
                self._roll_rig()
        elif support.theta < 0.0:
            self.box = BoxState(
                r_b=support.com0.copy(),
                v_b=np.zeros(3),
                R_b=support.R0.copy(),
                omega_b=np.zeros(3),
                support=FlatOnGround(),
            )
        else:
            r_b, v_b, R_b, omega_b = box_pose_from_pivot(support)
            self.box = BoxState(r_b=r_b, v_b=v_b, R_b=R_b, omega_b=omega_b, support=support)

    def _check_divergence(self, t: float) -> None:
        for label, value in (
            ("quad1", self.quad1),
            ("quad2", self.quad2),
        ):
            m = max(np.max(np.abs(value.r)), np.max(np.abs(value.v)), np.max(np.abs(value.omega)))
            if not np.isfinite(m) or m > DIVERGENCE_BOUND:
                raise SimulationDiverged(f"{label} state magnitude {m:.3g} exceeds bound", t=t)
        m = max(
            np.max(np.abs(self.box.r_b)),
            np.max(np.abs(self.box.v_b)),
            np.max(np.abs(self.box.omega_b)),
        )
        if not np.isfinite(m) or m > DIVERGENCE_BOUND:
            raise SimulationDiverged(f"box state magnitude {m:.3g} exceeds bound", t=t)

    # --------------------------------------------------------------------- step

    def step(self) -> None:
        t = self.k * self.dt
        if self.scheduled:
            self._apply_schedule(t)
        else:
            flags = self._flags()
            events = emit_guards(self.mode, flags, self.prev)
            if events:
                self._transition(events[0], t)
            else:
                self.prev = flags

        try:
            cmd1, cmd2, t1, t2, f_cmd, vhat, coupled, taut = self._direct(t)
            self._append_record(t, t1, t2)
            self._append_trace(t, f_cmd, t1, t2, vhat, coupled, taut)
            self.last_t1 = t1
            self.last_t2 = t2
            self.quad1 = self._integrate_quad(self.quad1, cmd1, t1)
            self.quad2 = self._integrate_quad(self.quad2, cmd2, t2)
            if isinstance(self.box.support, PivotingOnEdge):
                self._integrate_box_pivot(t, t1, t2)
            else:
                self._integrate_box_flat(t1, t2)
        except SimulationError as exc:
            if exc.t is None:
                raise type(exc)(exc.args[0], t=t) from exc
            raise
        self._check_divergence(t)
        self.k += 1

    def _append_record(self, t: float, t1: np.ndarray, t2: np.ndarray) -> None:
        if isinstance(self.box.support, PivotingOnEdge):
            phi = self.box.support.theta
        elif self.mode is Mode.ACTION_ROLL and self.quarters == 0:
            phi = self.log_phi
        else:
            phi = self.log_phi
        if not hasattr(self, "log_ref"):
            ref0 = self.trajectory(0.0)
            self.log_ref = (ref0.r[0], ref0.r[1], ref0.psi, 0.0)
        self.records.append(
            LogRecord(
                t=t,
                q1=tuple(self.quad1.r),
                q2=tuple(self.quad2.r),
                box=tuple(self.box.r_b),
                byaw=box_yaw(self.box),
                bphi=phi,
                mode=self.mode.token,
                T1=float(np.linalg.norm(t1)),
                T2=float(np.linalg.norm(t2)),
                ref=self.log_ref,
            )
        )

    def _append_trace(
        self,
        t: float,
        f_cmd: np.ndarray,
        t1: np.ndarray,
        t2: np.ndarray,
        vhat: np.ndarray,
        coupled: bool,
        taut: bool,
    ) -> None:
        self.trace_t.append(t)
        self.trace_demand.append(np.asarray(f_cmd, dtype=float).copy())
        self.trace_tension.append(np.stack([t1, t2]))
        self.trace_vhat.append(np.asarray(vhat, dtype=float).copy())
        self.trace_coupled.append(coupled)
        self.trace_taut.append(taut)
        if taut:
            d = self.ground.disturbance
            planar = t1[:2] + t2[:2]
            if coupled:
                normal = self.box_params.m_b * GRAVITY - d[2] - t1[2] - t2[2]
                realized = planar + d[:2] - self.ground.mu_k * normal * vhat
            else:
                realized = planar
            residual = float(np.linalg.norm(realized - f_cmd))
            if residual > self.max_residual:
                self.max_residual = residual


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Run a configured scenario to completion and return its full trace."""
    started = time.perf_counter()
    driver = _Driver(config)
    steps = int(round(config.sim.duration / config.sim.dt))
    for _ in range(steps):
        driver.step()
    wall = time.perf_counter() - started

    def stack(rows: list, width: tuple[int, ...]) -> np.ndarray:
        if rows:
            return np.array(rows, dtype=float)
        return np.zeros((0,) + width)

    return RunResult(
        config=config,
        records=driver.records,
        events=driver.events,
        t=np.array(driver.trace_t, dtype=float),
        demand=stack(driver.trace_demand, (2,)),
        tensions=stack(driver.trace_tension, (2, 3)),
        vhat=stack(driver.trace_vhat, (2,)),
        coupled=np.array(driver.trace_coupled, dtype=bool),
        taut=np.array(driver.trace_taut, dtype=bool),
        max_tension_residual=driver.max_residual,
        wall_time=wall,
    )
