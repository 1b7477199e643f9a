"""Newton-Euler dynamics for the two quadrotors and the box.

The box has two support regimes: flat on the ground (planar translation with
Coulomb friction plus yaw) and pivoting about a bottom edge (a single-DOF
rotation used for rolling).  A classical fixed-step RK4 integrator advances
flat state vectors; rotation blocks are re-orthonormalized after each step by
the caller via :func:`catenary_sim.geometry.renormalize_rotation`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import NegativeNormal
from .geometry import E3, cross3, hat, rotation_about

GRAVITY = 9.81
VELOCITY_FLOOR = 1e-9  # m/s below which the box counts as at rest


def _require_spd(j: np.ndarray, name: str) -> None:
    if not np.allclose(j, j.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if np.any(np.linalg.eigvalsh(j) <= 0.0):
        raise ValueError(f"{name} must be positive definite")


@dataclass(frozen=True)
class QuadrotorParams:
    """Mass (kg) and inertia tensor (kg m^2) of one quadrotor.

    ``J_inv`` is precomputed once so the integration loop avoids a linear
    solve on every derivative evaluation.
    """

    m: float
    J: np.ndarray

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("quadrotor mass must be positive")
        object.__setattr__(self, "J", np.asarray(self.J, dtype=float))
        _require_spd(self.J, "quadrotor inertia")
        object.__setattr__(self, "J_inv", np.linalg.inv(self.J))


DEFAULT_QUAD_PARAMS = QuadrotorParams(
    m=0.12, J=np.diag([1.4e-4, 1.4e-4, 2.2e-4]))


@dataclass
class QuadrotorState:
    """World-frame position/velocity, body-to-world rotation, body rates."""

    r: np.ndarray
    v: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    def copy(self) -> "QuadrotorState":
        return QuadrotorState(self.r.copy(), self.v.copy(), self.R.copy(),
                              self.omega.copy())


def cuboid_inertia(m: float, w: float, l: float, h: float) -> np.ndarray:
    """Inertia tensor of a homogeneous cuboid about its center of mass."""
    return np.diag([
        m / 12.0 * (w * w + h * h),
        m / 12.0 * (l * l + h * h),
        m / 12.0 * (l * l + w * w),
    ])


@dataclass(frozen=True)
class BoxParams:
    """Cuboid dimensions (m), mass (kg) and inertia; inertia defaults to a
    homogeneous cuboid when not given."""

    w: float
    l: float
    h: float
    m_b: float
    J_b: np.ndarray | None = None

    def __post_init__(self):
        if min(self.w, self.l, self.h, self.m_b) <= 0:
            raise ValueError("box dimensions and mass must be positive")
        j = self.J_b
        if j is None:
            j = cuboid_inertia(self.m_b, self.w, self.l, self.h)
        j = np.asarray(j, dtype=float)
        _require_spd(j, "box inertia")
        object.__setattr__(self, "J_b", j)


@dataclass(frozen=True)
class FlatOnGround:
    """Box resting on its bottom face."""


@dataclass
class PivotingOnEdge:
    """Box rotating about a fixed bottom edge.

    The single degree of freedom is ``theta`` (0 = flat, pi/2 = fallen onto
    the next face).  ``anchor``/``axis`` fix the edge line in the world,
    ``forward`` is the horizontal roll direction, and ``com0``/``R0`` record
    the box pose at theta = 0 so the full pose is reconstructible.
    """

    edge_id: str
    theta: float
    theta_dot: float
    anchor: np.ndarray
    axis: np.ndarray
    forward: np.ndarray
    com0: np.ndarray
    R0: np.ndarray


Support = FlatOnGround | PivotingOnEdge


@dataclass
class BoxState:
    """Box pose/velocity plus its ground-support regime."""

    r_b: np.ndarray
    v_b: np.ndarray
    R_b: np.ndarray
    omega_b: np.ndarray
    support: Support = field(default_factory=FlatOnGround)

    def copy(self) -> "BoxState":
        return BoxState(self.r_b.copy(), self.v_b.copy(), self.R_b.copy(),
                        self.omega_b.copy(), self.support)


@dataclass(frozen=True)
class GroundModel:
    """Coulomb friction pair and a constant world-frame disturbance force
    on the box (stands in for rotor downwash)."""

    mu_s: float
    mu_k: float
    disturbance: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if not 0.0 <= self.mu_k <= self.mu_s:
            raise ValueError("need 0 <= mu_k <= mu_s")
        object.__setattr__(self, "disturbance",
                           np.asarray(self.disturbance, dtype=float))


@dataclass(frozen=True)
class ControlInput:
    """Collective thrusts (N) and body torques (N m) for the two quadrotors."""

    f1: float
    f2: float
    tau1: np.ndarray
    tau2: np.ndarray

    def __post_init__(self):
        if self.f1 < 0 or self.f2 < 0:
            raise ValueError("thrusts must be non-negative")


@dataclass
class QuadDerivative:
    dr: np.ndarray
    dv: np.ndarray
    dR: np.ndarray
    domega: np.ndarray


@dataclass
class BoxDerivative:
    dr: np.ndarray
    dv: np.ndarray
    dR: np.ndarray
    domega: np.ndarray
    normal: float  # ground normal force (N) implied by the applied loads


def quad_derivative(state: QuadrotorState, params: QuadrotorParams, f: float,
                    tau: np.ndarray, tension: np.ndarray) -> QuadDerivative:
    """Time derivative of one quadrotor state.

    Args:
        f: collective thrust along the body z axis (N).
        tau: body-frame torque (N m).
        tension: body-frame cable force acting on the vehicle (N).
    """
    R = state.R
    dv = (f * R[:, 2] + R @ tension) / params.m
    dv = dv - GRAVITY * E3
    domega = params.J_inv @ (cross3(params.J @ state.omega, state.omega) + tau)
    return QuadDerivative(dr=state.v.copy(), dv=dv, dR=R @ hat(state.omega),
                          domega=domega)


def planar_box_force(v_xy: np.ndarray, applied_xy: np.ndarray, normal: float,
                     ground: GroundModel) -> np.ndarray:
    """Net planar force on a flat-supported box under Coulomb friction.

    ``applied_xy`` is the tangential applied force (tensions + disturbance).
    At rest the static cone is checked; a force inside it is cancelled
    exactly, otherwise kinetic friction opposes the (imminent) motion.
    """
    speed = math.hypot(v_xy[0], v_xy[1])
    if speed <= VELOCITY_FLOOR:
        mag = math.hypot(applied_xy[0], applied_xy[1])
        if mag <= ground.mu_s * normal or mag == 0.0:
            return np.zeros(2)
        return applied_xy - (ground.mu_k * normal / mag) * applied_xy
    return applied_xy - (ground.mu_k * normal / speed) * v_xy


def friction_twist(v_xy: np.ndarray, omega_z: float, normal: float,
                   params: BoxParams, ground: GroundModel) -> float:
    """Kinetic friction torque resisting spin of the supported bottom face.

    A face that both slides and spins sees friction distributed over the
    contact patch; its net torque opposes the spin.  This is the standard
    regularized form with the patch's mean-square radius kappa^2 =
    (w^2 + l^2)/12: it reduces to -mu_k*N*kappa^2*omega/|v| for fast sliding
    and saturates near -mu_k*N*kappa*sign(omega) for spin in place.
    """
    kappa_sq = (params.w ** 2 + params.l ** 2) / 12.0
    kappa = math.sqrt(kappa_sq)
    speed = math.hypot(v_xy[0], v_xy[1])
    return (-ground.mu_k * normal * kappa_sq * omega_z
            / (speed + abs(omega_z) * kappa + VELOCITY_FLOOR))


def box_derivative(state: BoxState, params: BoxParams, ground: GroundModel,
                   tensions: Sequence[tuple[np.ndarray, np.ndarray]]
                   ) -> BoxDerivative:
    """Time derivative of a flat-supported box.

    Args:
        tensions: (contact point in box frame, world-frame cable force on the
            box) pairs.

    Raises:
        NegativeNormal: the applied loads pull the box off the ground.
    """
    if not isinstance(state.support, FlatOnGround):
        raise ValueError("box_derivative requires flat ground support")
    d = ground.disturbance
    sum_t = np.zeros(3)
    torque_body_z = 0.0
    Rb = state.R_b
    for p_body, t_world in tensions:
        sum_t = sum_t + t_world
        t_body = Rb.T @ t_world
        torque_body_z += p_body[0] * t_body[1] - p_body[1] * t_body[0]
    normal = params.m_b * GRAVITY - sum_t[2] - d[2]
    if normal < 0.0:
        raise NegativeNormal(
            f"upward pull exceeds box weight by {-normal:.4f} N")
    applied_xy = sum_t[:2] + d[:2]
    net_xy = planar_box_force(state.v_b[:2], applied_xy, normal, ground)
    dv = np.array([net_xy[0] / params.m_b, net_xy[1] / params.m_b, 0.0])
    # Rotation is restricted to yaw while the bottom face is supported; the
    # gyroscopic term vanishes for a principal-axis spin about z.  Friction
    # over the contact patch damps the spin.
    torque_body_z += friction_twist(state.v_b, state.omega_b[2], normal,
                                    params, ground)
    domega = np.array([0.0, 0.0, torque_body_z / params.J_b[2, 2]])
    dR = Rb @ hat(np.array([0.0, 0.0, state.omega_b[2]]))
    dr = state.v_b.copy()
    dr[2] = 0.0
    return BoxDerivative(dr=dr, dv=dv, dR=dR, domega=domega, normal=normal)


def pivot_inertia(params: BoxParams) -> float:
    """Moment of inertia about a bottom edge parallel to the box y axis."""
    rho_sq = (params.l / 2.0) ** 2 + (params.h / 2.0) ** 2
    return float(params.J_b[1, 1]) + params.m_b * rho_sq


def pivot_gravity_torque(theta: float, params: BoxParams) -> float:
    """Gravity torque about the pivot edge at pivot angle ``theta``.

    Negative for theta below the balance angle (restoring), positive past it
    (driving); crosses zero when the center of mass is above the edge.
    """
    arm_x = -(params.l / 2.0) * math.cos(theta) + (params.h / 2.0) * math.sin(theta)
    return params.m_b * GRAVITY * arm_x


def pivot_point_world(support: PivotingOnEdge, point0_world: np.ndarray,
                      theta: float | None = None) -> np.ndarray:
    """World position at pivot angle theta of a point given at theta = 0."""
    th = support.theta if theta is None else theta
    rot = rotation_about(support.axis, th)
    return support.anchor + rot @ (point0_world - support.anchor)


def box_pose_from_pivot(support: PivotingOnEdge
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(r_b, v_b, R_b, omega_b) reconstructed from the pivot DOF."""
    rot = rotation_about(support.axis, support.theta)
    r_b = support.anchor + rot @ (support.com0 - support.anchor)
    R_b = rot @ support.R0
    omega_world = support.theta_dot * support.axis
    v_b = cross3(omega_world, r_b - support.anchor)
    return r_b, v_b, R_b, R_b.T @ omega_world


def rolling_pivot_derivative(state: BoxState, params: BoxParams,
                             tensions: Sequence[tuple[np.ndarray, np.ndarray]]
                             ) -> float:
    """Pivot-angle acceleration for a box rotating about a bottom edge.

    ``tensions`` pairs a contact point expressed in the box frame with the
    world-frame cable force applied there.
    """
    support = state.support
    if not isinstance(support, PivotingOnEdge):
        raise ValueError("rolling_pivot_derivative requires edge support")
    torque = pivot_gravity_torque(support.theta, params)
    if tensions:
        r_b, _, R_b, _ = box_pose_from_pivot(support)
        for p_body, t_world in tensions:
            p_world = r_b + R_b @ p_body
            torque += float(np.dot(cross3(p_world - support.anchor, t_world),
                                   support.axis))
    return torque / pivot_inertia(params)


def impact_resolution(state: BoxState) -> BoxState:
    """Plastic landing of a pivoting box that reached a quarter turn.

    Velocities are zeroed, the orientation advances by exactly pi/2 about the
    edge axis, and the position snaps so the new bottom face rests on the
    ground.
    """
    support = state.support
    if not isinstance(support, PivotingOnEdge):
        raise ValueError("impact_resolution requires edge support")
    if support.theta < math.pi / 2.0:
        raise ValueError("impact_resolution requires theta >= pi/2")
    axis, fwd = support.axis, support.forward
    k = hat(axis)
    quarter = np.eye(3) + k + k @ k  # axis-angle rotation at exactly pi/2
    com_rel = support.com0 - support.anchor
    half_h = float(np.dot(com_rel, E3))  # h/2: COM height above the edge
    half_l = -float(np.dot(com_rel, fwd))  # l/2: COM setback from the edge
    r_b = support.anchor + half_h * fwd + half_l * E3
    return BoxState(
        r_b=r_b,
        v_b=np.zeros(3),
        R_b=quarter @ support.R0,
        omega_b=np.zeros(3),
        support=FlatOnGround(),
    )


def rk4_step(y: np.ndarray, deriv: Callable[[np.ndarray], np.ndarray],
             dt: float) -> np.ndarray:
    """One classical fourth-order Runge-Kutta step of a flat state vector."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k1 = deriv(y)
    k2 = deriv(y + 0.5 * dt * k1)
    k3 = deriv(y + 0.5 * dt * k2)
    k4 = deriv(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
