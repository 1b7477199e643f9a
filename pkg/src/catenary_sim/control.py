"""Box-level wrench control, quadrotor reference generation, and the
geometric tracking controller.

The control stack is layered: a PID law on the box pose produces a
desired planar force, that force is decomposed into cable tensions
(see :mod:`catenary_sim.cable`), each tension maps to a quadrotor
position reference offset from the box trajectory, and a geometric
controller on SE(3) makes each quadrotor track its reference while
feeding the commanded tension forward into its thrust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import GRAVITY, BoxParams, BoxState, QuadrotorParams, QuadrotorState
from .errors import AttitudeSingular
from .geometry import E3, cross3, hat, rot_z, rotation_about, vee, wrap_angle
from .planner import ContactPlacement, quad_offsets_body

__all__ = [
    "Gains",
    "BoxReference",
    "QuadReference",
    "IntegralState",
    "QuadCommand",
    "box_wrench_pid",
    "yaw_setpoints",
    "quad_reference_from_box",
    "rotate_reference_about_axis",
    "se3_controller",
    "box_yaw",
]

_FORCE_EPS = 1e-9  # N; required force below this has no usable direction


def _diag(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.diag(np.full(3, float(arr)))
    if arr.shape == (3,):
        return np.diag(arr)
    if arr.shape == (3, 3):
        return arr.copy()
    raise ValueError("gain must be a scalar, 3-vector, or 3x3 matrix")


@dataclass
class Gains:
    """All controller gains: box wrench PID, yaw loop, and SE(3) tracking."""

    K_p: np.ndarray = field(default_factory=lambda: np.diag([4.0, 4.0, 4.0]))
    K_v: np.ndarray = field(default_factory=lambda: np.diag([3.0, 3.0, 3.0]))
    K_i: np.ndarray = field(default_factory=lambda: np.diag([0.5, 0.5, 0.5]))
    integral_clamp: float = 0.5
    k_p_yaw: float = 2.0
    k_v_yaw: float = 0.5
    k_x: float = 8.0
    k_v: float = 4.0
    k_R: float = 0.7
    k_omega: float = 0.1

    def __post_init__(self):
        self.K_p = _diag(self.K_p)
        self.K_v = _diag(self.K_v)
        self.K_i = _diag(self.K_i)
        scalars = (self.k_p_yaw, self.k_v_yaw, self.k_x, self.k_v,
                   self.k_R, self.k_omega)
        if any(g < 0 for g in scalars) or np.any(self.K_p < 0) or \
                np.any(self.K_v < 0) or np.any(self.K_i < 0):
            raise ValueError("gains must be non-negative")
        if not self.integral_clamp > 0:
            raise ValueError("integral clamp must be positive")


@dataclass
class BoxReference:
    """Desired box trajectory sample: pose, its derivatives, and the
    desired pivot progress for rolling."""

    r: np.ndarray
    v: np.ndarray
    a: np.ndarray
    psi: float = 0.0
    psi_dot: float = 0.0
    psi_ddot: float = 0.0
    phi: float = 0.0
    phi_dot: float = 0.0

    def __post_init__(self):
        self.r = np.asarray(self.r, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.a = np.asarray(self.a, dtype=float)


@dataclass
class QuadReference:
    """Position reference with derivatives and a yaw setpoint for one
    quadrotor; ``clamped`` records whether the floor limit bit."""

    r: np.ndarray
    v: np.ndarray
    a: np.ndarray
    yaw: float = 0.0
    clamped: bool = False


@dataclass
class IntegralState:
    """Trapezoid-rule accumulator for the box wrench integral term."""

    value: np.ndarray = field(default_factory=lambda: np.zeros(3))
    prev_error: np.ndarray | None = None

    def copy(self) -> "IntegralState":
        return IntegralState(self.value.copy(),
                             None if self.prev_error is None
                             else self.prev_error.copy())


@dataclass(frozen=True)
class QuadCommand:
    """Collective thrust and body torque for a single quadrotor."""

    f: float
    tau: np.ndarray


def box_yaw(state: BoxState) -> float:
    """Yaw of the box extracted from its rotation matrix."""
    return math.atan2(state.R_b[1, 0], state.R_b[0, 0])


def box_wrench_pid(ref: BoxReference, state: BoxState, params: BoxParams,
                   gains: Gains, dt: float, integral: IntegralState
                   ) -> tuple[np.ndarray, IntegralState]:
    """Desired force on the box: PID on position plus acceleration
    feedforward.

    The integral term accumulates K_i * e_p by the trapezoid rule and is
    clamped componentwise so a sustained infeasible demand cannot wind up.
    Returns the force and the updated integral state.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    e_p = ref.r - state.r_b
    e_v = ref.v - state.v_b
    prev = integral.prev_error if integral.prev_error is not None else e_p
    value = integral.value + gains.K_i @ ((prev + e_p) / 2.0) * dt
    value = np.clip(value, -gains.integral_clamp, gains.integral_clamp)
    force = gains.K_p @ e_p + gains.K_v @ e_v + value + params.m_b * ref.a
    return force, IntegralState(value=value, prev_error=e_p.copy())


def yaw_setpoints(ref: BoxReference, state: BoxState, gains: Gains
                  ) -> tuple[float, float]:
    """Yaw setpoint for each quadrotor: the desired box yaw plus a PD
    correction on the box yaw error (shortest-path wrapped)."""
    e_psi = wrap_angle(ref.psi - box_yaw(state))
    e_rate = ref.psi_dot - float(state.omega_b[2])
    psi = ref.psi + gains.k_p_yaw * e_psi + gains.k_v_yaw * e_rate
    return psi, psi


def quad_reference_from_box(ref: BoxReference, placement: ContactPlacement,
                            floor: float = 0.0,
                            yaws: tuple[float, float] | None = None
                            ) -> tuple[QuadReference, QuadReference]:
    """Quadrotor references rigidly attached to the desired box pose.

    Each quadrotor sits at its cable-arm offset from the contact point,
    rotated by the desired box yaw; velocity and acceleration follow from
    the rigid attachment (R' = R*hat(w), R'' = R*(hat(w)^2 + hat(w'))).
    Altitudes below ``floor`` are clamped and flagged.
    """
    R = rot_z(ref.psi)
    w = np.array([0.0, 0.0, ref.psi_dot])
    dw = np.array([0.0, 0.0, ref.psi_ddot])
    spin = hat(w)
    curl = spin @ spin + hat(dw)
    refs = []
    for i, off in enumerate(quad_offsets_body(placement)):
        r = ref.r + R @ off
        v = ref.v + R @ (spin @ off)
        a = ref.a + R @ (curl @ off)
        clamped = r[2] < floor
        if clamped:
            r = r.copy()
            r[2] = floor
        yaw = ref.psi if yaws is None else yaws[i]
        refs.append(QuadReference(r=r, v=v, a=a, yaw=yaw, clamped=clamped))
    return refs[0], refs[1]


def rotate_reference_about_axis(qref: QuadReference, anchor: np.ndarray,
                                axis: np.ndarray, phi: float, phi_dot: float,
                                phi_ddot: float = 0.0) -> QuadReference:
    """Carry a quadrotor reference along a pivot rotation about a fixed
    world axis through ``anchor`` (used while the box rolls on an edge)."""
    R = rotation_about(axis, phi)
    w = phi_dot * np.asarray(axis, dtype=float)
    dw = phi_ddot * np.asarray(axis, dtype=float)
    rel = R @ (qref.r - anchor)
    r = anchor + rel
    v = R @ qref.v + cross3(w, rel)
    a = (R @ qref.a + cross3(dw, rel) + cross3(w, cross3(w, rel))
         + 2.0 * cross3(w, R @ qref.v))
    return QuadReference(r=r, v=v, a=a, yaw=qref.yaw, clamped=qref.clamped)


def se3_controller(state: QuadrotorState, ref: QuadReference,
                   params: QuadrotorParams, gains: Gains,
                   tension_ff: np.ndarray | None = None) -> QuadCommand:
    """Geometric tracking controller on SE(3) for one quadrotor.

    The required force combines PD feedback, gravity and acceleration
    feedforward, and the commanded cable tension; thrust is its component
    along the current body z axis (never negative), and the desired
    attitude aligns body z with the required force at the yaw setpoint.
    """
    e_x = state.r - ref.r
    e_v = state.v - ref.v
    force = (-gains.k_x * e_x - gains.k_v * e_v
             + params.m * GRAVITY * E3 + params.m * ref.a)
    if tension_ff is not None:
        force = force + tension_ff
    norm = float(np.linalg.norm(force))
    if norm < _FORCE_EPS:
        raise AttitudeSingular("required force is too small to define attitude")
    f = max(float(force @ state.R[:, 2]), 0.0)
    b3 = force / norm
    heading = np.array([math.cos(ref.yaw), math.sin(ref.yaw), 0.0])
    b2 = cross3(b3, heading)
    b2_norm = float(np.linalg.norm(b2))
    if b2_norm < _FORCE_EPS:
        raise AttitudeSingular("required force is parallel to the yaw heading")
    b2 = b2 / b2_norm
    R_d = np.column_stack((cross3(b2, b3), b2, b3))
    e_R = 0.5 * vee(R_d.T @ state.R - state.R.T @ R_d)
    e_w = state.omega
    tau = (-gains.k_R * e_R - gains.k_omega * e_w
           + cross3(state.omega, params.J @ state.omega))
    return QuadCommand(f=f, tau=tau)
