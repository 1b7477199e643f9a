"""Cable state, catenary-box contact detection, and tension recovery.

A slack cable is a pure catenary and exerts no force.  A taut cable is three
straight segments (quadrotor - contact - contact - quadrotor); its two
tension vectors are recovered from the demanded planar box force by an exact
2x2 solve with non-negativity, including the coupling of the tensions'
vertical components into the Coulomb friction force while the box slides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import GRAVITY, BoxParams, BoxState, FlatOnGround, GroundModel
from .errors import Infeasible
from .geometry import EPS_TAUT, CatenaryShape, cross3

CONTACT_SAMPLES = 2048  # default catenary sampling density for detection
_SURFACE_TOL = 1e-9


@dataclass(frozen=True)
class ContactPoint:
    """A cable-box contact: position in the box frame plus the face or
    vertical edge it lies on (e.g. 'x-', 'y+', 'x-|y+')."""

    p: np.ndarray
    edge: str

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))


def validate_on_surface(cp: ContactPoint, params: BoxParams) -> bool:
    """True iff the contact point lies within the box surface bounds."""
    half = np.array([params.l / 2, params.w / 2, params.h / 2])
    return bool(np.all(np.abs(cp.p) <= half + _SURFACE_TOL))


@dataclass(frozen=True)
class SlackCable:
    """Hanging cable away from (or merely grazing) the box; exerts no force."""

    shape: CatenaryShape


@dataclass(frozen=True)
class TautCable:
    """Straight-segment cable path through two box contacts.

    l1/l2 are the free segment lengths to the quadrotors, wrap the on-box
    path between the contacts, t1/t2 the world-frame tension forces applied
    to the box (pointing from the contacts toward the quadrotors).
    """

    p1: ContactPoint
    p2: ContactPoint
    l1: float
    l2: float
    wrap: float
    t1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    t2: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def total_length(self) -> float:
        return self.l1 + self.wrap + self.l2


CableModel = SlackCable | TautCable


@dataclass(frozen=True)
class CableFriction:
    """Cable-box contact friction and the slip threshold elevation angle."""

    mu_c: float = 0.3
    gamma_max: float = math.pi / 6

    def __post_init__(self):
        if self.mu_c < 0:
            raise ValueError("mu_c must be non-negative")
        if not 0.0 < self.gamma_max < math.pi / 2:
            raise ValueError("gamma_max must lie in (0, pi/2)")


@dataclass(frozen=True)
class ContactAngles:
    """Cable-box contact geometry: horizontal half-angle alpha, elevation
    gamma at the contact, and (for rolling) the tension/moment-arm angle
    beta."""

    alpha: float
    gamma: float
    beta: float = math.pi / 2

    def __post_init__(self):
        if not 0.0 <= self.alpha < math.pi / 2:
            raise ValueError("alpha must lie in [0, pi/2)")
        if not 0.0 <= self.gamma < math.pi / 2:
            raise ValueError("gamma must lie in [0, pi/2)")
        if not 0.0 < self.beta <= math.pi:
            raise ValueError("beta must lie in (0, pi]")


def contact_point_world(p: ContactPoint | np.ndarray, box: BoxState) -> np.ndarray:
    """Box-frame contact position mapped into the world frame."""
    p_body = p.p if isinstance(p, ContactPoint) else np.asarray(p, dtype=float)
    return box.R_b @ p_body + box.r_b


def _project_to_vertical_face(q: np.ndarray, params: BoxParams) -> tuple[np.ndarray, str]:
    """Project a point inside the box onto the nearest vertical face."""
    half_l, half_w, half_h = params.l / 2, params.w / 2, params.h / 2
    pens = {
        "x+": half_l - q[0], "x-": half_l + q[0],
        "y+": half_w - q[1], "y-": half_w + q[1],
    }
    face = min(pens, key=pens.get)
    out = q.copy()
    if face[0] == "x":
        out[0] = half_l if face == "x+" else -half_l
    else:
        out[1] = half_w if face == "y+" else -half_w
    out[2] = min(max(out[2], -half_h), half_h)
    # Tag as an edge when a second face is nearly as close.
    others = sorted(pens, key=pens.get)
    if pens[others[1]] - pens[face] < 2e-3 and others[1][0] != face[0]:
        face = "|".join(sorted([face, others[1]]))
    return out, face


def detect_contact(shape: CatenaryShape, box: BoxState, params: BoxParams,
                   n: int = CONTACT_SAMPLES) -> list[ContactPoint]:
    """Points where the sampled hanging cable meets the box's vertical faces.

    Returns up to two contacts in the box frame (entry and exit of the
    sampled curve's intrusion), or an empty list when the curve stays clear.
    """
    half = np.array([params.l / 2, params.w / 2, params.h / 2])
    # Cheap bounding test first: curve AABB vs box AABB (world, inflated).
    zs = np.array([shape.endpoints[0, 2], shape.endpoints[1, 2],
                   shape.lowest_point[2]])
    curve_lo = np.minimum(shape.endpoints[0], shape.endpoints[1]).copy()
    curve_hi = np.maximum(shape.endpoints[0], shape.endpoints[1]).copy()
    curve_lo[2], curve_hi[2] = zs.min(), zs.max()
    radius = math.sqrt(float(half @ half))
    if np.any(curve_lo > box.r_b + radius + 1e-3) or \
       np.any(curve_hi < box.r_b - radius - 1e-3):
        return []
    # Sample uniformly along the span, inserting the exact vertex in order
    # so a curve that just grazes a face is seen.
    x_low = min(max(shape.x_vertex, 0.0), shape.span)
    xs = np.sort(np.append(np.linspace(0.0, shape.span, n), x_low))
    pts = shape.point_at(xs)
    local = (pts - box.r_b) @ box.R_b  # row-vector transform by R_b^T
    inside = np.all(np.abs(local) <= half + _SURFACE_TOL, axis=1)
    idx = np.nonzero(inside)[0]
    if idx.size == 0:
        return []
    first, last = local[idx[0]], local[idx[-1]]
    p1, face1 = _project_to_vertical_face(first, params)
    contacts = [ContactPoint(p=p1, edge=face1)]
    if np.linalg.norm(last - first) > 1e-9:
        p2, face2 = _project_to_vertical_face(last, params)
        contacts.append(ContactPoint(p=p2, edge=face2))
    return contacts


def detect_taut(quad_positions: np.ndarray, contact_points_world: list[np.ndarray],
                length: float) -> bool:
    """True iff the straight path through the contacts consumes the cable.

    The path quadrotor-1 -> contacts -> quadrotor-2 is compared against the
    cable length with the taut margin: taut iff path >= length - 1e-3 m.
    """
    if not contact_points_world:
        raise ValueError("detect_taut requires at least one contact point")
    pts = [np.asarray(quad_positions[0], dtype=float)]
    pts += [np.asarray(c, dtype=float) for c in contact_points_world]
    pts.append(np.asarray(quad_positions[1], dtype=float))
    path = sum(float(np.linalg.norm(b - a)) for a, b in zip(pts, pts[1:]))
    return path >= length - EPS_TAUT


def friction_direction(f_d: np.ndarray, box: BoxState) -> np.ndarray:
    """Unit direction the kinetic friction opposes: the box velocity, or the
    demanded force direction at rest (imminent motion)."""
    v_xy = box.v_b[:2]
    speed = math.hypot(v_xy[0], v_xy[1])
    if speed > 1e-9:
        return v_xy / speed
    mag = math.hypot(f_d[0], f_d[1])
    if mag > 1e-12:
        return f_d[:2] / mag
    return np.zeros(2)


def tension_from_box_wrench(f_d: np.ndarray, box: BoxState, params: BoxParams,
                            ground: GroundModel, contacts: list[ContactPoint],
                            quad_positions: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Tension vectors that realize a demanded planar box force exactly.

    Each tension acts along its cable segment (contact -> quadrotor) with a
    non-negative magnitude.  While the box is flat on the ground the solve
    accounts for the tensions' vertical components unloading the normal
    force and thereby the kinetic friction; on edge support the demand is
    matched by the planar tension components alone.

    Returns:
        (t1, t2) world-frame forces on the box.

    Raises:
        Infeasible: the demand lies outside the cone the two cable
            directions span (a negative magnitude would be required), or the
            directions are degenerate.
    """
    f_d = np.asarray(f_d, dtype=float)
    if len(contacts) != 2:
        raise Infeasible(f"tension solve needs two contacts, got {len(contacts)}")
    u = []
    for cp, q in zip(contacts, quad_positions):
        seg = np.asarray(q, dtype=float) - contact_point_world(cp, box)
        norm = float(np.linalg.norm(seg))
        if norm < 1e-9:
            raise Infeasible("quadrotor coincides with its contact point")
        u.append(seg / norm)
    flat = isinstance(box.support, FlatOnGround)
    if flat:
        d = ground.disturbance
        vhat = friction_direction(f_d, box)
        w1 = u[0][:2] + ground.mu_k * u[0][2] * vhat
        w2 = u[1][:2] + ground.mu_k * u[1][2] * vhat
        b = f_d[:2] - d[:2] + ground.mu_k * (params.m_b * GRAVITY - d[2]) * vhat
    else:
        w1, w2 = u[0][:2], u[1][:2]
        b = f_d[:2]
    det = w1[0] * w2[1] - w1[1] * w2[0]
    if abs(det) < 1e-12:
        raise Infeasible("cable directions are (near-)parallel in the plane")
    m1 = (b[0] * w2[1] - b[1] * w2[0]) / det
    m2 = (w1[0] * b[1] - w1[1] * b[0]) / det
    if m1 < -1e-12 or m2 < -1e-12:
        raise Infeasible(
            f"demand needs tension magnitudes ({m1:.4f}, {m2:.4f}) N; "
            "cables can only pull")
    return max(m1, 0.0) * u[0], max(m2, 0.0) * u[1]


def tension_consistency(t1: np.ndarray, t2: np.ndarray,
                        contacts: list[ContactPoint], box: BoxState,
                        params: BoxParams,
                        omega_dot_body: np.ndarray | None = None) -> float:
    """Rotational residual of the box dynamics for the given tensions.

    The cross-product map through a single contact point is rank-2, so the
    rotational equation cannot be inverted for tensions; it is used here as
    a consistency check: the norm of
    sum_i(t_i x p_i) + J*domega - (J*omega) x omega in the box frame.
    """
    if omega_dot_body is None:
        omega_dot_body = np.zeros(3)
    acc = params.J_b @ omega_dot_body
    acc = acc - cross3(params.J_b @ box.omega_b, box.omega_b)
    for cp, t in zip(contacts, [t1, t2]):
        acc = acc + cross3(box.R_b.T @ np.asarray(t, dtype=float), cp.p)
    return float(np.linalg.norm(acc))


def slip_check(angles: ContactAngles, friction: CableFriction) -> bool:
    """True (slip) iff the contact elevation exceeds the threshold angle."""
    return angles.gamma > friction.gamma_max


def measured_contact_angles(contacts: list[ContactPoint], box: BoxState,
                            quad_positions: np.ndarray,
                            pivot_anchor: np.ndarray | None = None
                            ) -> ContactAngles:
    """Contact geometry recovered from the actual quadrotor positions.

    gamma is the larger of the two cable elevations measured against the
    box's own horizontal plane; alpha is half the planar angle between the
    segments; beta (edge support only) the angle between the first tension
    direction and its moment arm from the pivot edge.
    """
    u_body = []
    for cp, q in zip(contacts, quad_positions):
        seg = box.R_b.T @ (np.asarray(q, dtype=float) - contact_point_world(cp, box))
        u_body.append(seg / np.linalg.norm(seg))
    gammas = [math.asin(min(max(u[2], -1.0), 1.0)) for u in u_body]
    gamma = max(0.0, *gammas)
    planar = [u[:2] / max(np.linalg.norm(u[:2]), 1e-12) for u in u_body]
    cos_spread = min(max(float(np.dot(planar[0], planar[1])), -1.0), 1.0)
    alpha = 0.5 * math.acos(cos_spread)
    beta = math.pi / 2
    if pivot_anchor is not None:
        p_world = contact_point_world(contacts[0], box)
        arm = p_world - np.asarray(pivot_anchor, dtype=float)
        arm_n = float(np.linalg.norm(arm))
        if arm_n > 1e-9:
            u_world = box.R_b @ u_body[0]
            cos_b = min(max(float(np.dot(arm, u_world)) / arm_n, -1.0), 1.0)
            beta = math.acos(cos_b)
    gamma = min(gamma, math.pi / 2 - 1e-9)
    alpha = min(alpha, math.pi / 2 - 1e-9)
    beta = max(beta, 1e-9)
    return ContactAngles(alpha=alpha, gamma=gamma, beta=beta)
