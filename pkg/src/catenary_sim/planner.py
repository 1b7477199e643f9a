"""Action selection, contact placement, and approach planning.

Whether the box should be dragged or rolled follows from a quasi-static
tipping analysis: a horizontal pull of magnitude F applied at height z
above the ground slides the box when F >= mu_s * m * g and tips it about
the leading bottom edge when F * z >= m * g * w / 2.  The crossover
friction coefficient is mu* = (w/2) / z; dragging is chosen at or below
it, rolling above it.

Placements put both contact points on the rear vertical edges relative
to the motion direction: low (just above the ground) for dragging, high
(near the top edge) for rolling, matching the torque argument above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .cable import ContactPoint, validate_on_surface
from .dynamics import BoxParams, BoxState
from .errors import FloorViolation, Unreachable
from .geometry import E1, rot_y, rot_z, solve_catenary
from .modes import ActionKind

__all__ = [
    "DEFAULT_ALPHA",
    "DEFAULT_GAMMA",
    "DRAG_CLEARANCE",
    "ActionDecision",
    "ContactPlacement",
    "ApproachLeg",
    "choose_action",
    "drag_placement",
    "roll_placement",
    "gamma_perpendicular",
    "raise_gamma_for_floor",
    "cable_direction",
    "quad_offsets_body",
    "approach_waypoints",
]

DEFAULT_ALPHA = math.pi / 4
DEFAULT_GAMMA = math.pi / 12
DRAG_CLEARANCE = 0.01  # m above the ground so the cable clears the floor
GAMMA_CAP = 1.2  # rad; a floor-raised elevation beyond this is infeasible
APPROACH_SPEED = 0.1  # m/s for the advance and narrowing legs
APPROACH_MARGIN = 3e-3  # m of extra advance past nominal contact
DRAPE_BACK = 0.12  # m the cable's lowest point starts behind the rear face
DRAPE_PENETRATION = 0.02  # m past the rear face the advance leg sweeps
SETTLE_TIME = 1.5  # s hold after the narrowing leg


@dataclass(frozen=True)
class ActionDecision:
    """Drag-vs-roll choice with the friction threshold that produced it."""

    action: ActionKind
    mu_star: float

    def __post_init__(self):
        if not self.mu_star > 0.0:
            raise ValueError("mu_star must be positive")


@dataclass(frozen=True)
class ContactPlacement:
    """Where the cable grips the box and how the cable arms leave it.

    Contact points are in the box frame; ``motion_yaw`` is the yaw of the
    commanded motion direction in that same frame (the rear edges sit
    opposite it).  ``z_contact`` is the contact height above the ground,
    ``l1``/``l2`` the free cable arm lengths and ``wrap`` the portion of
    cable lying on the box between the two contacts.
    """

    p1: ContactPoint
    p2: ContactPoint
    alpha: float
    gamma: float
    z_contact: float
    action: ActionKind
    motion_yaw: float
    l1: float
    l2: float
    wrap: float

    def __post_init__(self):
        if not (self.l1 > 0.0 and self.l2 > 0.0):
            raise ValueError("cable arm lengths must be positive")
        if self.action is ActionKind.DRAG and not self.p1.p[2] < 0.0:
            raise ValueError("drag placement must grip below the box center")
        if self.action is ActionKind.ROLL and not self.p1.p[2] > 0.0:
            raise ValueError("roll placement must grip above the box center")

    def validate(self, params: BoxParams) -> None:
        for cp in (self.p1, self.p2):
            if not validate_on_surface(cp, params):
                raise ValueError(f"contact point {cp.p} off the box surface")


def choose_action(box: BoxParams, ground, z_contact: float) -> ActionDecision:
    """Pick drag or roll from the quasi-static tip-vs-slide boundary."""
    if not 0.0 < z_contact <= box.h:
        raise ValueError("z_contact must lie in (0, h]")
    mu_star = (box.w / 2.0) / z_contact
    action = ActionKind.DRAG if ground.mu_s <= mu_star else ActionKind.ROLL
    return ActionDecision(action=action, mu_star=mu_star)


def _rear_edge_contacts(box: BoxParams, motion_yaw: float, z_body: float,
                        edge_label: str) -> tuple[ContactPoint, ContactPoint]:
    """Contacts on the two rear vertical edges for a motion-aligned frame."""
    rot = rot_z(motion_yaw)
    p1 = rot @ np.array([-box.l / 2.0, -box.w / 2.0, z_body])
    p2 = rot @ np.array([-box.l / 2.0, box.w / 2.0, z_body])
    return (ContactPoint(p=p1, edge=edge_label),
            ContactPoint(p=p2, edge=edge_label))


def _motion_yaw(motion_dir_body: np.ndarray) -> float:
    d = np.asarray(motion_dir_body, dtype=float)
    mag = math.hypot(d[0], d[1])
    if not math.isclose(mag, 1.0, abs_tol=1e-6):
        raise ValueError("motion direction must be a unit vector in the plane")
    return math.atan2(d[1], d[0])


def drag_placement(box: BoxParams, motion_dir_body: np.ndarray,
                   cable_length: float, alpha: float = DEFAULT_ALPHA,
                   gamma: float = DEFAULT_GAMMA,
                   clearance: float = DRAG_CLEARANCE) -> ContactPlacement:
    """Grip the rear bottom edges just above the ground."""
    z_body = -box.h / 2.0 + clearance
    yaw = _motion_yaw(motion_dir_body)
    p1, p2 = _rear_edge_contacts(box, yaw, z_body, "rear-vertical")
    wrap = box.w
    arm = (cable_length - wrap) / 2.0
    return ContactPlacement(p1=p1, p2=p2, alpha=alpha, gamma=gamma,
                            z_contact=z_body + box.h / 2.0,
                            action=ActionKind.DRAG, motion_yaw=yaw,
                            l1=arm, l2=arm, wrap=wrap)


def roll_placement(box: BoxParams, motion_dir_body: np.ndarray,
                   cable_length: float, z_roll: float = 0.12,
                   alpha: float = DEFAULT_ALPHA,
                   gamma: float = DEFAULT_GAMMA) -> ContactPlacement:
    """Grip the rear vertical edges high up to maximize tipping torque."""
    if not 0.0 < z_roll <= box.h:
        raise ValueError("z_roll must lie in (0, h]")
    z_body = z_roll - box.h / 2.0
    yaw = _motion_yaw(motion_dir_body)
    p1, p2 = _rear_edge_contacts(box, yaw, z_body, "rear-vertical")
    wrap = box.w
    arm = (cable_length - wrap) / 2.0
    return ContactPlacement(p1=p1, p2=p2, alpha=alpha, gamma=gamma,
                            z_contact=z_roll, action=ActionKind.ROLL,
                            motion_yaw=yaw, l1=arm, l2=arm, wrap=wrap)


def gamma_perpendicular(box: BoxParams, z_roll: float) -> float:
    """Cable elevation that puts the pull perpendicular to the pivot arm.

    The arm runs from the leading bottom edge to the rear contact at
    height z_roll; a perpendicular pull maximizes torque per unit tension.
    """
    return math.pi / 2.0 - math.atan2(z_roll, box.l)


def raise_gamma_for_floor(placement: ContactPlacement, box: BoxState,
                          floor: float, margin: float = 0.01
                          ) -> ContactPlacement:
    """Raise the cable elevation until the quadrotors clear the floor.

    Keeping the arm length fixed and steepening the elevation preserves
    the cable length budget while lifting the quadrotor references to
    floor + margin.  Raises FloorViolation when the required elevation
    becomes too steep to be flyable.
    """
    z_world = float((box.r_b + box.R_b @ placement.p1.p)[2])
    need = (floor + margin - z_world) / placement.l1
    if need <= math.sin(placement.gamma):
        return placement
    if need > math.sin(GAMMA_CAP):
        raise FloorViolation(
            f"floor limit {floor} m needs elevation {math.asin(min(need, 1.0)):.3f}"
            f" rad > cap {GAMMA_CAP} rad")
    return replace(placement, gamma=math.asin(need))


def cable_direction(alpha: float, gamma: float, side: float) -> np.ndarray:
    """Unit direction of a cable arm leaving its contact, motion frame.

    ``side`` is -1 for quadrotor 1 (the -y contact) and +1 for quadrotor 2;
    the arm points forward (+x), outward in y, and up by the elevation.
    """
    return rot_z(side * alpha) @ rot_y(-gamma) @ E1


def quad_offsets_body(placement: ContactPlacement) -> tuple[np.ndarray, np.ndarray]:
    """Box-frame offsets from box center to each quadrotor's grip position."""
    rot = rot_z(placement.motion_yaw)
    offs = []
    for cp, side, arm in ((placement.p1, -1.0, placement.l1),
                          (placement.p2, 1.0, placement.l2)):
        offs.append(cp.p + arm * (rot @ cable_direction(
            placement.alpha, placement.gamma, side)))
    return offs[0], offs[1]


@dataclass(frozen=True)
class ApproachLeg:
    """One straight segment of the free-flight approach for both quadrotors.

    Quadrotor references move along the leg at ``speed`` (m/s); a zero
    speed makes the leg an instantaneous jump and ``hold`` dwells at the
    end point.
    """

    name: str
    quad1: np.ndarray
    quad2: np.ndarray
    speed: float
    hold: float = 0.0


def _catenary_sag(span: float, length: float) -> float:
    """Depth of the hanging cable's lowest point below level supports."""
    ends = np.array([[0.0, 0.0, 0.0], [span, 0.0, 0.0]])
    return -float(solve_catenary(ends, length).lowest_point[2])


def _drape_span(drop: float, length: float, narrowest: float) -> float:
    """Quadrotor span whose hanging cable sags by ``drop``.

    Wider spans sag less; the search is clamped to spans the catenary
    solver accepts, so an out-of-range drop simply yields the nearest
    achievable sag.
    """
    lo = narrowest
    hi = length - 5e-3
    if _catenary_sag(hi, length) >= drop:
        return hi
    if _catenary_sag(lo, length) <= drop:
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _catenary_sag(mid, length) > drop:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def approach_waypoints(quad_positions: np.ndarray, placement: ContactPlacement,
                       box: BoxState, params: BoxParams,
                       floor: float = 0.15) -> list[ApproachLeg]:
    """Plan the free-catenary legs that bring the cable onto the box.

    The cable is first lifted, then carried on a wide span so its lowest
    point hangs behind the rear face at the placement height, advanced
    along the motion direction until the hanging cable crosses the rear
    face and touches the box, and finally drawn in to the grip positions -
    narrowing the span so the cable wraps the rear edges and pulls taut
    (with a small extra advance so tautness is unambiguous) - before a
    short settling hold.
    """
    if not 0.0 < placement.z_contact <= params.h:
        raise Unreachable(
            f"contact height {placement.z_contact} m outside the box face "
            f"(0, {params.h}] m")
    placement = raise_gamma_for_floor(placement, box, floor)
    off1, off2 = quad_offsets_body(placement)
    final1 = box.r_b + box.R_b @ off1
    final2 = box.r_b + box.R_b @ off2
    advance = box.R_b @ (rot_z(placement.motion_yaw) @ E1)
    lat = np.array([-advance[1], advance[0], 0.0])
    length = placement.l1 + placement.wrap + placement.l2
    z_drape = max(float(final1[2]), float(final2[2]), floor + 0.02)
    span = _drape_span(z_drape - placement.z_contact, length,
                       narrowest=max(params.w, 0.2 * length))
    half = lat * (span / 2.0)
    rear_mid = box.r_b - advance * (params.l / 2.0)
    carry_mid = rear_mid - advance * DRAPE_BACK
    touch_mid = rear_mid + advance * min(DRAPE_PENETRATION, params.l / 4.0)
    carry1 = np.array([*(carry_mid - half)[:2], z_drape])
    carry2 = np.array([*(carry_mid + half)[:2], z_drape])
    touch1 = np.array([*(touch_mid - half)[:2], z_drape])
    touch2 = np.array([*(touch_mid + half)[:2], z_drape])
    margin = advance * APPROACH_MARGIN
    lift_z = max(float(quad_positions[0, 2]), float(quad_positions[1, 2]),
                 z_drape, floor)
    lift1 = np.array([quad_positions[0, 0], quad_positions[0, 1], lift_z])
    lift2 = np.array([quad_positions[1, 0], quad_positions[1, 1], lift_z])
    legs = [
        ApproachLeg("lift", lift1, lift2, speed=0.25),
        ApproachLeg("carry", carry1, carry2, speed=0.25),
        ApproachLeg("advance", touch1, touch2, speed=APPROACH_SPEED),
        ApproachLeg("narrow", final1 + margin, final2 + margin,
                    speed=APPROACH_SPEED),
        ApproachLeg("settle", final1 + margin, final2 + margin,
                    speed=APPROACH_SPEED, hold=SETTLE_TIME),
    ]
    for leg in legs:
        if leg.quad1[2] < floor - 1e-12 or leg.quad2[2] < floor - 1e-12:
            raise FloorViolation(
                f"approach leg '{leg.name}' dips below the {floor} m floor")
    return legs
