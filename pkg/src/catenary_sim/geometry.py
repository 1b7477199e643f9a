"""Rotation primitives and hanging-cable geometry.

All rotations are plain 3x3 numpy arrays mapping body coordinates to world
coordinates.  The hanging cable between two points is the classic curve
z = a*cosh(x/a); :func:`solve_catenary` recovers the scale parameter ``a``
from the endpoints and the cable length by a safeguarded Newton iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateVertical, TautOrOverstretched

EPS_TAUT = 1e-3  # slack margin (m) below which a cable counts as taut
_NEWTON_TOL = 1e-12  # absolute residual tolerance (m) for the scale solve
_NEWTON_MAX_ITER = 200
_MIN_SPAN = 1e-9  # horizontal separation (m) below which the solve is degenerate

E1 = np.array([1.0, 0.0, 0.0])
E2 = np.array([0.0, 1.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class WorldConstants:
    """Gravity and canonical basis vectors."""

    g: float = 9.81
    e1: np.ndarray = field(default_factory=lambda: E1.copy())
    e3: np.ndarray = field(default_factory=lambda: E3.copy())

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError("g must be positive")


WORLD = WorldConstants()


def hat(v: np.ndarray) -> np.ndarray:
    """Skew-symmetric matrix such that hat(v) @ w == cross(v, w)."""
    return np.array([
        [0.0, -v[2], v[1]],
        [v[2], 0.0, -v[0]],
        [-v[1], v[0], 0.0],
    ])


def cross3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product of two 3-vectors.

    Equivalent to ``np.cross`` for this shape but without the broadcast
    machinery, which dominates the integration loop's profile.
    """
    return np.array([
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ])


def vee(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`hat` (expects an antisymmetric matrix)."""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


_AXIS_ROTATIONS = {"x": rot_x, "y": rot_y, "z": rot_z}


def rot_axis_angle(axis: str, angle: float) -> np.ndarray:
    """Rotation about a canonical axis ('x', 'y' or 'z') by ``angle`` radians."""
    try:
        return _AXIS_ROTATIONS[axis](angle)
    except KeyError:
        raise ValueError(f"axis must be one of 'x','y','z', got {axis!r}") from None


def rotation_about(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rotation about an arbitrary unit axis by ``angle`` (Rodrigues form)."""
    k = hat(np.asarray(axis, dtype=float))
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def is_rotation(r: np.ndarray, tol: float = 1e-12) -> bool:
    """True iff ``r`` is orthonormal with determinant 1 within ``tol``."""
    if r.shape != (3, 3):
        return False
    ortho = np.linalg.norm(r.T @ r - np.eye(3))
    return ortho <= tol and abs(np.linalg.det(r) - 1.0) <= tol


def renormalize_rotation(r: np.ndarray) -> np.ndarray:
    """Project a near-orthonormal matrix back onto the rotation group.

    One Newton-Schulz step of the polar decomposition, r*(3I - r^T r)/2,
    which is adequate when the drift per step is small (as it is after a
    single integrator step).
    """
    return r @ (1.5 * np.eye(3) - 0.5 * (r.T @ r))


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


@dataclass(frozen=True)
class CatenaryShape:
    """A hanging cable between two fixed endpoints.

    Attributes:
        endpoints: (2, 3) array, the two suspension points in world frame.
        length: cable length (m).
        plane_yaw: yaw of the vertical plane containing the curve (rad).
        span: horizontal separation of the endpoints (m).
        a: scale parameter of z = a*cosh(x/a) (m).
        lowest_point: lowest point of the curve segment, world frame.
        x_vertex: abscissa of the curve vertex measured from endpoint 1
            along the horizontal direction (may lie outside [0, span]).
    """

    endpoints: np.ndarray
    length: float
    plane_yaw: float
    span: float
    a: float
    lowest_point: np.ndarray
    x_vertex: float

    def height_at(self, x) -> np.ndarray:
        """Curve height z at horizontal offset(s) ``x`` from endpoint 1."""
        x = np.asarray(x, dtype=float)
        z1 = self.endpoints[0, 2]
        return z1 + self.a * (np.cosh((x - self.x_vertex) / self.a)
                              - math.cosh(self.x_vertex / self.a))

    def point_at(self, x) -> np.ndarray:
        """3-D point(s) on the curve at horizontal offset(s) ``x``."""
        x = np.asarray(x, dtype=float)
        u = _horizontal_unit(self.endpoints)
        base = self.endpoints[0].copy()
        base[2] = 0.0
        pts = base + np.multiply.outer(x, u)
        pts[..., 2] = self.height_at(x)
        return pts

    def arc_length(self) -> float:
        """Arc length of the curve segment (analytic)."""
        xm = self.x_vertex
        return self.a * (math.sinh((self.span - xm) / self.a)
                         + math.sinh(xm / self.a))


def _horizontal_unit(endpoints: np.ndarray) -> np.ndarray:
    d = endpoints[1] - endpoints[0]
    d[2] = 0.0
    return d / np.linalg.norm(d)


def _solve_scale(d: float, h: float) -> float:
    """Solve d*sinh(u)/u = h for u > 0, then return a = d/(2u).

    Safeguarded Newton on f(u) = sinh(u) - (h/d)*u with a bisection bracket;
    converges to an absolute residual below 1e-12 m on the length equation
    2a*sinh(d/(2a)) = h.
    """
    ratio = h / d
    # Bracket the root: f < 0 left of the root, f > 0 right of it.  The
    # shallow-sag guess sqrt(6*(ratio-1)) is capped so sinh cannot overflow
    # for extreme ratios (deep sag), where the root sits near log(2*ratio).
    lo = 1e-12
    guess = min(math.sqrt(6.0 * (ratio - 1.0)), 50.0)
    hi = max(1.0, guess)
    while math.sinh(hi) - ratio * hi <= 0.0:
        hi *= 2.0
    u = min(max(guess, lo), hi)
    for _ in range(_NEWTON_MAX_ITER):
        f = math.sinh(u) - ratio * u
        if d * abs(f) / u <= _NEWTON_TOL:  # residual of d*sinh(u)/u - h
            break
        if f > 0.0:
            hi = u
        else:
            lo = u
        fp = math.cosh(u) - ratio
        if fp != 0.0 and lo < (u - f / fp) < hi:
            u -= f / fp
        else:
            u = 0.5 * (lo + hi)
    return d / (2.0 * u)


def solve_catenary(endpoints: np.ndarray, length: float) -> CatenaryShape:
    """Recover the hanging-cable shape between two points for a given length.

    Args:
        endpoints: (2, 3) array of suspension points, world frame.
        length: cable length (m); must exceed the endpoint chord.

    Returns:
        A :class:`CatenaryShape` whose reconstructed arc length matches
        ``length`` to within 1e-8 m.

    Raises:
        TautOrOverstretched: chord >= length - 1e-3 m (no slack curve).
        DegenerateVertical: horizontal separation below 1e-9 m.
    """
    endpoints = np.asarray(endpoints, dtype=float).reshape(2, 3).copy()
    chord = float(np.linalg.norm(endpoints[1] - endpoints[0]))
    if chord >= length - EPS_TAUT:
        raise TautOrOverstretched(
            f"chord {chord:.6f} m leaves less than {EPS_TAUT} m of slack on a "
            f"{length:.6f} m cable")
    dxy = endpoints[1, :2] - endpoints[0, :2]
    d = float(np.hypot(dxy[0], dxy[1]))
    if d < _MIN_SPAN:
        raise DegenerateVertical(
            f"horizontal separation {d:.3e} m is below {_MIN_SPAN} m")
    v = float(endpoints[1, 2] - endpoints[0, 2])
    h = math.sqrt(length * length - v * v)
    a = _solve_scale(d, h)
    x_vertex = 0.5 * d - a * math.atanh(v / length)
    plane_yaw = math.atan2(dxy[1], dxy[0])
    shape = CatenaryShape(
        endpoints=endpoints,
        length=float(length),
        plane_yaw=plane_yaw,
        span=d,
        a=a,
        lowest_point=np.zeros(3),
        x_vertex=x_vertex,
    )
    x_low = min(max(x_vertex, 0.0), d)
    lowest = shape.point_at(x_low)
    object.__setattr__(shape, "lowest_point", lowest)
    return shape


def sample_catenary(shape: CatenaryShape, n: int) -> np.ndarray:
    """``n`` points along the curve from endpoint 1 to endpoint 2.

    The first and last samples coincide with the endpoints to within 1e-12.
    """
    if n < 2:
        raise ValueError("need at least 2 samples")
    x = np.linspace(0.0, shape.span, n)
    return shape.point_at(x)
