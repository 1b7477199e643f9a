"""Independent reference computations used to freeze expected test values.

Everything here is deliberately implemented differently from the package:
bisection instead of Newton, Simpson quadrature instead of analytic arc
length, scalar force balances instead of the vector dynamics code.
"""

from __future__ import annotations

import math

import numpy as np


def bisect_catenary_scale(d: float, h: float, tol: float = 1e-14) -> float:
    """Solve 2a*sinh(d/(2a)) = h for the scale a by pure bisection."""
    # In u = d/(2a): d*sinh(u)/u = h, monotone increasing in u.
    lo, hi = 1e-12, 1.0
    while d * math.sinh(hi) / hi < h:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if d * math.sinh(mid) / mid < h:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol * hi:
            break
    u = 0.5 * (lo + hi)
    return d / (2.0 * u)


def catenary_height(x, a: float, x_vertex: float, z1: float):
    """z(x) on the curve through (0, z1) with vertex abscissa x_vertex."""
    x = np.asarray(x, dtype=float)
    return z1 + a * (np.cosh((x - x_vertex) / a) - np.cosh(x_vertex / a))


def simpson_arc_length(a: float, x_vertex: float, d: float, n: int = 4000) -> float:
    """Arc length of z = a*cosh((x - x_vertex)/a) over [0, d] by Simpson."""
    if n % 2:
        n += 1
    x = np.linspace(0.0, d, n + 1)
    integrand = np.sqrt(1.0 + np.sinh((x - x_vertex) / a) ** 2)
    w = np.ones(n + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return float((d / n) / 3.0 * np.dot(w, integrand))


def solve_symmetric_sag(d: float, length: float) -> tuple[float, float]:
    """(a, sag) for endpoints at equal height separated horizontally by d."""
    a = bisect_catenary_scale(d, length)
    sag = a * (math.cosh(d / (2.0 * a)) - 1.0)
    return a, sag


def coulomb_planar_accel(pull: float, mass: float, mu_s: float, mu_k: float,
                         g: float = 9.81) -> float:
    """Scalar stick/slip balance for a horizontal pull on a resting box."""
    normal = mass * g
    if pull <= mu_s * normal:
        return 0.0
    return (pull - mu_k * normal) / mass


def tip_or_slide(mu: float, w: float, z_pull: float) -> str:
    """Quasi-static outcome of a slowly ramped horizontal pull at height z_pull.

    The box starts to slide when F = mu*m*g and starts to tip about the
    leading bottom edge when F*z_pull = m*g*w/2; whichever threshold is
    reached first under a monotone ramp decides the outcome.
    """
    # Thresholds per unit weight: slide at mu, tip at (w/2)/z_pull.
    return "tip" if (w / 2.0) / z_pull < mu else "slide"


def cuboid_inertia(m: float, w: float, l: float, h: float) -> np.ndarray:
    """Inertia tensor of a homogeneous cuboid about its center of mass."""
    return np.diag([
        m / 12.0 * (w * w + h * h),
        m / 12.0 * (l * l + h * h),
        m / 12.0 * (l * l + w * w),
    ])
