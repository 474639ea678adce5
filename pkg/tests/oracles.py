"""Independent reference computations used by the tests.

Each oracle reaches the same quantity as the library by a different route
(matrices instead of closed forms, quadrature instead of formulas, geometry
instead of algebra).
"""
import math

import numpy as np


def rotation_z(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def latitude_holonomy(colatitude: float, n: int = 20000) -> float:
    """Rotation of a tangent vector parallel-transported once around a latitude circle.

    Discrete transport: project onto the next tangent plane and renormalize.
    The circle bounds a cap around the south pole; the returned angle is the
    enclosed curvature integral (mod 2 pi), i.e. ``2 pi (1 - cos colatitude)``.
    """
    lam = np.linspace(0.0, 2.0 * math.pi, n + 1)
    st, ct = math.sin(colatitude), math.cos(colatitude)
    pts = np.stack([st * np.cos(lam), st * np.sin(lam), -ct * np.ones_like(lam)], axis=1)
    e_phi = np.array([-math.sin(0.0), math.cos(0.0), 0.0])
    w = e_phi.copy()
    for p in pts[1:]:
        w = w - np.dot(w, p) * p
        w /= np.linalg.norm(w)
    # angle of w relative to the starting frame (e_phi, e_theta) at the start point
    p0 = pts[0]
    e_theta = np.cross(p0, e_phi)
    ang = math.atan2(np.dot(w, e_theta), np.dot(w, e_phi))
    return (-ang) % (2.0 * math.pi)


def cap_area_quadrature(colatitude: float, R: float, n: int = 4001) -> float:
    """Area of a spherical cap by trapezoidal quadrature of ``R^2 sin(phi)``."""
    phi = np.linspace(0.0, colatitude, n)
    return 2.0 * math.pi * R * R * float(np.trapezoid(np.sin(phi), phi))


def triangle_inradius(a: float, b: float, c: float) -> float:
    """Inradius from side lengths via area / semiperimeter (Heron)."""
    s = 0.5 * (a + b + c)
    area = math.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
    return area / s


def latitude_total_curvature(v: float, R: float) -> float:
    """Curvature of the latitude circle at ``v``: one over its radius ``R cos v``."""
    return 1.0 / (R * math.cos(v))
