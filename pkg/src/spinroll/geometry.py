"""Surface charts, curvature triples and spherical-cap helpers.

Conventions
-----------
The sphere chart maps contact parameters ``(u_o, v_o)`` to

    (-R sin u cos v,  R sin v,  -R cos u cos v)

so the initial contact point ``(0, 0)`` sits at the bottom of the sphere and
the chart has poles at ``|v_o| = pi/2``.  The plane chart is the identity
``(u_s, v_s) -> (u_s, v_s, 0)``.  All chart angles are wrapped into
``[-pi, pi)`` with :func:`wrap_angle`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainClampWarning, DomainError, PoleError

PI = math.pi
HALF_PI = 0.5 * math.pi

#: Tolerance used when deciding that an angle sits on a chart pole.
POLE_TOL = 1e-9
#: Inverse-trig arguments this far outside [-1, 1] are clamped silently-ish.
CLAMP_TOL = 1e-9


def wrap_angle(a):
    """Wrap an angle (scalar or array) into ``[-pi, pi)``."""
    if np.ndim(a):
        return np.remainder(np.asarray(a, dtype=float) + PI, 2.0 * PI) - PI
    return (float(a) + PI) % (2.0 * PI) - PI


def clamped_asin(x: float, what: str = "asin") -> float:
    """Inverse sine with a tolerance band around the domain edges.

    Arguments within ``CLAMP_TOL`` of ``[-1, 1]`` are clamped (a
    :class:`DomainClampWarning` is emitted); anything further out raises
    :class:`DomainError`.
    """
    if abs(x) > 1.0:
        if abs(x) - 1.0 > CLAMP_TOL:
            raise DomainError(f"{what}: argument {x!r} outside [-1, 1]")
        warnings.warn(f"{what}: argument {x!r} clamped to [-1, 1]", DomainClampWarning, stacklevel=2)
        x = math.copysign(1.0, x)
    return math.asin(x)


@dataclass(frozen=True)
class SpherePoint:
    """Contact parameters on the sphere (radians, normalized on construction)."""

    u_o: float
    v_o: float

    def __post_init__(self):
        object.__setattr__(self, "u_o", wrap_angle(self.u_o))
        object.__setattr__(self, "v_o", wrap_angle(self.v_o))

    def as_tuple(self):
        return (self.u_o, self.v_o)


@dataclass(frozen=True)
class PlanePoint:
    """Contact position on the plane (metres)."""

    u_s: float
    v_s: float

    def __post_init__(self):
        if not (math.isfinite(self.u_s) and math.isfinite(self.v_s)):
            raise ValueError("plane coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.u_s, self.v_s], dtype=float)


@dataclass(frozen=True)
class CurvatureTriple:
    """Geodesic curvature, normal curvature and geodesic torsion (1/m)."""

    k_g: float
    k_n: float
    tau_g: float


@dataclass(frozen=True)
class CapGeometry:
    """Intermediate quantities of the minimum-distance cap construction.

    Lengths in metres, areas in square metres, angles in radians.  Fields that
    could not be evaluated (e.g. because an inverse sine left its domain) are
    ``nan``.
    """

    S_t: float
    S_c_prime: float
    dS: float
    h: float
    h_c: float
    h_c_prime: float
    a_c: float
    a_c_prime: float
    alpha: float
    alpha_prime: float
    Q_of: float
    psi_prime: float
    kappa_o: float


def sphere_embed(p: SpherePoint, R_o: float) -> np.ndarray:
    """Embed a sphere contact point in R^3.

    Parameters
    ----------
    p : SpherePoint
        Contact parameters.
    R_o : float
        Sphere radius, must be positive.

    Returns
    -------
    numpy.ndarray
        ``(-R sin u cos v, R sin v, -R cos u cos v)``.
    """
    if R_o <= 0:
        raise ValueError("R_o must be positive")
    u, v = p.u_o, p.v_o
    cv = math.cos(v)
    return np.array([-R_o * math.sin(u) * cv, R_o * math.sin(v), -R_o * math.cos(u) * cv])


def embed_uv(u, v, R_o: float) -> np.ndarray:
    """Vectorized embedding of raw angle arrays; returns shape ``(..., 3)``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cv = np.cos(v)
    return np.stack([-R_o * np.sin(u) * cv, R_o * np.sin(v), -R_o * np.cos(u) * cv], axis=-1)


def sphere_curvatures(p: SpherePoint, R_o: float) -> tuple[CurvatureTriple, CurvatureTriple]:
    """Curvature triples of the sphere along its u- and v-curves.

    Returns
    -------
    (CurvatureTriple, CurvatureTriple)
        The u-direction triple ``(tan v / R, 1/R, 0)`` and the v-direction
        triple ``(0, 1/R, 0)``.

    Raises
    ------
    PoleError
        If ``|v_o|`` is within ``POLE_TOL`` of ``pi/2``.
    """
    if abs(abs(p.v_o) - HALF_PI) < POLE_TOL:
        raise PoleError(f"geodesic curvature undefined at v_o={p.v_o!r}")
    k_n = 1.0 / R_o
    return (CurvatureTriple(k_g=math.tan(p.v_o) / R_o, k_n=k_n, tau_g=0.0),
            CurvatureTriple(k_g=0.0, k_n=k_n, tau_g=0.0))


def plane_curvatures() -> tuple[CurvatureTriple, CurvatureTriple]:
    """The plane is flat: every curvature and torsion vanishes."""
    z = CurvatureTriple(0.0, 0.0, 0.0)
    return z, z


def helicoid_torsion(v_v: float, R_v: float, R_t: float) -> float:
    """Geodesic torsion of the helicoid-like virtual surface.

    Uses the absolute-value form ``|R_v^2 cos^2 v_v - R_t^2|^(1/2) / R_v^2``,
    which is the form that also defines the ``beta_s`` control input.
    """
    if R_v <= 0:
        raise ValueError("R_v must be positive")
    return math.sqrt(abs(R_v * R_v * math.cos(v_v) ** 2 - R_t * R_t)) / (R_v * R_v)


def helicoid_embed(u_v: float, v_v: float, R_v: float, R_t: float) -> np.ndarray:
    """Chart of the virtual surface: a sphere chart sheared along y by ``R_t u_v``."""
    cv = math.cos(v_v)
    return np.array([-R_v * math.sin(u_v) * cv, R_v * math.sin(v_v) + R_t * u_v, -R_v * math.cos(u_v) * cv])


def helicoid_curvatures_reference(v_v: float, R_v: float, R_t: float) -> CurvatureTriple:
    """Curvature triple of the virtual surface with the plus-sign torsion.

    This is the derivation-side form (torsion ``(R_v^2 cos^2 v + R_t^2)^(1/2)/R_v^2``)
    kept for reference only; the controller uses :func:`helicoid_torsion`.
    """
    c = math.cos(v_v)
    den = R_v * R_v * c * c + R_t * R_t
    return CurvatureTriple(k_g=R_v * c * math.sin(v_v) / den, k_n=1.0 / R_v,
                           tau_g=math.sqrt(den) / (R_v * R_v))


def cap_spin_change(S: float, R_o: float) -> float:
    """Spin change accumulated by enclosing area ``S`` (Gauss-Bonnet, kappa = 1/R_o^2)."""
    if R_o <= 0:
        raise ValueError("R_o must be positive")
    return S / (R_o * R_o)


def rotate_to_goal_frame(p: SpherePoint, G_f: float) -> SpherePoint:
    """Rotate a contact point about the contact normal into the goal frame.

    The rotation angle is ``G_f - pi/4``.  The inverse-sine closed form only
    recovers ``u`` in ``[-pi/2, pi/2]``; the result is then remapped
    (``u -> -u``, ``v -> pi - v``) when the input lies in the back half of the
    chart, i.e. when ``cos u cos v < 0``.  Region boundaries are assigned to
    the remapping branch, which is the first one listed.

    Parameters
    ----------
    p : SpherePoint
        Point to rotate.
    G_f : float
        Plane goal direction (rad).

    Returns
    -------
    SpherePoint
        Rotated point; its embedding has the same norm as the input's.
    """
    g = G_f - 0.25 * PI
    sg, cg = math.sin(g), math.cos(g)
    u, v = p.u_o, p.v_o
    su_cv = math.sin(u) * math.cos(v)
    sv = math.sin(v)
    v_r = clamped_asin(-sg * su_cv + cg * sv, "rotate v")
    cvr = math.cos(v_r)
    if abs(cvr) < 1e-12:
        u_r = 0.0  # longitude is meaningless on the pole of the rotated chart
    else:
        u_r = clamped_asin((cg * su_cv + sg * sv) / cvr, "rotate u")
    au, av = abs(u), abs(v)
    if (av <= HALF_PI and au >= HALF_PI) or (av > HALF_PI and au < HALF_PI):
        u_r, v_r = -u_r, PI - v_r
    return SpherePoint(u_r, v_r)


def zx_zy_angles(p: SpherePoint) -> tuple[float, float]:
    """Angles of a contact point measured from the Z-X and Z-Y planes.

    Returns
    -------
    (float, float)
        ``Q_zx = |u_o|`` and ``Q_zy = |atan2(sin u_o cos v_o, sin v_o)|``.
    """
    u, v = p.u_o, p.v_o
    return abs(u), abs(math.atan2(math.sin(u) * math.cos(v), math.sin(v)))


def chord_error(a: SpherePoint, b: SpherePoint, R_o: float) -> float:
    """Straight-line (chord) distance between two contact points in R^3."""
    ua, va = a.u_o, a.v_o
    ub, vb = b.u_o, b.v_o
    cva, cvb = math.cos(va), math.cos(vb)
    return R_o * math.sqrt((math.sin(va) - math.sin(vb)) ** 2
                           + (math.cos(ua) * cva - math.cos(ub) * cvb) ** 2
                           + (math.sin(ua) * cva - math.sin(ub) * cvb) ** 2)


def chord_errors(u, v, target: SpherePoint, R_o: float) -> np.ndarray:
    """Vectorized :func:`chord_error` from arrays of contact angles to ``target``."""
    d = embed_uv(u, v, R_o) - sphere_embed(target, R_o)
    return np.sqrt(np.sum(d * d, axis=-1))
