"""Virtual-surface geometric controller.

The controller shapes an imaginary surface sandwiched between the sphere and
the plane.  Its curvature triple becomes the three arc-length inputs
``(alpha_s, beta_s, gamma_s)``: a sphere-like normal and geodesic curvature and
a helicoid-like geodesic torsion.  Two steering angles ``(theta, phi)`` keep
the plane path on the straight ray towards the goal, and the rolling rate
``delta`` maps arc length to time.

These functions are the readable reference implementation; the integrator
uses a compiled copy in :mod:`spinroll._core` that is tested against them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import PoleError, SteeringSingularity
from .geometry import HALF_PI, PI, helicoid_torsion, wrap_angle

#: Distance kept from ``pi/2`` when the incircle construction is evaluated.
INCIRCLE_CLAMP = 1e-6


@dataclass(frozen=True)
class VirtualSurfaceState:
    """Geometry of the desired virtual surface at one instant."""

    R_n: float
    R_g: float
    R_t: float
    R_i: float
    R_a: float
    zeta: float
    zeta_prime: float
    u_prime: float
    v_prime: float


@dataclass(frozen=True)
class ControlInputs:
    """Arc-length inputs, steering angles and rolling rate."""

    alpha_s: float
    beta_s: float
    gamma_s: float
    G_f: float
    delta: float
    theta: float
    phi: float
    psi_q: float


@dataclass(frozen=True)
class SpinTracker:
    """Desired and swept under-cap areas used to steer the spin angle."""

    S_t: float
    S_i_t: float
    psi_u: float


def incircle_radius(u_prime: float, R_o: float, mu_r: float) -> float:
    """Inradius of the isosceles triangle built on the u-curve feed angle.

    The triangle has two sides ``r_i = R_o / cos u'`` and a base
    ``l_i = 2 R_o tan u'``; Heron's formula gives the inradius.  Past
    ``pi/2`` the constant ``R_o / mu_r`` is added to cap the radius growth.

    Parameters
    ----------
    u_prime : float
        Feed angle ``u_{o,f} - u_o``; its wrapped absolute value is used.
    R_o : float
        Sphere radius.
    mu_r : float
        Positive divider of the offset branch.
    """
    if mu_r <= 0:
        raise ValueError("mu_r must be positive")
    up = abs(wrap_angle(u_prime))
    if abs(up - HALF_PI) < INCIRCLE_CLAMP:
        up = HALF_PI - INCIRCLE_CLAMP
    r_i = R_o / math.cos(up)
    l_i = 2.0 * R_o * math.tan(up)
    S_i = (2.0 * r_i + l_i) / 2.0
    rad = (S_i - r_i) ** 2 * (S_i - l_i) / S_i
    val = math.sqrt(rad) if rad > 0.0 else 0.0
    return val if up < HALF_PI else R_o / mu_r + val


def projection_angle(v_of: float, zeta_prime: float, R_o: float, R_t: float) -> float:
    """Desired projection angle ``atan(R_o tan(v_of + zeta') / R_t)``."""
    if R_t <= 0:
        raise ValueError("R_t must be positive")
    arg = v_of + zeta_prime
    if abs(math.cos(arg)) < 1e-9:
        raise PoleError(f"tan undefined at v_of + zeta' = {arg!r}")
    return math.atan(R_o * math.tan(arg) / R_t)


def virtual_surface(u_prime: float, v_prime: float, v_of: float, zeta_prime: float,
                    R_a: float, R_o: float, mu_r: float) -> VirtualSurfaceState:
    """Assemble the virtual surface from the feeds and the tuning constants.

    ``R_n = R_g = (R_i + R_a) / 2`` and ``R_t = R_n + R_g``.
    """
    R_i = incircle_radius(u_prime, R_o, mu_r)
    R_n = 0.5 * (R_i + R_a)
    R_t = R_n + R_n
    zeta = projection_angle(v_of, zeta_prime, R_o, R_t)
    return VirtualSurfaceState(R_n=R_n, R_g=R_n, R_t=R_t, R_i=R_i, R_a=R_a, zeta=zeta,
                               zeta_prime=zeta_prime, u_prime=u_prime, v_prime=v_prime)


def arc_length_inputs(v_of: float, vs: VirtualSurfaceState, R_o: float) -> tuple[float, float, float]:
    """``(alpha_s, beta_s, gamma_s)`` for a virtual surface state."""
    if abs(math.cos(v_of)) < 1e-9:
        raise PoleError(f"tan undefined at v_of = {v_of!r}")
    alpha = math.tan(v_of) / R_o - math.tan(vs.zeta) / vs.R_t
    beta = helicoid_torsion(vs.v_prime, R_o, vs.R_t)
    gamma = (vs.R_n - R_o) / (vs.R_n * R_o)
    return alpha, beta, gamma


def phi_offset(G_f: float) -> float:
    """Constant part of ``phi``: ``pi`` on ``(-3pi/4, pi/4)``, else ``0``."""
    return PI if -0.75 * PI < G_f < 0.25 * PI else 0.0


def steering_angles(beta_s: float, gamma_s: float, G_f: float, psi_q: float,
                    R_o: float) -> tuple[float, float]:
    """Steering angles ``(theta, phi)``.

    ``theta = acot(X) - psi_q`` with the ``(0, pi)`` branch of the inverse
    cotangent and ``X = [(1 - tan G)/R_o + gamma (tan G - 1) - beta tan G] / beta``.
    ``phi = psi_q + phi_offset(G_f)``.  Their sum does not depend on ``psi_q``.

    Raises
    ------
    SteeringSingularity
        If ``beta_s`` is zero, so that ``X`` is undefined.
    """
    if beta_s == 0.0:
        raise SteeringSingularity("beta_s vanished; steering angle undefined")
    tg = math.tan(G_f)
    num = (1.0 - tg) / R_o + gamma_s * (tg - 1.0) - beta_s * tg
    # acot(num / beta) on (0, pi) equals atan2(beta, num) for beta > 0.
    theta = math.atan2(beta_s, num) - psi_q
    return theta, psi_q + phi_offset(G_f)


def spin_deviation(psi_t: float, psi_0: float, tracker: SpinTracker, R_o: float) -> float:
    """Remaining spin implied by the unswept part of the desired cap area."""
    return (tracker.S_t - R_o * R_o * (psi_t - psi_0)) / (R_o * R_o)


def rolling_rate(u_s: float, v_s: float, u_o: float, P_f: tuple[float, float], u_of: float,
                 v_of: float, T: float, G_f: float | None = None) -> float:
    """Rolling rate ``|P_f - P| * |v_of * u' / T|``.

    If ``G_f`` is given, the rate is zero once the sphere has reached or
    passed ``P_f`` along the goal direction (an overshoot guard; the exact
    dynamics only approach ``P_f`` asymptotically).
    """
    if T == 0:
        raise ValueError("T must be non-zero")
    ex, ey = P_f[0] - u_s, P_f[1] - v_s
    if G_f is not None and ex * math.cos(G_f) + ey * math.sin(G_f) <= 0.0:
        return 0.0
    up = wrap_angle(u_of - u_o)
    return math.hypot(ex, ey) * abs(v_of * up / T)


def control_inputs(state, goal, vs: VirtualSurfaceState, R_o: float, psi_q: float = 0.0,
                   T: float = 1.0, v_shift: bool = False, gate: bool = True) -> ControlInputs:
    """Evaluate every controller output at one configuration.

    Parameters
    ----------
    state : Configuration
        Current configuration.
    goal : GoalSpec
        Planning request.
    vs : VirtualSurfaceState
        Virtual surface at ``state`` (see :func:`virtual_surface`).
    R_o : float
        Sphere radius.
    psi_q : float
        Spin deviation at ``state``.
    T : float
        Time scale of the rolling rate.
    v_shift : bool
        Evaluate ``alpha_s`` with the goal v-angle shifted by ``pi/2``.
    gate : bool
        Apply the overshoot guard of :func:`rolling_rate`.
    """
    v_of = goal.Psi_f.v_o
    if v_shift:
        v_a = v_of + HALF_PI
        vs_a = VirtualSurfaceState(**{**vs.__dict__, "zeta": projection_angle(v_a, vs.zeta_prime, R_o, vs.R_t)})
        alpha, _, _ = arc_length_inputs(v_a, vs_a, R_o)
        _, beta, gamma = arc_length_inputs(v_of, vs, R_o)
    else:
        alpha, beta, gamma = arc_length_inputs(v_of, vs, R_o)
    G = goal.G_f
    theta, phi = steering_angles(beta, gamma, G, psi_q, R_o)
    delta = rolling_rate(state.u_s, state.v_s, state.u_o, (goal.P_f.u_s, goal.P_f.v_s),
                         goal.Psi_f.u_o, v_of, T, G if gate else None)
    return ControlInputs(alpha_s=alpha, beta_s=beta, gamma_s=gamma, G_f=G, delta=delta,
                         theta=theta, phi=phi, psi_q=psi_q)
