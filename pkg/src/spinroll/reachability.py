"""Minimum plane distance needed to reach a sphere orientation and spin.

The sphere must roll along a straight line, so the contact curve on the
sphere is exactly as long as the plane displacement.  A target orientation
and spin therefore need a minimum displacement ``d``: the contact curve is
modelled as an arc of a circular cap through the target contact point, with
the cap area adjusted (Gauss-Bonnet) until the enclosed spin equals the target
spin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidGoal, NumericalDomain
from .geometry import CLAMP_TOL, CapGeometry, PlanePoint, SpherePoint, cap_spin_change, wrap_angle

PI = math.pi

#: Values of the ``alpha_form`` switch.
ALPHA_FORMS = ("as_printed", "alt")
#: Default sector-angle reading; see the decisions ledger for the arbitration.
DEFAULT_ALPHA_FORM = "alt"

_RADICAND_TOL = 1e-9


@dataclass(frozen=True)
class GoalSpec:
    """Initial and final configurations of a planning request."""

    P_f: PlanePoint
    Psi_f: SpherePoint
    psi_f: float
    P_0: PlanePoint = field(default_factory=lambda: PlanePoint(0.0, 0.0))
    Psi_0: SpherePoint = field(default_factory=lambda: SpherePoint(0.0, 0.0))
    psi_0: float = 0.0

    @classmethod
    def from_tuple(cls, final, initial=(0.0, 0.0, 0.0, 0.0, 0.0)):
        """Build from ``(u_s, v_s, u_o, v_o, psi)`` tuples."""
        f = [float(x) for x in final]
        i = [float(x) for x in initial]
        return cls(P_f=PlanePoint(f[0], f[1]), Psi_f=SpherePoint(f[2], f[3]), psi_f=f[4],
                   P_0=PlanePoint(i[0], i[1]), Psi_0=SpherePoint(i[2], i[3]), psi_0=i[4])

    @property
    def plane_distance(self) -> float:
        return math.hypot(self.P_f.u_s - self.P_0.u_s, self.P_f.v_s - self.P_0.v_s)

    @property
    def G_f(self) -> float:
        """Plane goal direction, from the full displacement via atan2."""
        return math.atan2(self.P_f.v_s - self.P_0.v_s, self.P_f.u_s - self.P_0.u_s)


@dataclass(frozen=True)
class DistanceReport:
    """Result of :func:`min_distance`.

    ``feasible`` is ``slack > 0``.  ``waived`` records that the displacement is
    at least one sphere circumference, in which case the constraint does not
    restrict any configuration.
    """

    d: float
    cap: CapGeometry
    feasible: bool
    slack: float
    waived: bool
    alpha_form: str

    def to_dict(self) -> dict:
        from dataclasses import asdict
        return asdict(self)


def _check_radicand(x: float, name: str, partial: dict) -> float:
    if x < 0.0:
        if x < -_RADICAND_TOL:
            err = NumericalDomain(f"{name} radicand is negative ({x:.6g})")
            err.partial = partial
            raise err
        return 0.0
    return x


def _check_unit(x: float, name: str, partial: dict) -> float:
    if abs(x) > 1.0:
        if abs(x) - 1.0 > CLAMP_TOL:
            err = NumericalDomain(f"{name} argument {x:.6g} outside [-1, 1]")
            err.partial = partial
            raise err
        x = math.copysign(1.0, x)
    return x


def _partial_cap(v: dict, R_o: float) -> CapGeometry:
    nan = float("nan")
    keys = ("S_t", "S_c_prime", "dS", "h", "h_c", "h_c_prime", "a_c", "a_c_prime", "alpha",
            "alpha_prime", "Q_of", "psi_prime")
    return CapGeometry(**{k: v.get(k, nan) for k in keys}, kappa_o=1.0 / (R_o * R_o))


def cap_chain(u_of: float, v_of: float, psi_f: float, R_o: float,
              alpha_form: str = DEFAULT_ALPHA_FORM) -> tuple[float, CapGeometry]:
    """Evaluate the cap construction for a goal measured from the origin contact.

    Parameters
    ----------
    u_of, v_of : float
        Target contact parameters (rad).
    psi_f : float
        Target spin (rad); the initial spin is taken as zero.
    R_o : float
        Sphere radius.
    alpha_form : {"as_printed", "alt"}
        Reading of the sector angle for non-negative area change.

    Returns
    -------
    (float, CapGeometry)
        Minimum distance ``d`` and all intermediate quantities.

    Raises
    ------
    NumericalDomain
        If a radicand is negative or an inverse-sine argument leaves [-1, 1].
        The exception carries the quantities computed so far in ``partial``.
    """
    if R_o <= 0:
        raise ValueError("R_o must be positive")
    if alpha_form not in ALPHA_FORMS:
        raise ValueError(f"alpha_form must be one of {ALPHA_FORMS}")
    R = R_o
    v: dict = {"alpha_prime": PI}
    cu, cv = math.cos(u_of), math.cos(v_of)
    h = R * (1.0 - cu * cv)
    v["h"] = h
    a_p = math.sqrt(h * h + R * R * (math.sin(v_of) ** 2 + math.sin(u_of) ** 2 * cv * cv))
    v["a_c_prime"] = a_p
    if h <= R:
        ratio = h / a_p if a_p > 0 else 1.0
        Q = PI - 2.0 * math.acos(_check_unit(ratio, "Q_of acos", v))
    else:
        Q = 0.5 * PI - math.asin(_check_unit((h - R) / R, "Q_of asin", v))
    v["Q_of"] = Q
    if a_p <= 2.0 * R:
        h_p = R * (1.0 - math.cos(0.5 * Q))
    else:
        h_p = R * (1.0 - a_p * math.cos(0.5 * Q) / (2.0 * R))
    v["h_c_prime"] = h_p
    S_p = (v["alpha_prime"] / (2.0 * PI)) * ((0.5 * a_p) ** 2 + h_p * h_p)
    v["S_c_prime"] = S_p
    psi_p = cap_spin_change(S_p, R)
    v["psi_prime"] = psi_p
    dS = R * R * (psi_f - psi_p)
    v["dS"] = dS
    S_t = 2.0 * S_p + dS
    v["S_t"] = S_t
    h_c = S_t / (2.0 * PI * R)
    v["h_c"] = h_c
    a_c = 2.0 * math.sqrt(_check_radicand(S_t / PI - h_c * h_c, "a_c", v))
    v["a_c"] = a_c
    if a_c == 0.0:
        err = NumericalDomain("cap base diameter a_c is zero")
        err.partial = v
        raise err
    s = math.asin(_check_unit(a_p / a_c, "alpha asin", v))
    if dS >= 0.0:
        alpha = (1.0 - 2.0 * s) if alpha_form == "as_printed" else (2.0 * PI - 2.0 * s)
    else:
        alpha = 2.0 * s
    alpha /= 2.0 * PI
    v["alpha"] = alpha
    d = 2.0 * PI * a_c * alpha
    return d, _partial_cap(v, R)


def min_distance(goal: GoalSpec, R_o: float, alpha_form: str = DEFAULT_ALPHA_FORM) -> DistanceReport:
    """Minimum plane distance required to reach ``goal``.

    Raises
    ------
    InvalidGoal
        If the initial contact point is not the chart origin or the initial
        spin is not zero (the construction assumes both).
    NumericalDomain
        Propagated from :func:`cap_chain`.
    """
    if abs(goal.Psi_0.u_o) > 0.0 or abs(goal.Psi_0.v_o) > 0.0:
        raise InvalidGoal("minimum distance is only defined for an initial contact at (0, 0)")
    if goal.psi_0 != 0.0:
        raise InvalidGoal("minimum distance assumes an initial spin of 0")
    d, cap = cap_chain(goal.Psi_f.u_o, goal.Psi_f.v_o, goal.psi_f, R_o, alpha_form)
    dist = goal.plane_distance
    slack = dist - d
    return DistanceReport(d=d, cap=cap, feasible=bool(slack > 0), slack=slack,
                          waived=bool(dist >= 2.0 * PI * R_o), alpha_form=alpha_form)


def desired_cap_area(goal: GoalSpec, R_o: float, psi_u: float = 0.0) -> float:
    """Under-cap area the spin tracker aims for: ``S'_c + R^2 (psi_f + psi_u - psi')``.

    Only the first part of the cap construction is needed, so this stays
    defined even when the full distance chain leaves its domain.
    """
    try:
        _, cap = cap_chain(goal.Psi_f.u_o, goal.Psi_f.v_o, goal.psi_f, R_o)
    except NumericalDomain as exc:
        cap = _partial_cap(exc.partial, R_o)
    return cap.S_c_prime + R_o * R_o * (goal.psi_f + psi_u - cap.psi_prime)


def distance_surface(u_grid, v_fixed: float, psi_list, R_o: float,
                     alpha_form: str = DEFAULT_ALPHA_FORM) -> np.ndarray:
    """Normalized minimum distance ``d / R_o`` over a grid of goals.

    Returns
    -------
    numpy.ndarray
        Shape ``(len(psi_list), len(u_grid))``; cells whose chain leaves its
        domain are ``nan``.
    """
    u_grid = np.atleast_1d(np.asarray(u_grid, dtype=float))
    psi_list = np.atleast_1d(np.asarray(psi_list, dtype=float))
    if u_grid.size == 0 or psi_list.size == 0:
        raise ValueError("grids must be non-empty")
    out = np.full((psi_list.size, u_grid.size), np.nan)
    for i, psi in enumerate(psi_list):
        for j, u in enumerate(u_grid):
            try:
                d, _ = cap_chain(float(wrap_angle(u)), v_fixed, float(psi), R_o, alpha_form)
            except NumericalDomain:
                continue
            out[i, j] = d / R_o
    return out
