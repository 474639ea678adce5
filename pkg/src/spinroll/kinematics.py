"""Five-state rolling/spinning kinematics with the controller in the loop.

The state is ``(u_s, v_s, u_o, v_o, psi)``: plane position, sphere contact
parameters and spin.  Every column of the model is multiplied by the rolling
rate ``delta``, so the geometric paths do not depend on how time is scaled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _core
from .controller import (ControlInputs, SpinTracker, control_inputs, phi_offset, spin_deviation,
                         virtual_surface)
from .errors import PoleError, StepFailure
from .geometry import HALF_PI, embed_uv, wrap_angle
from .reachability import GoalSpec, desired_cap_area
from .timescale import TimeScaleSpec

VARIANTS = ("as_written", "trig_corrected")
#: Default right-hand side variant (chosen by the no-sliding arbitration test).
DEFAULT_VARIANT = "as_written"

MIN_SAMPLES = 2000

CSV_COLUMNS = ("t", "s_plane", "s_sphere", "u_s", "v_s", "u_o", "v_o", "psi", "x_o", "y_o", "z_o",
               "delta", "alpha_s", "beta_s", "gamma_s", "theta", "phi", "psi_q")


@dataclass(frozen=True)
class Configuration:
    """Sphere-on-plane configuration; ``psi`` is kept unwrapped."""

    u_s: float = 0.0
    v_s: float = 0.0
    u_o: float = 0.0
    v_o: float = 0.0
    psi: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.u_s, self.v_s, self.u_o, self.v_o, self.psi], dtype=float)


@dataclass(frozen=True)
class StateDerivative:
    du_s: float
    dv_s: float
    du_o: float
    dv_o: float
    dpsi: float

    def as_array(self) -> np.ndarray:
        return np.array([self.du_s, self.dv_s, self.du_o, self.dv_o, self.dpsi], dtype=float)


@dataclass(frozen=True)
class KinematicsContext:
    """Everything the right-hand side needs besides time and state.

    Parameters
    ----------
    goal : GoalSpec
        Planning request.
    R_o, mu_r : float
        Sphere radius and incircle divider.
    zeta_prime, R_a, psi_u : float
        Tuning constants (``zeta_q + zeta_u``, ``R_q + R_u`` and the spin
        offset).
    timescale : TimeScaleSpec
        Constant or smooth rolling-rate scaling.
    variant : {"as_written", "trig_corrected"}
        Reading of the first plane row of the model.
    v_shift : bool
        Evaluate ``alpha_s`` with the goal v-angle shifted by ``pi/2``.
    gate : bool
        Stop rolling once the sphere has passed the goal along the ray.
    """

    goal: GoalSpec
    R_o: float = 0.5
    mu_r: float = 4.0
    zeta_prime: float = 0.0
    R_a: float = 0.005
    psi_u: float = 0.0
    timescale: TimeScaleSpec = field(default_factory=TimeScaleSpec)
    variant: str = DEFAULT_VARIANT
    v_shift: bool = False
    gate: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if self.R_o <= 0:
            raise ValueError("R_o must be positive")

    @property
    def S_t(self) -> float:
        return desired_cap_area(self.goal, self.R_o, self.psi_u)

    def tracker(self, psi: float) -> SpinTracker:
        return SpinTracker(S_t=self.S_t, S_i_t=self.R_o ** 2 * (psi - self.goal.psi_0), psi_u=self.psi_u)

    def params(self) -> np.ndarray:
        g = self.goal
        ts = self.timescale
        p = np.zeros(_core.N_PARAMS)
        p[_core.P_R] = self.R_o
        p[_core.P_MU] = self.mu_r
        p[_core.P_T] = ts.T_const
        p[_core.P_USF] = g.P_f.u_s
        p[_core.P_VSF] = g.P_f.v_s
        p[_core.P_UOF] = g.Psi_f.u_o
        p[_core.P_VOF] = g.Psi_f.v_o
        p[_core.P_ST] = self.S_t / self.R_o ** 2
        p[_core.P_ZP] = self.zeta_prime
        p[_core.P_RA] = self.R_a
        p[_core.P_G] = g.G_f
        p[_core.P_VARIANT] = float(VARIANTS.index(self.variant))
        p[_core.P_OFF] = phi_offset(g.G_f)
        p[_core.P_US0] = g.P_0.u_s
        p[_core.P_VS0] = g.P_0.v_s
        p[_core.P_PSI0] = g.psi_0
        p[_core.P_VSHIFT] = HALF_PI if self.v_shift else 0.0
        p[_core.P_MODE] = 1.0 if ts.mode == "smooth" else 0.0
        p[_core.P_AMP] = ts.a
        p[_core.P_TS] = ts.T_s
        p[_core.P_GATE] = 1.0 if self.gate else 0.0
        return p

    def initial_state(self) -> Configuration:
        g = self.goal
        return Configuration(g.P_0.u_s, g.P_0.v_s, g.Psi_0.u_o, g.Psi_0.v_o, g.psi_0)


@dataclass
class Trajectory:
    """Time-ordered samples of one solve.

    Attributes
    ----------
    t : (n,) array
    x : (n, 5) array
        ``u_s, v_s, u_o, v_o, psi``; contact angles wrapped, ``psi`` unwrapped.
    s_plane, s_sphere : (n,) arrays
        Cumulative arc lengths of the plane and sphere paths.
    inputs : (n, 7) array
        ``alpha_s, beta_s, gamma_s, theta, phi, delta, psi_q``.
    dx : (n, 5) array
        State derivatives at the samples.
    accepted : (n,) bool array
        True where the sample is an accepted integrator step.
    status : int
        Integrator status code (0 = reached ``t_f``).
    R_o : float
    fallback_count : int
        Samples where the smooth time scale fell back to constant mode.
    steps : tuple, optional
        Accepted step times, states and derivatives; enables :meth:`refined`.
    """

    t: np.ndarray
    x: np.ndarray
    s_plane: np.ndarray
    s_sphere: np.ndarray
    inputs: np.ndarray
    dx: np.ndarray
    accepted: np.ndarray
    status: int
    R_o: float
    n_steps: int = 0
    n_rejected: int = 0
    fallback_count: int = 0
    steps: tuple | None = field(default=None, repr=False)

    INPUT_NAMES = ("alpha_s", "beta_s", "gamma_s", "theta", "phi", "delta", "psi_q")

    def __len__(self) -> int:
        return self.t.shape[0]

    @property
    def final(self) -> Configuration:
        return Configuration(*map(float, self.x[-1]))

    @property
    def embedded(self) -> np.ndarray:
        return embed_uv(self.x[:, 2], self.x[:, 3], self.R_o)

    def column(self, name: str) -> np.ndarray:
        if name == "t":
            return self.t
        if name == "s_plane":
            return self.s_plane
        if name == "s_sphere":
            return self.s_sphere
        state = ("u_s", "v_s", "u_o", "v_o", "psi")
        if name in state:
            return self.x[:, state.index(name)]
        if name in ("x_o", "y_o", "z_o"):
            return self.embedded[:, "xyz".index(name[0])]
        if name in self.INPUT_NAMES:
            return self.inputs[:, self.INPUT_NAMES.index(name)]
        raise KeyError(name)

    def table(self) -> np.ndarray:
        """All export columns as an ``(n, len(CSV_COLUMNS))`` array."""
        return np.column_stack([self.column(c) for c in CSV_COLUMNS])

    def refined(self, max_chord: float = 1e-3) -> dict[str, np.ndarray]:
        """Paths on a grid fine enough that no chord exceeds ``max_chord``.

        Each accepted step is subdivided and evaluated with the cubic Hermite
        dense output of the integrator, so the polylines follow the computed
        paths far more closely than the stored samples do.

        Returns
        -------
        dict
            ``s_plane``, ``plane`` (n, 2), ``s_sphere`` and ``sphere`` (n, 3).
        """
        if self.steps is None:
            return {"s_plane": self.s_plane, "plane": self.x[:, :2], "s_sphere": self.s_sphere,
                    "sphere": self.embedded}
        ts, ys, fs = self.steps
        chord = np.maximum(np.diff(ys[:, 5]), np.diff(ys[:, 6]))
        pieces = np.maximum(1, np.ceil(chord / max_chord)).astype(int)
        tq = np.concatenate([np.linspace(ts[i], ts[i + 1], k, endpoint=False) for i, k in enumerate(pieces)]
                            + [ts[-1:]]) if ts.shape[0] > 1 else ts.copy()
        yq = _core.hermite(ts, ys, fs, tq)
        return {"s_plane": yq[:, 5], "plane": yq[:, :2], "s_sphere": yq[:, 6],
                "sphere": embed_uv(yq[:, 2], yq[:, 3], self.R_o)}

    def angular_speed(self) -> np.ndarray:
        """Norm of ``(du_o, dv_o, dpsi)`` at each sample (rad/s)."""
        return np.sqrt(np.sum(self.dx[:, 2:5] ** 2, axis=1))


def rhs(t: float, x: Configuration, ctx: KinematicsContext) -> StateDerivative:
    """Reference right-hand side built from the readable controller functions.

    Raises
    ------
    PoleError
        If ``|cos v_o| <= 1e-9``.
    SteeringSingularity
        If the torsion input vanishes.
    """
    if abs(math.cos(x.v_o)) <= 1e-9:
        raise PoleError(f"model undefined at v_o = {x.v_o!r}")
    g = ctx.goal
    R = ctx.R_o
    u_p = wrap_angle(g.Psi_f.u_o - x.u_o)
    v_p = wrap_angle(g.Psi_f.v_o - x.v_o)
    vs = virtual_surface(u_p, v_p, g.Psi_f.v_o, ctx.zeta_prime, ctx.R_a, R, ctx.mu_r)
    psi_q = spin_deviation(x.psi, g.psi_0, ctx.tracker(x.psi), R)
    ts = ctx.timescale
    T = ts.T_const
    ci = control_inputs(x, g, vs, R, psi_q=psi_q, T=T, v_shift=ctx.v_shift, gate=ctx.gate)
    if ts.mode == "smooth" and ci.delta > 0.0:
        from .timescale import smooth_velocity
        c = ci.delta * abs(T)
        w = smooth_velocity(min(max(t, 0.0), ts.T_s), ts.a, ts.T_s)
        if abs(ci.alpha_s) >= 1e-12:
            ci = replace(ci, delta=c * c * w / abs(ci.alpha_s))
    return _assemble(x, ci, R, ctx.variant)


def _assemble(x: Configuration, ci: ControlInputs, R: float, variant: str) -> StateDerivative:
    S = ci.theta + ci.phi
    sS, cS = math.sin(S), math.cos(S)
    sp, cp = math.sin(x.psi), math.cos(x.psi)
    cv, tv = math.cos(x.v_o), math.tan(x.v_o)
    a, b, g, d = ci.alpha_s, ci.beta_s, ci.gamma_s, ci.delta
    s1 = cS if variant == "trig_corrected" else sS
    # columns: drift, gamma_s, beta_s, alpha_s
    drift = np.array([s1, sS, sS * (sp - cp) / (R * cv), sS * (cp + sp) / R,
                      tv * (sS * (sp - cp) + math.cos(ci.phi)) / R])
    col_g = np.array([-R * s1, -R * sS, sS * (cp - sp) / cv, -sS * (sp + cp), tv * sS * (cp - sp)])
    col_b = np.array([R * sS, -R * cS, -math.sin(x.psi + S) / cv, -math.cos(x.psi + S),
                      -tv * math.sin(x.psi + S)])
    col_a = np.array([0.0, 0.0, 0.0, 0.0, -1.0])
    return StateDerivative(*(d * (drift + g * col_g + b * col_b + a * col_a)))


def integrate(x0: Configuration | None, ctx: KinematicsContext, t_f: float, rtol: float = 1e-8,
              atol: float = 1e-8, max_step: float | None = None, max_steps: int = 1_000_000,
              min_samples: int = MIN_SAMPLES, raise_on_failure: bool = False) -> Trajectory:
    """Integrate the kinematics from ``x0`` over ``[0, t_f]``.

    Uses an embedded Dormand-Prince 5(4) pair.  Every accepted step is kept;
    if there are fewer than ``min_samples`` of them, cubic Hermite samples on a
    uniform grid are added.  Arc lengths are integrated alongside the state.

    Parameters
    ----------
    x0 : Configuration or None
        Initial state (defaults to the goal's initial configuration).
    ctx : KinematicsContext
    t_f : float
        Final time, positive.
    rtol, atol : float
        Tolerances of the error control.
    max_step : float, optional
        Largest step; defaults to ``t_f / 500``.
    raise_on_failure : bool
        Raise :class:`StepFailure` instead of returning a truncated
        trajectory with a non-zero ``status``.
    """
    if not t_f > 0:
        raise ValueError("t_f must be positive")
    if not (rtol > 0 and atol > 0):
        raise ValueError("tolerances must be positive")
    if x0 is None:
        x0 = ctx.initial_state()
    hmax = t_f / 500.0 if max_step is None else float(max_step)
    p = ctx.params()
    y0 = np.zeros(_core.NSTATE)
    y0[:5] = x0.as_array()
    # The first step is a fixed fraction of the largest one so that scaling
    # time (t_f and T together) reproduces the same step sequence.
    ts, ys, fs, status, nrej = _core.dopri5(y0, p, float(t_f), float(rtol), float(atol), hmax,
                                            1e-3 * hmax, int(max_steps))
    if status != _core.STATUS_OK and raise_on_failure:
        raise StepFailure(f"integration stopped at t={ts[-1]:.6g} (status {status})")
    n_acc = ts.shape[0]
    steps = (ts, ys, fs)
    accepted = np.ones(n_acc, dtype=bool)
    if n_acc < min_samples and ts[-1] > 0:
        grid = np.linspace(0.0, ts[-1], min_samples)
        tq = np.union1d(ts, grid)
        yq = _core.hermite(ts, ys, fs, tq)
        idx = np.searchsorted(tq, ts)
        yq[idx] = ys
        accepted = np.zeros(tq.shape[0], dtype=bool)
        accepted[idx] = True
        ts, ys = tq, yq
    W, D = _core.controller_series(ts, ys, p)
    x = ys[:, :5].copy()
    x[:, 2] = wrap_angle(x[:, 2])
    x[:, 3] = wrap_angle(x[:, 3])
    inputs = W[:, [_core.W_ALPHA, _core.W_BETA, _core.W_GAMMA, _core.W_THETA, _core.W_PHI,
                   _core.W_DELTA, _core.W_PSIQ]]
    return Trajectory(t=ts, x=x, s_plane=ys[:, 5].copy(), s_sphere=ys[:, 6].copy(), inputs=inputs,
                      dx=D[:, :5].copy(), accepted=accepted, status=int(status), R_o=ctx.R_o,
                      n_steps=n_acc - 1, n_rejected=int(nrej),
                      fallback_count=int(np.sum(W[:, _core.W_FALLBACK])), steps=steps)


def straightness(traj: Trajectory, goal: GoalSpec, min_disp: float = 1e-6) -> float:
    """Largest angular deviation of the plane path from the goal ray (rad)."""
    du = traj.x[:, 0] - goal.P_0.u_s
    dv = traj.x[:, 1] - goal.P_0.v_s
    mask = np.hypot(du, dv) > min_disp
    if not np.any(mask):
        return 0.0
    err = wrap_angle(np.arctan2(dv[mask], du[mask]) - goal.G_f)
    return float(np.max(np.abs(err)))


def no_sliding_ratio(traj: Trajectory) -> float:
    """``|s_plane - s_sphere| / max(s_plane, 1e-9)`` at the end of the solve."""
    sp, ss = float(traj.s_plane[-1]), float(traj.s_sphere[-1])
    return abs(sp - ss) / max(sp, 1e-9)


def warmup() -> None:
    """Compile the kernels (cached on disk after the first run)."""
    goal = GoalSpec.from_tuple((1.0, 0.2, 0.3, 0.2, 0.1))
    integrate(None, KinematicsContext(goal=goal), 0.01, min_samples=2)
