"""Compiled kernels: controller, right-hand side and a Dormand-Prince 5(4) integrator.

Everything here works on flat float arrays so that numba can compile it.  The
parameter vector layout is given by the ``P_*`` indices below; it is built by
:meth:`spinroll.kinematics.KinematicsContext.params`.

The integrated state has seven components: the five configuration variables
``(u_s, v_s, u_o, v_o, psi)`` followed by the plane and sphere arc lengths.
Only the first five enter the step-size control.
"""
from __future__ import annotations

import math

import numpy as np
from numba import njit

PI = math.pi
HALF_PI = 0.5 * math.pi

# parameter vector layout
P_R = 0
P_MU = 1
P_T = 2
P_USF = 3
P_VSF = 4
P_UOF = 5
P_VOF = 6
P_ST = 7        # desired cap area divided by R_o^2
P_ZP = 8        # zeta' = zeta_q + zeta_u
P_RA = 9        # R_a = R_q + R_u
P_G = 10
P_VARIANT = 11  # 0 = as_written, 1 = trig_corrected
P_OFF = 12      # constant part of phi
P_US0 = 13
P_VS0 = 14
P_PSI0 = 15
P_VSHIFT = 16   # added to v_of inside alpha_s
P_MODE = 17     # 0 = constant T, 1 = smooth profile
P_AMP = 18
P_TS = 19
P_GATE = 20
N_PARAMS = 21

# controller output layout
W_ALPHA = 0
W_BETA = 1
W_GAMMA = 2
W_THETA = 3
W_PHI = 4
W_DELTA = 5
W_PSIQ = 6
W_RI = 7
W_RT = 8
W_ZETA = 9
W_FALLBACK = 10
N_OUT = 11

NSTATE = 7
NCTRL = 5

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAXSTEPS = 2
STATUS_NONFINITE = 3

_JIT = dict(cache=True, error_model="numpy")


@njit(**_JIT)
def wrap(a):
    return (a + PI) % (2.0 * PI) - PI


@njit(**_JIT)
def incircle(up, R, mu):
    up = abs(wrap(up))
    if abs(up - HALF_PI) < 1e-6:
        up = HALF_PI - 1e-6
    r = R / math.cos(up)
    l = 2.0 * R * math.tan(up)
    S = (2.0 * r + l) / 2.0
    rad = (S - r) ** 2 * (S - l) / S
    val = math.sqrt(rad) if rad > 0.0 else 0.0
    if up < HALF_PI:
        return val
    return R / mu + val


@njit(**_JIT)
def smooth_omega(t, a, Ts):
    if t <= 0.0 or t >= Ts:
        return 0.0
    s = t / Ts
    r = 1.0 - s
    return 140.0 * a * (s * s) * (s * s) * (r * r * r)


@njit(**_JIT)
def controller(t, x, p, out):
    us = x[0]
    vs = x[1]
    uo = x[2]
    vo = x[3]
    psi = x[4]
    R = p[P_R]
    vof = p[P_VOF]
    up = wrap(p[P_UOF] - uo)
    vp = wrap(vof - vo)
    Ri = incircle(up, R, p[P_MU])
    Rn = 0.5 * (Ri + p[P_RA])
    Rt = Rn + Rn
    va = vof + p[P_VSHIFT]
    zeta = math.atan(R * math.tan(va + p[P_ZP]) / Rt)
    alpha = math.tan(va) / R - math.tan(zeta) / Rt
    beta = math.sqrt(abs(R * R * math.cos(vp) ** 2 - Rt * Rt)) / (R * R)
    gamma = (Rn - R) / (Rn * R)
    psiq = p[P_ST] - (psi - p[P_PSI0])
    G = p[P_G]
    tg = math.tan(G)
    num = (1.0 - tg) / R + gamma * (tg - 1.0) - beta * tg
    theta = math.atan2(beta, num) - psiq
    phi = psiq + p[P_OFF]
    ex = p[P_USF] - us
    ey = p[P_VSF] - vs
    fallback = 0.0
    if p[P_GATE] != 0.0 and ex * math.cos(G) + ey * math.sin(G) <= 0.0:
        d = 0.0
    else:
        c = math.hypot(ex, ey) * abs(vof * up)
        if p[P_MODE] == 0.0:
            d = c / abs(p[P_T])
        else:
            w = smooth_omega(t, p[P_AMP], p[P_TS])
            if abs(alpha) < 1e-12:
                d = c / abs(p[P_T])
                fallback = 1.0
            else:
                d = c * c * w / abs(alpha)
    out[W_ALPHA] = alpha
    out[W_BETA] = beta
    out[W_GAMMA] = gamma
    out[W_THETA] = theta
    out[W_PHI] = phi
    out[W_DELTA] = d
    out[W_PSIQ] = psiq
    out[W_RI] = Ri
    out[W_RT] = Rt
    out[W_ZETA] = zeta
    out[W_FALLBACK] = fallback


@njit(**_JIT)
def rhs(t, x, p, dx, w):
    controller(t, x, p, w)
    a = w[W_ALPHA]
    b = w[W_BETA]
    g = w[W_GAMMA]
    ph = w[W_PHI]
    d = w[W_DELTA]
    R = p[P_R]
    psi = x[4]
    vo = x[3]
    S = w[W_THETA] + ph
    sS = math.sin(S)
    cS = math.cos(S)
    sp = math.sin(psi)
    cp = math.cos(psi)
    cv = math.cos(vo)
    tv = math.tan(vo)
    s1 = cS if p[P_VARIANT] == 1.0 else sS
    dx[0] = d * (s1 - R * s1 * g + R * sS * b)
    dx[1] = d * (sS - R * sS * g - R * cS * b)
    dx[2] = d * (sS * (sp - cp) / (R * cv) + sS * (cp - sp) / cv * g - math.sin(psi + S) / cv * b)
    dx[3] = d * (sS * (cp + sp) / R - sS * (sp + cp) * g - math.cos(psi + S) * b)
    dx[4] = d * (tv * (sS * (sp - cp) + math.cos(ph)) / R + tv * sS * (cp - sp) * g
                 - tv * math.sin(psi + S) * b - a)
    dx[5] = math.sqrt(dx[0] * dx[0] + dx[1] * dx[1])
    dx[6] = R * math.sqrt(cv * cv * dx[2] * dx[2] + dx[3] * dx[3])


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, 0] = 1 / 5
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit(**_JIT)
def _grow(ts, ys, fs, m):
    n = ts.shape[0] * 2
    ts2 = np.empty(n)
    ys2 = np.empty((n, NSTATE))
    fs2 = np.empty((n, NSTATE))
    ts2[:m] = ts[:m]
    ys2[:m] = ys[:m]
    fs2[:m] = fs[:m]
    return ts2, ys2, fs2


@njit(**_JIT)
def dopri5(x0, p, tf, rtol, atol, hmax, h0, maxsteps):
    """Integrate from t = 0 to ``tf``.

    Returns accepted times, states, derivatives at those states, a status
    code and the number of rejected steps.
    """
    A = _A
    C = _C
    E = _E
    cap = 4096
    ts = np.empty(cap)
    ys = np.empty((cap, NSTATE))
    fs = np.empty((cap, NSTATE))
    K = np.empty((7, NSTATE))
    w = np.empty(N_OUT)
    xt = np.empty(NSTATE)
    x = x0.copy()
    t = 0.0
    rhs(t, x, p, K[0], w)
    ts[0] = 0.0
    ys[0] = x
    fs[0] = K[0]
    m = 1
    h = min(hmax, h0)
    status = STATUS_OK
    nrej = 0
    nstep = 0
    while t < tf:
        last = False
        if t + h >= tf:
            h = tf - t
            last = True
        for s in range(1, 7):
            for i in range(NSTATE):
                acc = x[i]
                for j in range(s):
                    acc += h * A[s, j] * K[j, i]
                xt[i] = acc
            rhs(t + C[s] * h, xt, p, K[s], w)
        err = 0.0
        for i in range(NCTRL):
            e = 0.0
            for j in range(7):
                e += E[j] * K[j, i]
            e *= h
            sc = atol + rtol * max(abs(x[i]), abs(xt[i]))
            err += (e / sc) ** 2
        err = math.sqrt(err / NCTRL)
        finite = True
        for i in range(NSTATE):
            if not math.isfinite(xt[i]) or not math.isfinite(K[6, i]):
                finite = False
        if not finite or not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = tf if last else t + h
            for i in range(NSTATE):
                x[i] = xt[i]
                K[0, i] = K[6, i]
            if m >= ts.shape[0]:
                ts, ys, fs = _grow(ts, ys, fs, m)
            ts[m] = t
            ys[m] = x
            fs[m] = K[0]
            m += 1
            nstep += 1
            if nstep >= maxsteps and t < tf:
                status = STATUS_MAXSTEPS
                break
            fac = 0.9 * err ** -0.2 if err > 0.0 else 5.0
            h = h * min(5.0, max(0.2, fac))
        else:
            nrej += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
        h = min(h, hmax)
        if t < tf and h < 1e-14 * max(1.0, abs(t)):
            status = STATUS_UNDERFLOW
            break
    return ts[:m], ys[:m], fs[:m], status, nrej


@njit(**_JIT)
def hermite(ts, ys, fs, tq):
    """Cubic Hermite interpolation of the accepted steps at sorted times ``tq``."""
    n = tq.shape[0]
    out = np.empty((n, NSTATE))
    j = 0
    for k in range(n):
        tt = tq[k]
        while j < ts.shape[0] - 2 and ts[j + 1] < tt:
            j += 1
        h = ts[j + 1] - ts[j]
        if h <= 0.0:
            out[k] = ys[j]
            continue
        s = (tt - ts[j]) / h
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        for i in range(NSTATE):
            out[k, i] = h00 * ys[j, i] + h10 * h * fs[j, i] + h01 * ys[j + 1, i] + h11 * h * fs[j + 1, i]
    return out


@njit(**_JIT)
def controller_series(ts, ys, p):
    """Controller outputs and state derivatives at every sample."""
    n = ts.shape[0]
    W = np.empty((n, N_OUT))
    D = np.empty((n, NSTATE))
    for k in range(n):
        rhs(ts[k], ys[k], p, D[k], W[k])
    return W, D
