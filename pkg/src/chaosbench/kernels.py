"""Numba-compiled integration kernels.

The time-stepping loops live here so that multi-million-step runs (return
maps need >= 1e5 z-maxima, i.e. millions of RK4 steps) finish in seconds.
One generic kernel covers float32 and float64: it is written so that every
intermediate stays in the dtype of its inputs (no literal constants that
would promote float32 to float64), which keeps single-precision runs
genuinely single precision.  The double-double kernels reuse the exact
primitives from :mod:`chaosbench.ddouble`.

System ids: 0 = Lorenz (params sigma, rho, beta), 1 = Rossler (a, b, c).
"""

from __future__ import annotations

import numba
import numpy as np

from .ddouble import dd_add, dd_div, dd_mul, dd_sub

LORENZ = 0
ROSSLER = 1


@numba.njit(cache=True, inline="always")
def _rhs(x, y, z, p0, p1, p2, sys_id):
    if sys_id == LORENZ:
        return p0 * (y - x), x * (p1 - z) - y, x * y - p2 * z
    return -y - z, x + p0 * y, p1 + z * (x - p2)


@numba.njit(cache=True, inline="always")
def _rk4_advance(x, y, z, hdt, dt, dt6, p0, p1, p2, sys_id):
    k1x, k1y, k1z = _rhs(x, y, z, p0, p1, p2, sys_id)
    k2x, k2y, k2z = _rhs(x + hdt * k1x, y + hdt * k1y, z + hdt * k1z,
                         p0, p1, p2, sys_id)
    k3x, k3y, k3z = _rhs(x + hdt * k2x, y + hdt * k2y, z + hdt * k2z,
                         p0, p1, p2, sys_id)
    k4x, k4y, k4z = _rhs(x + dt * k3x, y + dt * k3y, z + dt * k3z,
                         p0, p1, p2, sys_id)
    # 2*k written as k+k: an integer literal would promote float32 operands
    x = x + dt6 * (k1x + (k2x + k2x) + (k3x + k3x) + k4x)
    y = y + dt6 * (k1y + (k2y + k2y) + (k3y + k3y) + k4y)
    z = z + dt6 * (k1z + (k2z + k2z) + (k3z + k3z) + k4z)
    return x, y, z


@numba.njit(cache=True)
def rk4_path(ic, n, dt, params, sys_id, out):
    """Integrate n RK4 steps; out has shape (n+1, 3), dtype of ic.

    Returns -1 on success, else the index of the first non-finite point.
    """
    one = dt / dt
    half = one / (one + one)
    sixth = half / (one + one + one)
    hdt = dt * half
    dt6 = dt * sixth
    x, y, z = ic[0], ic[1], ic[2]
    p0, p1, p2 = params[0], params[1], params[2]
    out[0, 0] = x
    out[0, 1] = y
    out[0, 2] = z
    for i in range(n):
        x, y, z = _rk4_advance(x, y, z, hdt, dt, dt6, p0, p1, p2, sys_id)
        out[i + 1, 0] = x
        out[i + 1, 1] = y
        out[i + 1, 2] = z
        if not (np.isfinite(x) and np.isfinite(y) and np.isfinite(z)):
            return i + 1
    return -1


@numba.njit(cache=True, inline="always")
def _rhs_dd(sh, sl, ph, pl, sys_id, kh, kl):
    if sys_id == LORENZ:
        th, tl = dd_sub(sh[1], sl[1], sh[0], sl[0])
        kh[0], kl[0] = dd_mul(ph[0], pl[0], th, tl)
        th, tl = dd_sub(ph[1], pl[1], sh[2], sl[2])
        th, tl = dd_mul(sh[0], sl[0], th, tl)
        kh[1], kl[1] = dd_sub(th, tl, sh[1], sl[1])
        th, tl = dd_mul(sh[0], sl[0], sh[1], sl[1])
        uh, ul = dd_mul(ph[2], pl[2], sh[2], sl[2])
        kh[2], kl[2] = dd_sub(th, tl, uh, ul)
    else:
        kh[0], kl[0] = dd_add(-sh[1], -sl[1], -sh[2], -sl[2])
        th, tl = dd_mul(ph[0], pl[0], sh[1], sl[1])
        kh[1], kl[1] = dd_add(sh[0], sl[0], th, tl)
        th, tl = dd_sub(sh[0], sl[0], ph[2], pl[2])
        th, tl = dd_mul(sh[2], sl[2], th, tl)
        kh[2], kl[2] = dd_add(ph[1], pl[1], th, tl)


@numba.njit(cache=True, inline="always")
def _rk4_advance_dd(sh, sl, dth, dtl, ph, pl, sys_id,
                    k1h, k1l, k2h, k2l, k3h, k3l, k4h, k4l, th, tl):
    hdth, hdtl = dth * 0.5, dtl * 0.5
    dt6h, dt6l = dd_div(dth, dtl, 6.0, 0.0)
    _rhs_dd(sh, sl, ph, pl, sys_id, k1h, k1l)
    for j in range(3):
        ah, al = dd_mul(hdth, hdtl, k1h[j], k1l[j])
        th[j], tl[j] = dd_add(sh[j], sl[j], ah, al)
    _rhs_dd(th, tl, ph, pl, sys_id, k2h, k2l)
    for j in range(3):
        ah, al = dd_mul(hdth, hdtl, k2h[j], k2l[j])
        th[j], tl[j] = dd_add(sh[j], sl[j], ah, al)
    _rhs_dd(th, tl, ph, pl, sys_id, k3h, k3l)
    for j in range(3):
        ah, al = dd_mul(dth, dtl, k3h[j], k3l[j])
        th[j], tl[j] = dd_add(sh[j], sl[j], ah, al)
    _rhs_dd(th, tl, ph, pl, sys_id, k4h, k4l)
    for j in range(3):
        ah, al = dd_add(k2h[j], k2l[j], k3h[j], k3l[j])
        ah, al = dd_add(ah, al, ah, al)
        ah, al = dd_add(ah, al, k1h[j], k1l[j])
        ah, al = dd_add(ah, al, k4h[j], k4l[j])
        ah, al = dd_mul(dt6h, dt6l, ah, al)
        sh[j], sl[j] = dd_add(sh[j], sl[j], ah, al)


@numba.njit(cache=True)
def rk4_path_dd(ic_h, ic_l, n, dt_h, dt_l, ph, pl, sys_id, out_h, out_l):
    """Double-double RK4 path; hi/lo words stored separately.

    Returns -1 on success, else the index of the first non-finite point.
    """
    sh = ic_h.astype(np.float64)
    sl = ic_l.astype(np.float64)
    k1h = np.empty(3); k1l = np.empty(3)
    k2h = np.empty(3); k2l = np.empty(3)
    k3h = np.empty(3); k3l = np.empty(3)
    k4h = np.empty(3); k4l = np.empty(3)
    th = np.empty(3); tl = np.empty(3)
    for j in range(3):
        out_h[0, j] = sh[j]
        out_l[0, j] = sl[j]
    for i in range(n):
        _rk4_advance_dd(sh, sl, dt_h, dt_l, ph, pl, sys_id,
                        k1h, k1l, k2h, k2l, k3h, k3l, k4h, k4l, th, tl)
        ok = True
        for j in range(3):
            out_h[i + 1, j] = sh[j]
            out_l[i + 1, j] = sl[j]
            if not np.isfinite(sh[j]):
                ok = False
        if not ok:
            return i + 1
    return -1


@numba.njit(cache=True)
def rk4_steps_from_points_dd(pts, dt_h, dt_l, ph, pl, sys_id, out):
    """One double-double RK4 step from each row of pts (taken as exact)."""
    sh = np.empty(3); sl = np.empty(3)
    k1h = np.empty(3); k1l = np.empty(3)
    k2h = np.empty(3); k2l = np.empty(3)
    k3h = np.empty(3); k3l = np.empty(3)
    k4h = np.empty(3); k4l = np.empty(3)
    th = np.empty(3); tl = np.empty(3)
    for i in range(pts.shape[0]):
        for j in range(3):
            sh[j] = pts[i, j]
            sl[j] = 0.0
        _rk4_advance_dd(sh, sl, dt_h, dt_l, ph, pl, sys_id,
                        k1h, k1l, k2h, k2l, k3h, k3l, k4h, k4l, th, tl)
        for j in range(3):
            out[i, j] = sh[j] + sl[j]


@numba.njit(cache=True, inline="always")
def _jacobian(x, y, z, p0, p1, p2, sys_id, one, J):
    zero = one - one
    if sys_id == LORENZ:
        J[0, 0] = -p0; J[0, 1] = p0;      J[0, 2] = zero
        J[1, 0] = p1 - z; J[1, 1] = -one; J[1, 2] = -x
        J[2, 0] = y;   J[2, 1] = x;       J[2, 2] = -p2
    else:
        J[0, 0] = zero; J[0, 1] = -one; J[0, 2] = -one
        J[1, 0] = one;  J[1, 1] = p0;   J[1, 2] = zero
        J[2, 0] = z;    J[2, 1] = zero; J[2, 2] = x - p2


@numba.njit(cache=True)
def lyapunov_benettin(ic, n_steps, dt, params, sys_id, transient, qr_every,
                      Q, J, M1, M2, M3, M4, T):
    """Benettin tangent-space method along an RK4 trajectory.

    Q (3,3, dtype of ic) holds the tangent vectors as columns and must be
    passed in as the identity; J/M1..M4/T are (3,3) work arrays of the same
    dtype.  Tangent vectors follow the variational RK4 (Jacobian evaluated
    at the RK4 stage states); modified Gram-Schmidt every qr_every steps.
    Log norms accumulate in float64.  Returns (l1, l2, l3, elapsed_time).
    """
    one = dt / dt
    half = one / (one + one)
    sixth = half / (one + one + one)
    hdt = dt * half
    dt6 = dt * sixth
    x, y, z = ic[0], ic[1], ic[2]
    p0, p1, p2 = params[0], params[1], params[2]
    logsum = np.zeros(3)
    t_acc = 0.0
    for step in range(transient + n_steps):
        # state stages (also used as Jacobian evaluation points)
        k1x, k1y, k1z = _rhs(x, y, z, p0, p1, p2, sys_id)
        x2, y2, z2 = x + hdt * k1x, y + hdt * k1y, z + hdt * k1z
        k2x, k2y, k2z = _rhs(x2, y2, z2, p0, p1, p2, sys_id)
        x3, y3, z3 = x + hdt * k2x, y + hdt * k2y, z + hdt * k2z
        k3x, k3y, k3z = _rhs(x3, y3, z3, p0, p1, p2, sys_id)
        x4, y4, z4 = x + dt * k3x, y + dt * k3y, z + dt * k3z
        k4x, k4y, k4z = _rhs(x4, y4, z4, p0, p1, p2, sys_id)

        # tangent stages: M1 = J1 Q, M2 = J2 (Q + hdt M1), ...
        _jacobian(x, y, z, p0, p1, p2, sys_id, one, J)
        for i in range(3):
            for j in range(3):
                M1[i, j] = J[i, 0] * Q[0, j] + J[i, 1] * Q[1, j] + J[i, 2] * Q[2, j]
        _jacobian(x2, y2, z2, p0, p1, p2, sys_id, one, J)
        for i in range(3):
            for j in range(3):
                T[i, j] = Q[i, j] + hdt * M1[i, j]
        for i in range(3):
            for j in range(3):
                M2[i, j] = J[i, 0] * T[0, j] + J[i, 1] * T[1, j] + J[i, 2] * T[2, j]
        _jacobian(x3, y3, z3, p0, p1, p2, sys_id, one, J)
        for i in range(3):
            for j in range(3):
                T[i, j] = Q[i, j] + hdt * M2[i, j]
        for i in range(3):
            for j in range(3):
                M3[i, j] = J[i, 0] * T[0, j] + J[i, 1] * T[1, j] + J[i, 2] * T[2, j]
        _jacobian(x4, y4, z4, p0, p1, p2, sys_id, one, J)
        for i in range(3):
            for j in range(3):
                T[i, j] = Q[i, j] + dt * M3[i, j]
        for i in range(3):
            for j in range(3):
                M4[i, j] = J[i, 0] * T[0, j] + J[i, 1] * T[1, j] + J[i, 2] * T[2, j]
        for i in range(3):
            for j in range(3):
                acc = M1[i, j] + (M2[i, j] + M2[i, j]) \
                    + (M3[i, j] + M3[i, j]) + M4[i, j]
                Q[i, j] = Q[i, j] + dt6 * acc

        x = x + dt6 * (k1x + (k2x + k2x) + (k3x + k3x) + k4x)
        y = y + dt6 * (k1y + (k2y + k2y) + (k3y + k3y) + k4y)
        z = z + dt6 * (k1z + (k2z + k2z) + (k3z + k3z) + k4z)

        if (step + 1) % qr_every == 0:
            # modified Gram-Schmidt on the columns of Q
            for j in range(3):
                for i in range(j):
                    r = Q[0, i] * Q[0, j] + Q[1, i] * Q[1, j] + Q[2, i] * Q[2, j]
                    Q[0, j] -= r * Q[0, i]
                    Q[1, j] -= r * Q[1, i]
                    Q[2, j] -= r * Q[2, i]
                nrm = np.sqrt(Q[0, j] * Q[0, j] + Q[1, j] * Q[1, j]
                              + Q[2, j] * Q[2, j])
                Q[0, j] /= nrm
                Q[1, j] /= nrm
                Q[2, j] /= nrm
                if step >= transient:
                    logsum[j] += np.log(np.float64(nrm))
        if step >= transient:
            t_acc += np.float64(dt)
    return logsum[0] / t_acc, logsum[1] / t_acc, logsum[2] / t_acc, t_acc
