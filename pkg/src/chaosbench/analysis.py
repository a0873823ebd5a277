"""Accuracy metrics for forecasters of chaotic flows.

Covers the short-term departure horizon tau_lim, the z-maxima return map
with its piecewise degree-10 fit and mean relative error xi, Lyapunov
spectra (tangent-space method along the ODE and along closed-loop network
maps), and the long-time one-step consistency error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dynamics import (SYSTEM_IDS, Trajectory, default_params,
                       IntegrationDivergedError, _scalar_at)
from .precision import DOUBLE, EXTENDED, Precision


def attractor_scale(traj):
    """RMS Euclidean norm of the points; the normalization behind tau_lim."""
    pts = traj.as_double()
    return float(np.sqrt(np.mean(np.einsum("ij,ij->i", pts, pts))))


def tau_lim(pred, ref, threshold=0.05):
    """First time the prediction departs from the reference by > threshold.

    Departure is the Euclidean distance normalized by the RMS norm of the
    reference over its full length (a 5% departure of a near-origin point
    would otherwise be ill-defined).  Returns the horizon end if the
    threshold is never exceeded.
    """
    if len(pred) == 0 or len(ref) == 0:
        raise ValueError("empty trajectory")
    if not math.isclose(float(pred.dt), float(ref.dt), rel_tol=1e-9):
        raise ValueError("trajectories have different dt")
    n = min(len(pred), len(ref))
    d = np.linalg.norm(pred.as_double()[:n] - ref.as_double()[:n], axis=1)
    limit = threshold * attractor_scale(ref)
    over = np.nonzero(d > limit)[0]
    dt = float(ref.dt)
    return float(over[0] * dt) if over.size else float((n - 1) * dt)


def extract_maxima(traj):
    """Parabolic-interpolated values of the local maxima of z(t)."""
    z = traj.as_double()[:, 2]
    if z.size < 3:
        raise ValueError("need at least 3 samples")
    zm, z0, zp = z[:-2], z[1:-1], z[2:]
    mask = (z0 > zm) & (z0 >= zp)
    a, b, c = zm[mask], z0[mask], zp[mask]
    denom = a + c - 2.0 * b
    peaks = b.copy()
    ok = denom != 0.0
    peaks[ok] = b[ok] - (c[ok] - a[ok]) ** 2 / (8.0 * denom[ok])
    return peaks


@dataclass
class ReturnMap:
    """Consecutive z-maxima pairs (Z_i, Z_{i+1})."""

    pairs: np.ndarray

    @classmethod
    def from_trajectory(cls, traj):
        zs = extract_maxima(traj)
        return cls.from_maxima(zs)

    @classmethod
    def from_maxima(cls, zs):
        zs = np.asarray(zs, dtype=np.float64)
        if zs.size < 2:
            return cls(np.empty((0, 2)))
        return cls(np.column_stack([zs[:-1], zs[1:]]))

    def __len__(self):
        return self.pairs.shape[0]


@dataclass
class ReturnMapFit:
    """Piecewise polynomial fit of a return map around its cusp.

    Each branch carries its own fit window [lo, hi]; the polynomials are
    Chebyshev-domain-scaled (numpy Polynomial.fit) and must only be
    evaluated inside their window.
    """

    cusp: float
    left: np.polynomial.Polynomial
    right: np.polynomial.Polynomial
    window_left: tuple
    window_right: tuple

    def evaluate(self, z):
        """Evaluate the branch fit; NaN for points outside both windows."""
        z = np.asarray(z, dtype=np.float64)
        out = np.full(z.shape, np.nan)
        in_l = (z >= self.window_left[0]) & (z <= self.window_left[1])
        in_r = (z >= self.window_right[0]) & (z <= self.window_right[1])
        out[in_l] = self.left(z[in_l])
        out[in_r] = self.right(z[in_r])
        return out


def fit_return_map(rm, degree=10, cusp_exclusion=0.01, min_pairs=200,
                   min_branch=50):
    """Locate the cusp rather robustly and fit one polynomial per branch.

    The cusp Z* is the abscissa maximizing a moving median of Z_{i+1} over
    the Z_i-sorted pairs; points with Z_i within cusp_exclusion*Z* of Z*
    are discarded; each remaining branch gets a least-squares fit of the
    given degree on a centered/scaled abscissa.
    """
    pairs = rm.pairs
    if len(pairs) < min_pairs:
        raise ValueError(f"need >= {min_pairs} pairs, got {len(pairs)}")
    order = np.argsort(pairs[:, 0])
    zi = pairs[order, 0]
    zn = pairs[order, 1]
    w = min(101, max(5, len(zi) // 100) | 1)
    # moving median of successors over the sorted abscissa
    med = np.array([np.median(zn[max(0, k - w // 2):k + w // 2 + 1])
                    for k in range(len(zn))])
    cusp = float(zi[np.argmax(med)])
    band = cusp_exclusion * abs(cusp)
    left = (zi < cusp - band)
    right = (zi > cusp + band)
    if left.sum() < min_branch or right.sum() < min_branch:
        raise ValueError("insufficient points on a return-map branch")
    fit_l = np.polynomial.Polynomial.fit(zi[left], zn[left], degree)
    fit_r = np.polynomial.Polynomial.fit(zi[right], zn[right], degree)
    return ReturnMapFit(
        cusp=cusp, left=fit_l, right=fit_r,
        window_left=(float(zi[left].min()), float(zi[left].max())),
        window_right=(float(zi[right].min()), float(zi[right].max())))


def return_map_error(rm, fit):
    """Mean relative distance xi between the pairs and the branch fits."""
    zi = rm.pairs[:, 0]
    zn = rm.pairs[:, 1]
    pred = fit.evaluate(zi)
    ok = ~np.isnan(pred)
    if not ok.any():
        raise ValueError("no return-map pairs inside the fit windows")
    return float(np.mean(np.abs(pred[ok] - zn[ok]) / np.abs(zn[ok])))


@dataclass
class LyapunovSpectrum:
    lambdas: tuple
    n_steps: int
    method: str

    def __iter__(self):
        return iter(self.lambdas)


def lyapunov_ode(system, params=None, dt=0.01, n_steps=200_000,
                 prec=DOUBLE, ic=(1.0, 1.0, 1.0), transient=1000,
                 qr_every=1):
    """Lyapunov spectrum of the flow: tangent vectors co-integrated with RK4
    under the analytic Jacobian, re-orthonormalized (Gram-Schmidt) every
    qr_every steps, log norms accumulated after the transient.
    """
    if prec is EXTENDED:
        raise ValueError("extended-precision exponent estimation is not "
                         "supported (reference values come from double)")
    sys_id = SYSTEM_IDS[system]
    if params is None:
        params = default_params(system, prec)
    dtype = prec.dtype
    dt_s = dtype(_scalar_at(dt, prec))
    p_arr = np.array([dtype(v) for v in params.values], dtype=dtype)
    ic_arr = np.asarray(ic, dtype=dtype)
    Q = np.eye(3, dtype=dtype)
    work = [np.empty((3, 3), dtype=dtype) for _ in range(6)]
    l1, l2, l3, _ = kernels.lyapunov_benettin(
        ic_arr, int(n_steps), dt_s, p_arr, sys_id, int(transient),
        int(qr_every), Q, *work)
    if not all(math.isfinite(v) for v in (l1, l2, l3)):
        raise IntegrationDivergedError(-1)
    lams = tuple(sorted((float(l1), float(l2), float(l3)), reverse=True))
    return LyapunovSpectrum(lams, int(n_steps), "ode-tangent")


def lyapunov_ode_reference(rhs, jac, ic, dt, n_steps, transient=1000):
    """Plain-numpy tangent-space estimator for an arbitrary vector field.

    Independent of the compiled kernel (oracle route); float64 only.
    """
    s = np.asarray(ic, dtype=np.float64)
    Q = np.eye(3)
    logsum = np.zeros(3)
    count = 0
    h = float(dt)
    for step in range(transient + n_steps):
        k1 = rhs(s)
        s2 = s + 0.5 * h * k1
        k2 = rhs(s2)
        s3 = s + 0.5 * h * k2
        k3 = rhs(s3)
        s4 = s + h * k3
        k4 = rhs(s4)
        m1 = jac(s) @ Q
        m2 = jac(s2) @ (Q + 0.5 * h * m1)
        m3 = jac(s3) @ (Q + 0.5 * h * m2)
        m4 = jac(s4) @ (Q + h * m3)
        Q = Q + (h / 6.0) * (m1 + 2.0 * m2 + 2.0 * m3 + m4)
        s = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Q, R = np.linalg.qr(Q)
        if step >= transient:
            logsum += np.log(np.abs(np.diag(R)))
            count += 1
    lams = tuple(sorted(logsum / (count * h), reverse=True))
    return LyapunovSpectrum(lams, n_steps, "ode-tangent")


def lyapunov_map(state0, step_fn, dt, n_steps, jvp=None, n_exp=3,
                 transient=100, fd_eps=1e-6):
    """Lyapunov spectrum of a discrete map via tangent-vector evolution.

    step_fn maps the full internal state vector to its successor; jvp, if
    given, computes J(state) @ V for a (D, n_exp) tangent block, otherwise
    central finite differences with step fd_eps * max(1, |state|) are used.
    Exponents are per unit time (log growth per step divided by dt).
    """
    s = np.asarray(state0, dtype=np.float64).copy()
    D = s.size
    Q = np.zeros((D, n_exp))
    for j in range(n_exp):
        Q[j, j] = 1.0
    logsum = np.zeros(n_exp)
    count = 0
    for step in range(transient + n_steps):
        if jvp is not None:
            V = jvp(s, Q)
        else:
            eps = fd_eps * max(1.0, float(np.linalg.norm(s)))
            V = np.empty_like(Q)
            for j in range(n_exp):
                V[:, j] = (step_fn(s + eps * Q[:, j])
                           - step_fn(s - eps * Q[:, j])) / (2.0 * eps)
        s = step_fn(s)
        if not np.all(np.isfinite(s)):
            raise IntegrationDivergedError(step)
        Q, R = np.linalg.qr(V)
        if step >= transient:
            logsum += np.log(np.abs(np.diag(R)))
            count += 1
    lams = tuple(sorted(logsum / (count * float(dt)), reverse=True))
    return LyapunovSpectrum(lams, n_steps, "network-jacobian")


def lyapunov_network(model, warm, n_steps, transient=100):
    """Lyapunov spectrum of a trained forecaster run in closed loop.

    The model exposes its closed-loop dynamics through closed_loop_state /
    closed_loop_step and optionally closed_loop_jvp (analytic Jacobian);
    without the latter, finite differences are used.
    """
    state = model.closed_loop_state(warm)
    jvp = getattr(model, "closed_loop_jvp", None)
    return lyapunov_map(state, model.closed_loop_step, float(warm.dt),
                        n_steps, jvp=jvp, transient=transient)


def one_step_error(pred, start_index=25000, n=10000, params=None):
    """Long-time local consistency of a closed-loop prediction.

    For each t in the window, the prediction at t+1 is compared with one
    extended-precision RK4 step taken from the prediction's own point at t.
    Returns (mean, std) of the Euclidean errors.
    """
    if len(pred) < start_index + n + 1:
        raise ValueError(
            f"need {start_index + n + 1} predicted points, got {len(pred)}")
    pts = pred.as_double()
    if params is None:
        params = default_params(pred.system, EXTENDED)
    sys_id = SYSTEM_IDS[pred.system]
    dt_dd = _scalar_at(pred.dt, EXTENDED)
    ph = np.array([_scalar_at(v, EXTENDED).hi for v in params.values])
    pl = np.array([_scalar_at(v, EXTENDED).lo for v in params.values])
    base = pts[start_index:start_index + n]
    ref_next = np.empty_like(base)
    kernels.rk4_steps_from_points_dd(base, dt_dd.hi, dt_dd.lo, ph, pl,
                                     sys_id, ref_next)
    err = np.linalg.norm(pts[start_index + 1:start_index + n + 1] - ref_next,
                         axis=1)
    if not np.all(np.isfinite(err)):
        raise IntegrationDivergedError(start_index)
    return float(err.mean()), float(err.std())
