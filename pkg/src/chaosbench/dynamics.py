"""Lorenz / Rossler vector fields, precision-parameterized RK4, trajectories.

States are length-3 sequences of scalars: numpy arrays for single/double,
lists of :class:`~chaosbench.ddouble.DDouble` for extended.  The precision
of a state is carried by its element type, so all arithmetic here is
automatically rounded at the working precision.

The Lorenz ydot includes the -y term and the Rossler xdot is -y - z (the
standard forms); with sigma=10, rho=28, beta=8/3 the Jacobian trace is
-(sigma+1+beta) everywhere, consistent with the known Lyapunov sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .ddouble import DDouble
from .precision import (DOUBLE, EXTENDED, SINGLE, Precision, cast,
                        format_scalar, parse_scalar)

SYSTEM_IDS = {"lorenz": kernels.LORENZ, "rossler": kernels.ROSSLER}


class IntegrationDivergedError(RuntimeError):
    """Raised when an integration step produces a non-finite value."""

    def __init__(self, step):
        super().__init__(f"integration diverged at step {step}")
        self.step = step


def _scalar_at(value, prec):
    """Interpret a parameter value at a precision.

    Strings and exact rationals are rounded directly to the target; plain
    floats are re-read through their shortest decimal representation, so
    e.g. 0.2 means the decimal 0.2 at every precision (not the binary64
    rounding of it).
    """
    if isinstance(value, DDouble):
        return cast(value, prec)
    if isinstance(value, str):
        return parse_scalar(value, prec)
    if isinstance(value, (int, np.integer)):
        return cast(float(value), prec)
    return parse_scalar(repr(float(value)), prec)


@dataclass(frozen=True)
class LorenzParams:
    sigma: object
    rho: object
    beta: object

    @classmethod
    def default(cls, prec=DOUBLE):
        # beta = 8/3 as a rational rounded once to the working precision
        if prec is EXTENDED:
            beta = DDouble(8.0) / DDouble(3.0)
        else:
            beta = prec.dtype(8) / prec.dtype(3)
        return cls(_scalar_at(10, prec), _scalar_at(28, prec), beta)

    @property
    def values(self):
        return (self.sigma, self.rho, self.beta)


@dataclass(frozen=True)
class RosslerParams:
    a: object
    b: object
    c: object

    @classmethod
    def default(cls, prec=DOUBLE):
        return cls(_scalar_at("0.2", prec), _scalar_at("0.2", prec),
                   _scalar_at("5.7", prec))

    @property
    def values(self):
        return (self.a, self.b, self.c)


def default_params(system, prec=DOUBLE):
    if system == "lorenz":
        return LorenzParams.default(prec)
    if system == "rossler":
        return RosslerParams.default(prec)
    raise ValueError(f"unknown system {system!r}")


def _pack_like(s, comps):
    if isinstance(s, np.ndarray) and s.dtype != object:
        return np.array(comps, dtype=s.dtype)
    return list(comps)


def lorenz_rhs(s, p):
    """(sigma(y-x), x(rho-z) - y, xy - beta z)."""
    x, y, z = s[0], s[1], s[2]
    return _pack_like(s, (p.sigma * (y - x),
                          x * (p.rho - z) - y,
                          x * y - p.beta * z))


def rossler_rhs(s, p):
    """(-y-z, x + ay, b + z(x-c))."""
    x, y, z = s[0], s[1], s[2]
    return _pack_like(s, (-y - z,
                          x + p.a * y,
                          p.b + z * (x - p.c)))


def lorenz_jacobian(s, p):
    x, y, z = float(s[0]), float(s[1]), float(s[2])
    sg, rho, beta = (float(v) for v in p.values)
    return np.array([[-sg, sg, 0.0],
                     [rho - z, -1.0, -x],
                     [y, x, -beta]])


def rossler_jacobian(s, p):
    x, y, z = float(s[0]), float(s[1]), float(s[2])
    a, b, c = (float(v) for v in p.values)
    return np.array([[0.0, -1.0, -1.0],
                     [1.0, a, 0.0],
                     [z, 0.0, x - c]])


def rk4_step(s, dt, rhs, step_index=0):
    """One classical RK4 step with every stage rounded at the precision of s.

    Works for any element type with arithmetic operators (float32/float64
    numpy scalars, DDouble).  dt must already be at the working precision.
    """
    k1 = rhs(s)
    s2 = _pack_like(s, tuple(s[i] + 0.5 * dt * k1[i] for i in range(3)))
    k2 = rhs(s2)
    s3 = _pack_like(s, tuple(s[i] + 0.5 * dt * k2[i] for i in range(3)))
    k3 = rhs(s3)
    s4 = _pack_like(s, tuple(s[i] + dt * k3[i] for i in range(3)))
    k4 = rhs(s4)
    out = _pack_like(
        s, tuple(s[i] + (dt / 6) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i])
                 for i in range(3)))
    for v in out:
        if not math.isfinite(float(v)):
            raise IntegrationDivergedError(step_index)
    return out


@dataclass
class Trajectory:
    """Uniformly sampled time series of 3-vectors at one precision.

    points holds float32/float64 rows; for extended trajectories it holds
    the hi words and points_lo the matching lo words.
    """

    system: str
    dt: float
    points: np.ndarray
    prec: Precision
    seed: object = None
    points_lo: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.points = np.atleast_2d(self.points)
        if self.points.shape[1] != 3:
            raise ValueError("trajectory points must be (n, 3)")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def __len__(self):
        return self.points.shape[0]

    @property
    def times(self):
        return np.arange(len(self)) * float(self.dt)

    def as_double(self):
        """Points as float64 (hi + lo for extended)."""
        pts = self.points.astype(np.float64)
        if self.prec is EXTENDED and self.points_lo is not None:
            pts = pts + self.points_lo
        return pts

    def cast(self, prec):
        """Round every point to another precision (new Trajectory)."""
        if prec is self.prec:
            return self
        if prec is EXTENDED:
            raise ValueError("cannot upcast a trajectory to extended")
        return Trajectory(self.system, self.dt,
                          self.as_double().astype(prec.dtype), prec,
                          seed=self.seed)


def integrate(ic, n, dt, system="lorenz", params=None, prec=DOUBLE,
              seed=None):
    """RK4 trajectory of n+1 points starting at ic, all arithmetic at prec.

    dt given as a float/str is interpreted as its decimal value rounded once
    to prec.  ic components are taken as exact binary64 values.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if system not in SYSTEM_IDS:
        raise ValueError(f"unknown system {system!r}")
    sys_id = SYSTEM_IDS[system]
    if params is None:
        params = default_params(system, prec)
    dt_s = _scalar_at(dt, prec)
    # the trajectory records the nominal decimal step; stepping itself uses
    # dt rounded to prec (part of the precision effect under study)
    dt_f = float(dt)

    if prec is EXTENDED:
        ph = np.array([v.hi for v in params.values])
        pl = np.array([v.lo for v in params.values])
        ic_h = np.asarray(ic, dtype=np.float64)
        ic_l = np.zeros(3)
        out_h = np.empty((n + 1, 3))
        out_l = np.empty((n + 1, 3))
        bad = kernels.rk4_path_dd(ic_h, ic_l, n, dt_s.hi, dt_s.lo,
                                  ph, pl, sys_id, out_h, out_l)
        if bad >= 0:
            raise IntegrationDivergedError(bad)
        return Trajectory(system, dt_f, out_h, prec, seed=seed,
                          points_lo=out_l)

    dtype = prec.dtype
    p_arr = np.array([dtype(v) for v in params.values], dtype=dtype)
    ic_arr = np.asarray(ic, dtype=dtype)
    out = np.empty((n + 1, 3), dtype=dtype)
    bad = kernels.rk4_path(ic_arr, n, dtype(dt_s), p_arr, sys_id, out)
    if bad >= 0:
        raise IntegrationDivergedError(bad)
    return Trajectory(system, dt_f, out, prec, seed=seed)


def integrate_generic(ic, n, dt, rhs, prec=DOUBLE):
    """Reference integrator: plain-Python RK4 over an arbitrary vector field.

    Independent of the compiled kernels; used as an oracle in tests and for
    custom systems.  Returns the list of states (length n+1).
    """
    dt_s = _scalar_at(dt, prec)
    if prec is EXTENDED:
        s = [DDouble(float(c)) for c in ic]
    else:
        s = np.asarray(ic, dtype=prec.dtype)
    path = [s]
    for i in range(n):
        s = rk4_step(s, dt_s, rhs, step_index=i + 1)
        path.append(s)
    return path


def divergence_series(a, b):
    """Per-step Euclidean distance between two same-grid trajectories.

    Distances are accumulated in double regardless of the trajectory
    precisions, so metric noise cannot mask the effect under study.
    Returns (times, distances).
    """
    if len(a) != len(b):
        raise ValueError(f"length mismatch: {len(a)} vs {len(b)}")
    if not math.isclose(float(a.dt), float(b.dt), rel_tol=1e-12):
        raise ValueError("trajectories have different dt")
    diff = a.as_double() - b.as_double()
    return a.times, np.sqrt(np.einsum("ij,ij->i", diff, diff))


# ---------------------------------------------------------------------------
# trajectory files: one-line header "system dt n precision seed", then one
# "x y z" row per point in shortest round-trip decimals.  A CSV variant
# (comma-separated, optional x,y,z column header) is accepted on ingestion.

def save_trajectory(traj, path):
    seed_s = "-" if traj.seed is None else str(traj.seed)
    lines = [f"{traj.system} {traj.dt!r} {len(traj)} {traj.prec} {seed_s}"]
    if traj.prec is EXTENDED:
        lo = traj.points_lo if traj.points_lo is not None \
            else np.zeros_like(traj.points)
        for (xh, yh, zh), (xl, yl, zl) in zip(traj.points, lo):
            lines.append(" ".join(DDouble(h, l).to_decimal_string()
                                  for h, l in ((xh, xl), (yh, yl), (zh, zl))))
    elif traj.prec is SINGLE:
        for row in traj.points:
            lines.append(" ".join(np.format_float_scientific(v, unique=True)
                                  for v in row))
    else:
        for row in traj.points:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_trajectory(path):
    with open(path) as fh:
        header = fh.readline().strip()
        sep = "," if "," in header else None
        fields = [f.strip() for f in header.split(sep)]
        if len(fields) != 5:
            raise ValueError(f"bad trajectory header: {header!r}")
        system, dt_s, n_s, prec_s, seed_s = fields
        prec = Precision.parse(prec_s)
        n = int(n_s)
        seed = None if seed_s == "-" else int(seed_s)
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(sep)]
            if parts[0].lstrip("+-").replace(".", "", 1)[:1].isdigit():
                rows.append(parts)
            # else: CSV column-header row, skip
    if len(rows) != n:
        raise ValueError(f"expected {n} points, found {len(rows)}")
    if prec is EXTENDED:
        hi = np.empty((n, 3))
        lo = np.empty((n, 3))
        for i, parts in enumerate(rows):
            for j in range(3):
                v = DDouble.from_string(parts[j])
                hi[i, j], lo[i, j] = v.hi, v.lo
        return Trajectory(system, float(dt_s), hi, prec, seed=seed,
                          points_lo=lo)
    pts = np.array(rows, dtype=np.float64)
    if prec is SINGLE:
        pts = np.array(rows, dtype=np.float32)
    return Trajectory(system, float(dt_s), pts, prec, seed=seed)
