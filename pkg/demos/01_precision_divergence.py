#!/usr/bin/env python3
"""
How floating-point precision limits chaotic forecasting
========================================================

The Lorenz flow amplifies any perturbation at its leading Lyapunov rate,
including the rounding error of the arithmetic itself.  This demo
integrates the same initial condition in single, double, and extended
(double-double) precision and watches the lower-precision trajectories
peel away from the extended reference.

Because roundoff enters at ~1e-7 (single) vs ~1e-16 (double), and error
grows like exp(lambda_1 t), the single-precision run buys roughly half
the shadowing time of the double run — not half the digits' worth of
nothing, just a logarithmic penalty.  That asymmetry is the whole story
behind "which precision should my forecaster use?"
"""

import numpy as np

from chaosbench import (DOUBLE, EXTENDED, SINGLE, Trajectory,
                        divergence_series, integrate, tau_lim)

# settle onto the attractor first: off-attractor transients have their
# own (larger) growth rates and would muddy the comparison
ic = integrate([0.0, 0.45, 1.41], 1000, 0.02, prec=DOUBLE).points[-1]

n = 3000
ref = integrate(ic, n, 0.02, prec=EXTENDED)
ref_traj = Trajectory("lorenz", 0.02, ref.points, EXTENDED,
                      points_lo=ref.points_lo)

print("separation from the extended-precision reference (dt = 0.02):\n")
for prec in (SINGLE, DOUBLE):
    tr = integrate(ic, n, 0.02, prec=prec)
    t, d = divergence_series(tr, ref_traj)
    tau = tau_lim(tr, ref_traj)
    print(f"  {str(prec):8s} tau_lim = {tau:6.2f} time units "
          f"({tau / 0.906:.1f} Lyapunov times)")
    # a coarse log-distance profile; plot d against t for the full curve
    for frac in (0.1, 0.3, 0.5, 0.7):
        k = int(frac * n)
        print(f"{'':12s} t = {t[k]:5.1f}  |x - x_ref| = {d[k]:.3e}")

print("\nThe single-precision trajectory departs at roughly half the "
      "double-precision separation time: the horizon grows only "
      "logarithmically with precision.")
