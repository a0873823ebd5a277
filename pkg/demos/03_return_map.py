#!/usr/bin/env python3
"""
The Lorenz return map as a fidelity yardstick
=============================================

Successive maxima of the Lorenz z coordinate fall on a nearly
one-dimensional cusp-shaped curve: plotting each maximum Z_{i+1} against
its predecessor Z_i collapses the whole attractor onto a map.  Any
trajectory that claims to live on the attractor — an integration at some
precision, or a network's closed-loop forecast — should reproduce this
curve.

The error measure xi is the mean relative distance of the (Z_i, Z_{i+1})
pairs from a polynomial fit of the two branches (the cusp point itself
is excluded; no polynomial can follow it).  For faithful trajectories xi
sits well below 0.2%.
"""

from chaosbench import (DOUBLE, SINGLE, ReturnMap, fit_return_map,
                        integrate, return_map_error)

for prec in (SINGLE, DOUBLE):
    tr = integrate([0.0, 0.45, 1.41], 500_000, 0.02, prec=prec)
    rm = ReturnMap.from_trajectory(tr)
    fit = fit_return_map(rm)
    xi = return_map_error(rm, fit)
    print(f"{str(prec):8s} {len(rm):6d} maxima pairs, cusp at "
          f"z = {fit.cusp:.3f}, xi = {xi:.2e}")

print("\nBoth precisions shadow the attractor: roundoff kicks the "
      "trajectory to a *different* orbit, but that orbit stays on the "
      "same invariant set, so the return map is insensitive to "
      "precision even when individual trajectories diverge in seconds.")
print("Write the scatter data for plotting with:  chaosbench report "
      "--rows <sweep>/rows.csv --out <dir> --returnmap <trajectory.txt>")
