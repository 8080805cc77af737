"""
Adapted cables over a writhe-tuned base
=======================================

Tunes a base curve to writhe 3/2, wraps a (2,3) cable around it at several
radii and compares the cable writhe with 4 * 3/2 = 6.
"""

import numpy as np

from knotflux.cables import build_adapted_cable, fit_writhe_remainder
from knotflux.curves import reach_estimate, tune_writhe, zero_linking_frame
from knotflux.magnetics import linking_number, writhe

N, M = 2, 3

# %%
# Base curve with writhe M/N and its zero-linking frame
base = tune_writhe(M / N)
frame = zero_linking_frame(base)
wr0 = writhe(base)
reach = reach_estimate(base)
print(f"base writhe {wr0:.10f}, reach {reach:.4f}")

# %%
# Cables at radii spanning a decade inside the tube
etas = reach * np.geomspace(1 / 50, 1 / 5, 4)
values = []
for eta in etas:
    cab = build_adapted_cable(base, frame, N, M, eta, base_writhe=wr0, reach=reach)
    values.append(writhe(cab.curve))
    print(f"eta {eta:.4f}  length error {cab.checks['length_error']:.1e}  "
          f"tangent cross {cab.checks['tangent_cross']:.1e}  writhe {values[-1]:.10f}")

# %%
# The cable writhe sits on N^2 Wr(base) at every radius
fit = fit_writhe_remainder(etas, values, N * N * wr0)
print(f"offset error {fit['offset_error']:.1e}")
print("remainders", ", ".join(f"{r:.1e}" for r in fit["remainder"]))

# %%
# The last cable links its base M times
print("link with base", linking_number(base, cab.curve).value)
