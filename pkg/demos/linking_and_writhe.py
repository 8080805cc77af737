"""
Linking, writhe and twist of a trefoil
======================================

Builds the (2,3) torus knot, measures its writhe, frames it two ways and
checks that linking = twist + writhe for each framing.
"""

import numpy as np

from knotflux.curves import (
    arclength_resample, closed_parallel_frame, make_circle, make_torus_knot, zero_linking_frame,
)
from knotflux.magnetics import cwf_check, linking_number, writhe

# %%
# A trefoil wound on a torus of radii 4 and 1, sampled at 512 arclength nodes
knot = arclength_resample(make_torus_knot(2, 3, 4.0, 1.0), 512)
print(f"length {knot.length:.12f}")
print(f"writhe {writhe(knot):.12f}")

# %%
# The core circle of the torus links the knot three times
core = arclength_resample(make_circle(4.0), 1024)
res = linking_number(arclength_resample(knot.loop, 1024), core)
print(f"link with core {res.value} (raw {res.raw:.3e} off by {res.residual:.1e})")

# %%
# Zero-linking frame: the pushoff does not link, all torsion balances the writhe
for name, frame in (("zero", zero_linking_frame(knot)), ("parallel", closed_parallel_frame(knot))):
    chk = cwf_check(knot, frame)
    print(f"{name:9s} link {chk['link']:+d}  twist {chk['twist']:+.9f}  "
          f"writhe {chk['writhe']:+.9f}  residual {chk['residual']:.1e}")

# %%
# Torsion of the zero frame integrates to -2 pi Wr
frame = zero_linking_frame(knot)
print(f"int tau + 2 pi Wr = {frame.total_torsion + 2 * np.pi * writhe(knot):.2e}")
