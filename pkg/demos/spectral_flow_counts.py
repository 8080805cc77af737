"""
Spectral flow bookkeeping for cable towers
==========================================

Counts critical points on the effective flux torus in exact arithmetic and
assembles the spectral flow of cable classes.
"""

import math

from knotflux.specflow import (
    CablePair, CriticalEigSet, comb_identity, critical_eigenvalues, d_count, delta_nm,
    homotopy_crossings, intermediate_sf, parse_tower, sf_realization, sf_tower,
)

# %%
# delta, D and the crossing counts for a few pairs
for N, M in ((3, 2), (5, 3), (2, 3), (7, 2)):
    pair = CablePair(N, M)
    print(f"(N,M)=({N},{M})  delta={delta_nm(pair)}  D={d_count(pair)}  "
          f"crossings={homotopy_crossings(pair)}  comb={comb_identity(pair)}")

# %%
# Spectral flow of a tower and its realisation correction
tower = parse_tower("2,3;3,5")
print("tower class sf", sf_tower(tower), " intermediate", intermediate_sf(tower[-1], 0))
print("realisation at writhe 2:", sf_realization(sf_tower(tower), 2.0))

# %%
# Critical eigenvalues of the collapsed (2,3) family at t = 1
vals = critical_eigenvalues(CriticalEigSet(2, 3, 1.0, 0.0, 2 * math.pi, True, (-1, 1)))
print("critical eigenvalues", vals)
