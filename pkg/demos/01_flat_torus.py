# Flat 2-torus as a circle bundle over a circle.
#
# The base is a circle of length 1, the fiber a circle of period ell.  With
# a constant fiber every sector k is solved in closed form, and the same
# sector can be discretized on a collocation grid.  Both must give
# lambda^2 = 4 pi^2 (j^2 + k^2 / ell^2).

import math

import numpy as np

from s1dirac import BundleGeometry, assemble_spectrum

ell = 0.5
g = BundleGeometry.flat_torus((1.0,), ell / (2 * math.pi))   # the profile is the radius

closed = assemble_spectrum(g, (-2, 2), 10, method="closed")
numeric = assemble_spectrum(g, (-2, 2), 10, grid=64, method="numeric")

for k in closed.sectors():
    a = closed.eigenvalues(1, k)
    b = numeric.eigenvalues(1, k)
    print(f"k={str(k):>3}  lambda^2 / 4pi^2 = {np.round(np.sort(a**2) / (4 * math.pi**2), 6)[:6]}"
          f"  |closed - numeric| = {np.max(np.abs(a - b)):.1e}")

# sector 0 does not see the fiber at all: it is the base spectrum, doubled
print("k=0 block:", np.round(closed.eigenvalues(1, 0) / (2 * math.pi), 12))
