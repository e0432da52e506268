# A flux bundle over the square 2-torus.
#
# Sector k twists the base by a line bundle of degree -k c, whose Dirac
# spectrum is a Landau ladder lambda^2 = 4 pi |deg| m / area.  The curvature
# term is bounded by ||l d omega||_Cl / 4, which gives an enclosure for
# every eigenvalue of the full operator.

import math

import numpy as np

from s1dirac import (
    BundleGeometry,
    GeometryError,
    assemble_spectrum,
    check_thm3,
    clifford_norm,
    landau_twisted_torus_spectrum,
    zero_order_enclosure,
)

print("Landau ladder, area 1, flux 1:", np.round(landau_twisted_torus_spectrum(1.0, 1, 8).values(), 4))

# an odd Euler number admits no non-projectable spin structure
try:
    BundleGeometry.flux_bundle(1.0, 1, 0.1, projectable=False)
except GeometryError as exc:
    print("flux 1, non-projectable:", exc)

g = BundleGeometry.flux_bundle(1.0, 2, 0.1, projectable=False)
cl = clifford_norm(g.connection, g.profile)
table = zero_order_enclosure(assemble_spectrum(g, (-1.5, 1.5), 6), cl)
print(f"flux 2: ||l d omega||_Cl = {cl:.4f}, enclosure radius {cl / 4:.4f}")
for r in sorted(table.select(k=0.5), key=lambda r: abs(r.lam))[:4]:
    print(f"  k=1/2 j={r.j}  lambda={r.lam:9.4f}  in [{r.lo:9.4f}, {r.hi:9.4f}]")
rep = check_thm3(table, g)
terms = rep.info["terms"][1]
print(f"lower bound {terms['fiber_term']:.4f} - {terms['curvature_term']:.4f}: passed {rep.passed}")
