# The same family with a non-projectable spin structure.
#
# Now the fiber sectors are half-integers, so there is no k = 0 block left to
# converge: every eigenvalue diverges, and the smallest one doubles each time
# n doubles.

import math

from s1dirac import (
    BundleGeometry,
    CollapseFamily,
    FiberProfile,
    assemble_family,
    check_thm2,
    check_thm3,
)

base = BundleGeometry.warped_circle(2 * math.pi, FiberProfile(2.0, sin=[(1, 0.4)]),
                                    projectable=False)
family = CollapseFamily.from_rule(base, [4, 8, 16, 32], "shrink_oscillate")
table = assemble_family(family, (-2.5, 2.5), 20, {n: 8 * n for n in family.labels})

print("sectors:", [str(k) for k in table.sectors()])
rep = check_thm2(table, family, eps=0.05)
mins = rep.info["min_abs_lambda"]
prev = None
for n, m in mins.items():
    ratio = "" if prev is None else f"   ratio {m / prev:.3f}"
    print(f"n={n:>2}  min|lambda| = {m:9.4f}{ratio}")
    prev = m
print("divergence report passed:", rep.passed)

# the uniform lower bound sqrt(1 - 2 alpha) / (2 ||l||) holds at every stage
t3 = check_thm3(table, family)
for n, terms in t3.info["terms"].items():
    print(f"n={n:>2}  bound {terms['fiber_term']:9.4f}  vs  min|lambda| {mins[n]:9.4f}")
