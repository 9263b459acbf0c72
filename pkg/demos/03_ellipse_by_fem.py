"""
Finite elements on an ellipse
=============================

With P1 elements the Heintze-Karcher inequality can be tested on domains
without symmetry. On the unit disk the gap shrinks like h^2; on the
ellipse with semi-axes 1.5 and 1 it settles at a positive value.
"""

import numpy as np

from serrinlab.fem2d import DomainSpec, convergence_rate, solve_domain
from serrinlab.identities import verify_heintze_karcher

hs = [0.08, 0.04, 0.02]
disk_gaps = []
for h in hs:
    s = solve_domain(DomainSpec("disk", h=h))
    disk_gaps.append(abs(verify_heintze_karcher(s).terms["gap"]))
print("disk gaps:", ["%.2e" % g for g in disk_gaps], "rate %.2f" % convergence_rate(hs, disk_gaps))

ell = solve_domain(DomainSpec("ellipse", a=1.5, b=1.0, h=0.02))
rep = verify_heintze_karcher(ell)
print("ellipse gap: %.6f" % rep.terms["gap"])

# |u_ν| is largest at the ends of the minor axis; the exact ratio is a/b
mags = np.abs(ell.trace.u_nu)
print("max/min |u_ν| = %.5f" % (mags.max() / mags.min()))
