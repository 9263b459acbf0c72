"""
An annulus is not a ball
========================

The Euclidean annulus 1 < |x| < 2 carries a positive torsion function, but
its normal derivative differs on the two boundary circles. The traceless
Hessian identity still balances; it just balances at a nonzero value.
"""

import math

from serrinlab.geometry import space_form
from serrinlab.identities import verify_heintze_karcher, verify_lemma22, verify_minkowski
from serrinlab.radial import SlabProblem, serrin_boundary_data, solve_slab

s = solve_slab(SlabProblem(space_form(2, 0.0), 1.0, 2.0), fiber_volume=2 * math.pi)
inner, outer = s.boundary
print(f"|u'(1)| = {abs(inner.u_nu):.6f}   |u'(2)| = {abs(outer.u_nu):.6f}")
print("overdetermined:", serrin_boundary_data(s).overdet_holds)

rep = verify_lemma22(None, s)
print(f"traceless Hessian identity: {rep.lhs:.10f} = {rep.rhs:.10f}")

# the inner circle has H < 0, so the Heintze-Karcher hypothesis is not met
print("HK hypothesis met:", verify_heintze_karcher(s).hypothesis_met)

# the integrated form of the Minkowski argument holds for any solution
print("∫φu_ν + ∫φ =", verify_minkowski(s, "proof").lhs)
