"""
Balls in space forms
====================

On a geodesic ball of a space form the torsion function is radial, its
normal derivative is constant, and every integral identity collapses to an
equality. This script solves the problem on a few balls and prints the
quantities that vanish there.
"""

import math

from serrinlab.geometry import space_form, sphere_area
from serrinlab.identities import run_identities
from serrinlab.radial import BallProblem, solve_ball

# three curvatures, same radius
for k in (-1.0, 0.0, 1.0):
    model = space_form(3, k)
    s = solve_ball(BallProblem(model, 1.0), fiber_volume=sphere_area(3))
    print(f"k = {k:+.0f}: c = {s.c:.12f}, u(0) = {s.u[0]:.12f}")

# on the hyperbolic ball the boundary data are explicit
s = solve_ball(BallProblem(space_form(3, -1.0), 1.0), fiber_volume=sphere_area(3))
print("tanh(1)/3 =", math.tanh(1) / 3)

# the whole battery; lemma22 and the HK gap should sit at rounding level
for rep in run_identities(s, ["lemma22", "hk", "pohozaev", "pfunction", "minkowski"]):
    print(f"{rep.name:10s} lhs={rep.lhs: .3e} rhs={rep.rhs: .3e} pass={rep.passed}")
