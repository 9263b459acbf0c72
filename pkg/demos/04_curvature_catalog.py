"""
Curvature of warped products
============================

For the metric dt^2 + f(t)^2 g_N everything is a function of t. Einstein
warps make the integrand of the main condition vanish identically; a
generic warp does not, but its two forms still agree after integration.
"""

import numpy as np

from serrinlab.geometry import check_einstein, curvature_sample, model_from_name
from serrinlab.identities import main_condition_integrands, verify_main_condition
from serrinlab.radial import SlabProblem, solve_slab

t = np.linspace(0.3, 1.5, 7)
for name, n, fiber in (("exp", 3, None), ("cosh", 4, -6.0), ("custom:t + 0.1*t^3", 3, None)):
    model = model_from_name(name, n, -1.0 if name != "custom:t + 0.1*t^3" else 0.0, fiber_scalar=fiber)
    cs = curvature_sample(model, t)
    curv, _ = main_condition_integrands(model, t)
    print(f"{name:20s} R in [{cs.scalar.min():.3f}, {cs.scalar.max():.3f}]"
          f"  Einstein={check_einstein(model, t).passed}  max|integrand|={np.max(np.abs(curv)):.2e}")

model = model_from_name("custom:t + 0.1*t^3", 3, 0.0)
rep = verify_main_condition(solve_slab(SlabProblem(model, 0.5, 1.5)))
print("curvature form %.10f, (n-1) x Laplacian form %.10f" % (rep.terms["curvature_form"], 2 * rep.terms["laplacian_form"]))
