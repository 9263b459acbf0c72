"""Independent reference computations used only by the test-suite."""
from __future__ import annotations

import numpy as np


def _d(fun, x, i, h):
    """Fourth-order central difference of ``fun`` along coordinate ``i``."""
    e = np.zeros_like(x)
    e[i] = h
    return (-fun(x + 2 * e) + 8 * fun(x + e) - 8 * fun(x - e) + fun(x - 2 * e)) / (12 * h)


def warped_metric(f, n, fiber_scalar):
    """Metric ``dt^2 + f(t)^2 g_N`` in coordinates ``(t, y_1..y_{n-1})``.

    The fiber is the constant-curvature space of scalar curvature
    ``fiber_scalar`` in conformally flat coordinates.
    """
    m = n - 1
    curv = fiber_scalar / (m * (m - 1)) if m > 1 else 0.0

    def g(x):
        t, y = x[0], x[1:]
        conf = 4.0 / (1.0 + curv * y @ y) ** 2 if m > 1 else 1.0
        out = np.zeros((n, n))
        out[0, 0] = 1.0
        out[1:, 1:] = f(t) ** 2 * conf * np.eye(m)
        return out

    return g


def christoffel(g, x, h=1e-4):
    n = len(x)
    ginv = np.linalg.inv(g(x))
    dg = np.array([_d(g, x, i, h) for i in range(n)])  # dg[c, a, b] = d_c g_ab
    gamma = np.zeros((n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                gamma[a, b, c] = 0.5 * sum(
                    ginv[a, d] * (dg[b, d, c] + dg[c, d, b] - dg[d, b, c]) for d in range(n)
                )
    return gamma


def ricci_fd(g, x, h=1e-3):
    """Ricci tensor of ``g`` at ``x`` by nested finite differences."""
    n = len(x)
    gam = christoffel(g, x)
    dgam = np.array([_d(lambda z: christoffel(g, z), x, i, h) for i in range(n)])
    ric = np.zeros((n, n))
    for b in range(n):
        for d in range(n):
            total = 0.0
            for a in range(n):
                total += dgam[a, a, d, b] - dgam[d, a, a, b]
                for e in range(n):
                    total += gam[a, a, e] * gam[e, d, b] - gam[a, d, e] * gam[e, a, b]
            ric[b, d] = total
    return ric


def warped_curvature_fd(f, n, fiber_scalar, t, y=None):
    """(ric_radial, ric_fiber, scalar) of the warped product at ``t``."""
    x = np.zeros(n)
    x[0] = t
    if y is not None:
        x[1:] = y
    else:
        x[1:] = 0.1
    g = warped_metric(f, n, fiber_scalar)
    ric = ricci_fd(g, x)
    gx = g(x)
    scalar = float(np.trace(np.linalg.inv(gx) @ ric))
    return ric[0, 0], ric[1, 1] / gx[1, 1], scalar
