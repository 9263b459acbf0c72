"""Warped products ``I x_f N`` with metric ``dt^2 + f(t)^2 g_N``.

The fiber ``N`` has dimension ``n - 1`` and is assumed Einstein with constant
scalar curvature ``fiber_scalar``; fiber integrals are taken per unit fiber
volume. The field ``X = f d/dt`` is closed conformal with factor ``phi = f'``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateMetricError, DomainError, UsageError
from .expr import Expression
from .report import IdentityReport

CATALOG = ("euclidean", "sphere", "hyperbolic", "exp", "cosh")


def _richardson_derivatives(func: Callable, t: np.ndarray) -> tuple[np.ndarray, ...]:
    # two-level Richardson on second-order central stencils; each order gets the
    # step that balances h^4 truncation against roundoff eps/h^order
    scale = np.maximum(1.0, np.abs(t))
    f0 = np.asarray(func(t), dtype=float)

    def d1(h):
        return (func(t + h) - func(t - h)) / (2 * h)

    def d2(h):
        return (func(t + h) - 2 * f0 + func(t - h)) / h**2

    def d3(h):
        return (func(t + 2 * h) - 2 * func(t + h) + 2 * func(t - h) - func(t - 2 * h)) / (2 * h**3)

    out = [f0]
    for stencil, step in ((d1, 1e-4), (d2, 1e-3), (d3, 5e-3)):
        h = step * scale
        out.append((4 * stencil(h / 2) - stencil(h)) / 3)
    return tuple(np.asarray(v, dtype=float) for v in out)


@dataclass(frozen=True)
class Warp:
    """A warp function with its derivatives up to third order.

    ``kind`` is one of the catalog names or ``"custom"``. ``curvature`` is the
    sectional curvature parameter of the ``sphere``/``hyperbolic`` warps.
    """

    kind: str
    interval: tuple[float, float]
    curvature: float = 0.0
    expression: Expression | None = None
    func: Callable | None = field(default=None, compare=False)
    label: str = ""

    def derivatives(self, t) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(f, f', f'', f''')`` at ``t`` without any domain check."""
        t = np.asarray(t, dtype=float)
        kind = self.kind
        if kind == "euclidean":
            one = np.ones_like(t)
            return t.copy(), one, 0 * one, 0 * one
        if kind == "sphere":
            s = math.sqrt(self.curvature)
            sn, cs = np.sin(s * t), np.cos(s * t)
            return sn / s, cs, -s * sn, -self.curvature * cs
        if kind == "hyperbolic":
            s = math.sqrt(-self.curvature)
            sn, cs = np.sinh(s * t), np.cosh(s * t)
            return sn / s, cs, s * sn, -self.curvature * cs
        if kind == "exp":
            e = np.exp(t)
            return e, e, e, e
        if kind == "cosh":
            c, s = np.cosh(t), np.sinh(t)
            return c, s, c, s
        if self.expression is not None:
            return self.expression.derivatives(t, 3)
        if self.func is not None:
            return _richardson_derivatives(self.func, t)
        raise UsageError(f"warp {kind!r} has no definition")

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.kind == "custom" and self.expression is not None:
            return f"custom:{self.expression.text}"
        return self.kind


def make_warp(name: str, curvature: float | None = None, interval=None, eps: float = 0.1) -> Warp:
    """Build a warp from its catalog name.

    ``name`` is ``euclidean``, ``sphere``, ``hyperbolic``, ``exp``, ``cosh`` or
    ``custom:<expression>``. ``curvature`` parameterizes ``sphere`` (positive)
    and ``hyperbolic`` (negative); ``eps`` is the left end of the ``cosh``
    interval.
    """
    if name == "euclidean":
        return Warp("euclidean", tuple(interval or (0.0, math.inf)))
    if name == "sphere":
        kappa = 1.0 if curvature is None else float(curvature)
        if kappa <= 0:
            raise UsageError("sphere warp needs positive curvature")
        return Warp("sphere", tuple(interval or (0.0, math.pi / math.sqrt(kappa))), kappa)
    if name == "hyperbolic":
        kappa = -1.0 if curvature is None else float(curvature)
        if kappa >= 0:
            raise UsageError("hyperbolic warp needs negative curvature")
        return Warp("hyperbolic", tuple(interval or (0.0, math.inf)), kappa)
    if name == "exp":
        return Warp("exp", tuple(interval or (-math.inf, math.inf)))
    if name == "cosh":
        if eps <= 0:
            raise UsageError("cosh warp needs eps > 0")
        return Warp("cosh", tuple(interval or (eps, math.inf)))
    if name.startswith("custom:"):
        return Warp("custom", tuple(interval or (0.0, math.inf)), expression=Expression(name[len("custom:"):]))
    raise UsageError(f"unknown warp {name!r}")


def callable_warp(func: Callable, interval, label: str = "custom") -> Warp:
    """Warp from an opaque vectorized callable; derivatives by Richardson differences."""
    return Warp("custom", tuple(interval), func=func, label=label)


@dataclass(frozen=True)
class WarpModel:
    """Ambient warped product with model constant ``k``.

    ``k`` enters ``Δu + nku = -1`` and the Ricci bound ``Ric >= (n-1)k g``.
    """

    n: int
    warp: Warp
    k: float
    fiber_scalar: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise UsageError("dimension n must be an integer >= 2")
        lo, hi = self.warp.interval
        if not lo < hi:
            raise UsageError("warp interval must be nonempty")

    @property
    def interval(self) -> tuple[float, float]:
        return self.warp.interval

    @property
    def is_space_form(self) -> bool:
        n, k = self.n, self.k
        if not math.isclose(self.fiber_scalar, (n - 1) * (n - 2), rel_tol=0, abs_tol=1e-12):
            return False
        kind = self.warp.kind
        if kind == "euclidean":
            return k == 0
        if kind in ("sphere", "hyperbolic"):
            return math.isclose(self.warp.curvature, k, rel_tol=1e-14, abs_tol=0)
        return False

    @property
    def has_pole(self) -> bool:
        """True when ``f(0) = 0`` and ``f'(0) = 1`` (geodesic balls centred at ``t = 0``)."""
        if self.interval[0] != 0.0:
            return False
        f, f1, _, _ = self.warp.derivatives(0.0)
        return abs(float(f)) < 1e-12 and abs(float(f1) - 1.0) < 1e-8

    def describe(self) -> dict:
        return {
            "n": self.n,
            "warp": self.warp.name,
            "k": self.k,
            "fiber_scalar": self.fiber_scalar,
            "interval": list(self.interval),
        }


def space_form(n: int, k: float) -> WarpModel:
    """Simply connected space form of curvature ``k`` in geodesic polar coordinates."""
    if k == 0:
        warp = make_warp("euclidean")
    elif k > 0:
        warp = make_warp("sphere", k)
    else:
        warp = make_warp("hyperbolic", k)
    return WarpModel(n, warp, float(k), float((n - 1) * (n - 2)))


def model_from_name(name: str, n: int, k: float, fiber_scalar: float | None = None, interval=None, eps: float = 0.1) -> WarpModel:
    """Catalog lookup used by the CLI.

    Space-form warps take their curvature from ``k`` and default the fiber to
    the round sphere; ``exp`` defaults to a flat fiber; ``cosh`` to the fiber
    scalar curvature ``-(n-1)(n-2)``.
    """
    if name in ("euclidean", "sphere", "hyperbolic"):
        warp = make_warp(name, None if name == "euclidean" else k, interval)
        default_fiber = (n - 1) * (n - 2)
    elif name == "exp":
        warp = make_warp("exp", interval=interval)
        default_fiber = 0.0
    elif name == "cosh":
        warp = make_warp("cosh", interval=interval, eps=eps)
        default_fiber = -(n - 1) * (n - 2)
    else:
        warp = make_warp(name, interval=interval)
        default_fiber = 0.0
    fs = default_fiber if fiber_scalar is None else fiber_scalar
    return WarpModel(n, warp, float(k), float(fs))


def _check_domain(model: WarpModel, t: np.ndarray) -> None:
    lo, hi = model.interval
    if np.any(~np.isfinite(t)) or np.any(t <= lo) or np.any(t >= hi):
        raise DomainError(f"t outside the open interval ({lo}, {hi})")


def eval_warp(model: WarpModel, t):
    """``(f, f', f'', f''')`` at interior points ``t`` of the warp interval."""
    t = np.asarray(t, dtype=float)
    _check_domain(model, t)
    vals = model.warp.derivatives(t)
    if np.any(vals[0] <= 0):
        raise DegenerateMetricError("warp function is not positive")
    if t.ndim == 0:
        return tuple(float(v) for v in vals)
    return vals


@dataclass(frozen=True)
class CurvatureSample:
    t: float | np.ndarray
    f: float | np.ndarray
    f1: float | np.ndarray
    f2: float | np.ndarray
    f3: float | np.ndarray
    phi: float | np.ndarray
    ric_radial: float | np.ndarray
    ric_fiber: float | np.ndarray
    scalar: float | np.ndarray
    XR: float | np.ndarray
    H_slice: float | np.ndarray


def curvature_from_jet(n, fiber_scalar, f, f1, f2, f3):
    """Radial/fiber Ricci eigenvalues, scalar curvature and ``X(R)`` from the warp jet."""
    q = f1 / f
    ric_radial = -(n - 1) * f2 / f
    scalar = fiber_scalar / f**2 - 2 * (n - 1) * f2 / f - (n - 1) * (n - 2) * q**2
    ric_fiber = (scalar - ric_radial) / (n - 1)
    dq = f2 / f - q**2
    dscalar = (
        -2 * fiber_scalar * f1 / f**3
        - 2 * (n - 1) * (f3 / f - f2 * f1 / f**2)
        - 2 * (n - 1) * (n - 2) * q * dq
    )
    return ric_radial, ric_fiber, scalar, f * dscalar


def curvature_sample(model: WarpModel, t) -> CurvatureSample:
    f, f1, f2, f3 = eval_warp(model, t)
    n = model.n
    ric_radial, ric_fiber, scalar, XR = curvature_from_jet(n, model.fiber_scalar, f, f1, f2, f3)
    return CurvatureSample(
        t=t if np.ndim(t) else float(t),
        f=f, f1=f1, f2=f2, f3=f3, phi=f1,
        ric_radial=ric_radial,
        ric_fiber=ric_fiber,
        scalar=scalar,
        XR=XR,
        H_slice=(n - 1) * f1 / f,
    )


def laplacian_of_phi(model: WarpModel, t):
    """Radial Laplacian of the conformal factor, ``phi'' + (n-1)(f'/f) phi'``."""
    f, f1, f2, f3 = eval_warp(model, t)
    return f3 + (model.n - 1) * (f1 / f) * f2


def check_einstein(model: WarpModel, t_samples, tol: float = 1e-10) -> IdentityReport:
    """Check ``Ric = (n-1) k g`` at the sample points."""
    t = np.asarray(t_samples, dtype=float).ravel()
    if t.size == 0:
        raise UsageError("check_einstein needs at least one sample")
    cs = curvature_sample(model, t)
    target = (model.n - 1) * model.k
    dev_radial = np.max(np.abs(cs.ric_radial - target))
    dev_fiber = np.max(np.abs(cs.ric_fiber - target))
    worst = max(dev_radial, dev_fiber)
    return IdentityReport(
        name="einstein",
        lhs=worst,
        rhs=0.0,
        passed=worst <= tol,
        tol=tol,
        terms={
            "max_dev_ric_radial": dev_radial,
            "max_dev_ric_fiber": dev_fiber,
            "target": target,
            "samples": t.size,
        },
    )


def slice_mean_curvature(model: WarpModel, t, outward: int = 1):
    """Mean curvature (sum of principal curvatures) of the slice ``{t}`` for normal ``outward * d/dt``."""
    if outward not in (1, -1):
        raise UsageError("outward must be +1 or -1")
    f, f1, _, _ = eval_warp(model, t)
    return outward * (model.n - 1) * f1 / f


def christoffel_2d(model: WarpModel, t) -> dict[str, float]:
    """Nonzero Christoffel symbols of ``dt^2 + f^2 dθ^2``."""
    f, f1, _, _ = eval_warp(model, t)
    return {"t_thth": -f * f1, "th_tth": f1 / f, "th_tht": f1 / f}


def conformal_field_defect(model: WarpModel, t) -> float:
    """Largest component of ``∇_Y X - phi Y`` for ``Y`` in ``{d/dt, d/dθ}`` (2-D reduction)."""
    f, f1, _, _ = eval_warp(model, t)
    gamma = christoffel_2d(model, t)
    # X = f d/dt has components (X^t, X^θ) = (f, 0)
    # ∇_t X = (d_t f + Γ^t_tt f) d_t + Γ^θ_tt f d_θ, and Γ^t_tt = Γ^θ_tt = 0
    nabla_t = (f1, 0.0)
    # ∇_θ X = (d_θ f + Γ^t_θt f) d_t + Γ^θ_θt f d_θ, and Γ^t_θt = 0
    nabla_th = (0.0, gamma["th_tht"] * f)
    phi = f1
    defects = [nabla_t[0] - phi, nabla_t[1], nabla_th[0], nabla_th[1] - phi]
    return float(np.max(np.abs(defects)))


def sphere_area(n: int) -> float:
    """Volume of the unit round sphere ``S^(n-1)``, the fiber of an n-dimensional space form."""
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)
