"""Radial solutions of ``Δu + nku = -1`` on geodesic balls and slabs.

A ball is ``{t < R}`` around the pole ``t = 0`` of a warp with ``f(0) = 0``,
``f'(0) = 1``; a slab is ``{a <= t <= b}``. On radial functions the Laplacian
is ``u'' + (n-1)(f'/f) u'``. All volume and boundary integrals are per unit
fiber volume unless a ``fiber_volume`` is attached to the solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.interpolate import BarycentricInterpolator

from .errors import DomainError, PoleError, PositivityError, SolverError, UnsupportedError, UsageError
from .geometry import WarpModel, curvature_from_jet, model_from_name, slice_mean_curvature

DEFAULT_NODES = 512
MAX_NODES = 4096
QUAD_RTOL = 1e-12
H_ZERO_ATOL = 1e-12
QUAD_ATOL = 1e-15


def chebyshev_grid(a: float, b: float, m: int = DEFAULT_NODES) -> np.ndarray:
    """``m + 1`` Chebyshev-Lobatto nodes on ``[a, b]``, increasing."""
    j = np.arange(m + 1)
    grid = 0.5 * (a + b) - 0.5 * (b - a) * np.cos(np.pi * j / m)
    grid[0], grid[-1] = a, b
    return grid


def lobatto_weights(m: int) -> np.ndarray:
    """Barycentric weights of the ``m + 1`` Chebyshev-Lobatto nodes.

    Passing these explicitly keeps scipy from deriving them through a random
    permutation, which made interpolated values vary in the last bits.
    """
    w = np.where(np.arange(m + 1) % 2 == 0, 1.0, -1.0)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


@dataclass(frozen=True)
class BallProblem:
    model: WarpModel
    radius: float

    def __post_init__(self):
        lo, hi = self.model.interval
        if not self.model.has_pole:
            raise UnsupportedError("ball problems need a warp with a pole at t = 0")
        n = self.model.n
        if abs(self.model.fiber_scalar - (n - 1) * (n - 2)) > 1e-12:
            raise UnsupportedError("a smooth pole needs the round fiber, fiber_scalar = (n-1)(n-2)")
        if not 0 < self.radius < hi:
            raise DomainError(f"radius {self.radius} is not interior to ({lo}, {hi})")

    @property
    def k(self) -> float:
        return self.model.k

    @property
    def positivity_limit(self) -> float:
        """Largest radius with a positive solution on a positively curved space form."""
        if self.model.k > 0 and self.model.is_space_form:
            return math.pi / (2 * math.sqrt(self.model.k))
        return math.inf


@dataclass(frozen=True)
class SlabProblem:
    model: WarpModel
    a: float
    b: float

    def __post_init__(self):
        lo, hi = self.model.interval
        if not self.a < self.b:
            raise UsageError("slab needs a < b")
        if not (lo < self.a and self.b < hi):
            raise DomainError(f"[{self.a}, {self.b}] is not inside ({lo}, {hi})")
        f = self.model.warp.derivatives(np.linspace(self.a, self.b, 257))[0]
        if np.any(f <= 0):
            raise DomainError("warp function must be positive on the slab")


@dataclass(frozen=True)
class BoundaryRecord:
    """One boundary slice: position, sign of ``ν`` relative to ``d/dt``, ``u_ν`` and ``H``."""

    t: float
    orientation: int
    u_nu: float
    H: float


class ClosedFormProfile:
    """Exact ball solution on a space form."""

    def __init__(self, n: int, k: float, radius: float):
        self.n, self.k, self.radius = n, k, radius

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        n, k, R = self.n, self.k, self.radius
        if k == 0:
            u = (R**2 - t**2) / (2 * n)
            return u, -t / n, np.full_like(t, -1.0 / n), np.zeros_like(t)
        if k > 0:
            s = math.sqrt(k)
            d = n * k * math.cos(s * R)
            cs, sn = np.cos(s * t), np.sin(s * t)
            return (cs - math.cos(s * R)) / d, -s * sn / d, -k * cs / d, k * s * sn / d
        s = math.sqrt(-k)
        d = n * s * s * math.cosh(s * R)
        ch, sh = np.cosh(s * t), np.sinh(s * t)
        return (math.cosh(s * R) - ch) / d, -s * sh / d, -s * s * ch / d, -(s**3) * sh / d


class InterpolatedProfile:
    """Numerical profile: Chebyshev interpolation of ``u, u'``; higher derivatives from the ODE."""

    def __init__(self, model: WarpModel, grid, u, u1, pole_series=None, t_series=0.0):
        self.model = model
        wi = lobatto_weights(len(grid) - 1)
        self._u = BarycentricInterpolator(grid, u, wi=wi)
        self._u1 = BarycentricInterpolator(grid, u1, wi=wi)
        self.pole_series = pole_series
        self.t_series = t_series

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        u = np.asarray(self._u(t), dtype=float)
        u1 = np.asarray(self._u1(t), dtype=float)
        n, k = self.model.n, self.model.k
        near = t < self.t_series if self.pole_series is not None else np.zeros(t.shape, bool)
        safe = np.where(near, max(self.t_series, 1e-300), t)
        f, f1, f2, _ = self.model.warp.derivatives(safe)
        q = f1 / f
        u2 = -1.0 - n * k * u - (n - 1) * q * u1
        u3 = -n * k * u1 - (n - 1) * (f2 / f - q * q) * u1 - (n - 1) * q * u2
        if np.any(near):
            su, su1, su2, su3 = self.pole_series(t)
            u, u1 = np.where(near, su, u), np.where(near, su1, u1)
            u2, u3 = np.where(near, su2, u2), np.where(near, su3, u3)
        return u, u1, u2, u3


@dataclass
class RadialSolution:
    """Radial solution profile sampled on a Chebyshev grid.

    ``profile(t)`` returns ``(u, u', u'', u''')`` anywhere in the domain;
    ``boundary`` lists the boundary slices with outward orientation.
    """

    model: WarpModel
    kind: str
    a: float
    b: float
    grid: np.ndarray
    u: np.ndarray
    u1: np.ndarray
    u2: np.ndarray
    c: float
    boundary: list[BoundaryRecord]
    positive: bool
    profile: Callable = field(repr=False)
    fiber_volume: float = 1.0
    method: str = ""

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def k(self) -> float:
        return self.model.k

    def integral(self, integrand, domain: str = "volume") -> float:
        return integrate_radial(self, integrand, domain)

    def to_dict(self) -> dict:
        return {
            "model": self.model.describe(),
            "kind": self.kind,
            "a": self.a,
            "b": self.b,
            "method": self.method,
            "fiber_volume": self.fiber_volume,
            "c": self.c,
            "positive": self.positive,
            "grid": self.grid.tolist(),
            "u": self.u.tolist(),
            "u1": self.u1.tolist(),
            "u2": self.u2.tolist(),
            "boundary": [
                {"t": r.t, "orientation": r.orientation, "u_nu": r.u_nu, "H": r.H} for r in self.boundary
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RadialSolution":
        md = data["model"]
        model = model_from_name(md["warp"], md["n"], md["k"], md["fiber_scalar"], tuple(md["interval"]))
        grid = np.asarray(data["grid"], dtype=float)
        u = np.asarray(data["u"], dtype=float)
        u1 = np.asarray(data["u1"], dtype=float)
        if data["kind"] == "ball":
            profile = InterpolatedProfile(model, grid, u, u1, _pole_series(model, u[0]), 1e-3 * data["b"])
        else:
            profile = InterpolatedProfile(model, grid, u, u1)
        return cls(
            model=model,
            kind=data["kind"],
            a=data["a"],
            b=data["b"],
            grid=grid,
            u=u,
            u1=u1,
            u2=np.asarray(data["u2"], dtype=float),
            c=data["c"],
            boundary=[BoundaryRecord(**r) for r in data["boundary"]],
            positive=data["positive"],
            profile=profile,
            fiber_volume=data.get("fiber_volume", 1.0),
            method=data.get("method", ""),
        )


def _finish(model, kind, a, b, grid, profile, fiber_volume, method) -> RadialSolution:
    u, u1, u2, _ = profile(grid)
    u = np.array(u, dtype=float)
    u1 = np.array(u1, dtype=float)
    u2 = np.array(u2, dtype=float)
    records = []
    if kind == "slab":
        records.append(BoundaryRecord(a, -1, float(-u1[0]), float(slice_mean_curvature(model, a, -1))))
    records.append(BoundaryRecord(b, 1, float(u1[-1]), float(slice_mean_curvature(model, b, 1))))
    positive = bool(np.all(u[1:-1] > 0))
    return RadialSolution(
        model=model,
        kind=kind,
        a=a,
        b=b,
        grid=grid,
        u=u,
        u1=u1,
        u2=u2,
        c=abs(float(u1[-1])),
        boundary=records,
        positive=positive,
        profile=profile,
        fiber_volume=fiber_volume,
        method=method,
    )


def _check_positivity(p: BallProblem, allow_nonpositive: bool) -> None:
    if not allow_nonpositive and p.radius >= p.positivity_limit:
        raise PositivityError(
            f"radius {p.radius} >= {p.positivity_limit}: no positive solution on this space form"
        )


def solve_ball_closed_form(
    p: BallProblem, *, m: int = DEFAULT_NODES, fiber_volume: float = 1.0, allow_nonpositive: bool = False
) -> RadialSolution:
    """Exact solution on a space-form ball.

    ``k = 0``: ``(R^2 - r^2)/(2n)``; ``k > 0``: ``(cos √k r - cos √k R)/(nk cos √k R)``;
    ``k < 0``: ``(cosh √-k R - cosh √-k r)/(n|k| cosh √-k R)``.
    """
    if not p.model.is_space_form:
        raise UnsupportedError("closed-form ball solutions exist only on space forms")
    _check_positivity(p, allow_nonpositive)
    k = p.model.k
    if k > 0 and abs(math.cos(math.sqrt(k) * p.radius)) < 1e-14:
        raise PositivityError("radius is at the resonant hemisphere")
    profile = ClosedFormProfile(p.model.n, k, p.radius)
    grid = chebyshev_grid(0.0, p.radius, m)
    return _finish(p.model, "ball", 0.0, p.radius, grid, profile, fiber_volume, "closed-form")


def _pole_series(model: WarpModel, alpha: float):
    """Fourth-order series ``alpha + a2 t^2 + a4 t^4`` of the ball solution at the pole."""
    n, k = model.n, model.k
    b3 = float(model.warp.derivatives(0.0)[3]) / 6.0  # f = t + b3 t^3 + ...
    a2 = -(1.0 + n * k * alpha) / (2 * n)
    a4 = -a2 * (4 * (n - 1) * b3 + n * k) / (4 * (n + 2))

    def series(t):
        t = np.asarray(t, dtype=float)
        t2 = t * t
        return (
            alpha + a2 * t2 + a4 * t2 * t2,
            2 * a2 * t + 4 * a4 * t2 * t,
            2 * a2 + 12 * a4 * t2,
            24 * a4 * t,
        )

    return series


def _rhs(model: WarpModel, forcing: float):
    n, k = model.n, model.k
    derivs = model.warp.derivatives

    def rhs(t, y):
        f, f1, _, _ = derivs(t)
        return [y[1], -forcing - n * k * y[0] - (n - 1) * (f1 / f) * y[1]]

    return rhs


def _integrate(model, t0, t1, y0, forcing=1.0, t_eval=None, rtol=1e-13):
    scale = max(1.0, abs(y0[0]), abs(y0[1]))
    sol = solve_ivp(
        _rhs(model, forcing),
        (t0, t1),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=1e-16 * scale,
        t_eval=t_eval,
    )
    if not sol.success:
        raise SolverError(f"ODE integration failed: {sol.message}")
    return sol


def solve_ball_numeric(
    p: BallProblem,
    tol: float = 1e-11,
    *,
    m: int = DEFAULT_NODES,
    fiber_volume: float = 1.0,
    allow_nonpositive: bool = False,
) -> RadialSolution:
    """Shooting on the centre value ``u(0) = alpha`` with a series start at the pole.

    Secant iteration on ``alpha`` until ``|u(R)| <= tol``; the map
    ``alpha -> u(R)`` is affine, so the iteration settles after one update.
    """
    _check_positivity(p, allow_nonpositive)
    model, R = p.model, p.radius
    t_s = 1e-3 * R

    def shoot(alpha):
        s = _pole_series(model, alpha)(t_s)
        return _integrate(model, t_s, R, [float(s[0]), float(s[1])]).y[0, -1]

    a0, a1 = 0.0, 1.0
    g0, g1 = shoot(a0), shoot(a1)
    for _ in range(8):
        slope = g1 - g0
        if not np.isfinite(slope) or abs(slope) <= 1e-13 * max(1.0, abs(g0), abs(g1)):
            raise SolverError("shooting failed: no sign change of u(R) in alpha (resonant radius)")
        a0, g0, a1 = a1, g1, a1 - g1 * (a1 - a0) / slope
        g1 = shoot(a1)
        if abs(g1) <= tol * max(1.0, abs(a1)):
            break
    else:
        raise SolverError(f"shooting did not converge: |u(R)| = {abs(g1):.3e}")
    alpha = a1
    series = _pole_series(model, alpha)

    while True:
        grid = chebyshev_grid(0.0, R, m)
        outer = grid[grid >= t_s]
        s0 = series(t_s)
        t_eval = np.concatenate(([t_s], outer[outer > t_s]))
        sol = _integrate(model, t_s, R, [float(s0[0]), float(s0[1])], t_eval=t_eval)
        u = np.empty_like(grid)
        u1 = np.empty_like(grid)
        inner = grid < t_s
        su, su1, _, _ = series(grid[inner])
        u[inner], u1[inner] = su, su1
        u[~inner], u1[~inner] = sol.y[0, -outer.size:], sol.y[1, -outer.size:]
        u[-1] = 0.0
        profile = InterpolatedProfile(model, grid, u, u1, series, t_s)
        result = _finish(model, "ball", 0.0, R, grid, profile, fiber_volume, "shooting")
        if flux_residual(result) <= 1e-9 or m >= MAX_NODES:
            return result
        m *= 2


def solve_slab(p: SlabProblem, tol: float = 1e-11, *, m: int = DEFAULT_NODES, fiber_volume: float = 1.0) -> RadialSolution:
    """Two-point problem ``u(a) = u(b) = 0`` by linear shooting on ``u'(a)``."""
    model, a, b = p.model, p.a, p.b
    part = _integrate(model, a, b, [0.0, 0.0], forcing=1.0)
    homo = _integrate(model, a, b, [0.0, 1.0], forcing=0.0)
    up, uh = part.y[0, -1], homo.y[0, -1]
    scale = max(np.max(np.abs(homo.y[0])), 1e-300)
    if abs(uh) <= 1e-10 * scale:
        raise SolverError("resonance: the homogeneous slab problem has a nontrivial solution")
    slope = -up / uh

    while True:
        grid = chebyshev_grid(a, b, m)
        sol = _integrate(model, a, b, [0.0, slope], forcing=1.0, t_eval=grid)
        u, u1 = sol.y[0].copy(), sol.y[1].copy()
        if abs(u[-1]) > max(tol, 1e-9 * np.max(np.abs(u))):
            raise SolverError(f"slab shooting residual |u(b)| = {abs(u[-1]):.3e}")
        u[0] = u[-1] = 0.0
        profile = InterpolatedProfile(model, grid, u, u1)
        result = _finish(model, "slab", a, b, grid, profile, fiber_volume, "shooting")
        if flux_residual(result) <= 1e-9 or m >= MAX_NODES:
            return result
        m *= 2


def solve_ball(p: BallProblem, tol: float = 1e-11, **kwargs) -> RadialSolution:
    """Closed form on space forms, shooting otherwise."""
    if p.model.is_space_form:
        return solve_ball_closed_form(p, **{k: v for k, v in kwargs.items() if k != "tol"})
    return solve_ball_numeric(p, tol, **kwargs)


def pde_residual(s: RadialSolution) -> float:
    """Max of ``|u'' + (n-1)(f'/f)u' + nku + 1|`` over interior grid points (pole excluded)."""
    t = s.grid[1:-1]
    keep = t > 0
    f, f1, _, _ = s.model.warp.derivatives(t[keep])
    u, u1, u2 = s.u[1:-1][keep], s.u1[1:-1][keep], s.u2[1:-1][keep]
    res = u2 + (s.n - 1) * (f1 / f) * u1 + s.n * s.k * u + 1.0
    return float(np.max(np.abs(res))) if res.size else 0.0


def flux_residual(s: RadialSolution, cells: int = 64) -> float:
    """Cell-averaged residual of the conservative form ``(f^{n-1}u')' = -f^{n-1}(1 + nku)``.

    Uses only ``u`` and ``u'`` (not ``u''``), so it checks the sampled profile
    independently of the ODE right-hand side. Normalized per unit length, by
    the local ``f^{n-1}`` and by the size ``1 + n|k| max|u|`` of the source.
    """
    n, k = s.n, s.k
    size = 1.0 + n * abs(k) * float(np.max(np.abs(s.u)))
    edges = np.linspace(s.a, s.b, cells + 1)
    xg, wg = np.polynomial.legendre.leggauss(20)
    worst = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        tq = 0.5 * (hi - lo) * xg + 0.5 * (hi + lo)
        fq = s.model.warp.derivatives(tq)[0]
        uq = s.profile(tq)[0]
        source = 0.5 * (hi - lo) * np.sum(wg * fq ** (n - 1) * (1.0 + n * k * uq))
        ends = s.profile(np.array([lo, hi]))[1]
        fe = s.model.warp.derivatives(np.array([lo, hi]))[0]
        flux = fe ** (n - 1) * ends
        weight = np.mean(fq ** (n - 1))
        worst = max(worst, abs(flux[1] - flux[0] + source) / ((hi - lo) * weight))
    return float(worst) / size


@dataclass(frozen=True)
class SerrinData:
    c: float
    H_out: float
    overdet_holds: bool
    cor23_holds: bool
    cor23_skipped: bool = False
    max_cor23_residual: float = 0.0


def _h_vanishes(H: float) -> bool:
    # slices through a critical point of f land at H ~ 1e-16, not exactly 0
    return abs(H) <= H_ZERO_ATOL


def serrin_boundary_data(s: RadialSolution, rtol: float = 1e-9) -> SerrinData:
    """Overdetermined constant and the mean-curvature relation ``u_ν = -(n-1)/(nH)``."""
    n = s.n
    mags = np.array([abs(r.u_nu) for r in s.boundary])
    overdet = bool(np.max(mags) - np.min(mags) <= rtol * np.max(mags))
    skipped = False
    ok = True
    worst = 0.0
    for r in s.boundary:
        if _h_vanishes(r.H):
            skipped = True
            continue
        if r.H < 0:
            continue
        target = -(n - 1) / (n * r.H)
        rel = abs(r.u_nu - target) / abs(target)
        worst = max(worst, rel)
        ok = ok and rel <= rtol
    if not any(r.H > 0 for r in s.boundary):
        ok = False
    return SerrinData(
        c=s.c,
        H_out=s.boundary[-1].H,
        overdet_holds=overdet,
        cor23_holds=ok,
        cor23_skipped=skipped,
        max_cor23_residual=worst,
    )


def _volume_integrand(s: RadialSolution, name: str) -> Callable:
    n, fs = s.n, s.model.fiber_scalar

    def jet(t):
        return s.model.warp.derivatives(t)

    table = {
        "1": lambda t: np.ones_like(t),
        "u": lambda t: s.profile(t)[0],
        "u^2": lambda t: s.profile(t)[0] ** 2,
        "phi": lambda t: jet(t)[1],
        "phi*u": lambda t: jet(t)[1] * s.profile(t)[0],
        "phi*u^2": lambda t: jet(t)[1] * s.profile(t)[0] ** 2,
        "|grad u|^2": lambda t: s.profile(t)[1] ** 2,
    }

    def u2_lap_phi(t):
        f, f1, f2, f3 = jet(t)
        return s.profile(t)[0] ** 2 * (f3 + (n - 1) * (f1 / f) * f2)

    def u2_phi_r(t):
        f, f1, f2, f3 = jet(t)
        _, _, scalar, xr = curvature_from_jet(n, fs, f, f1, f2, f3)
        return s.profile(t)[0] ** 2 * (f1 * scalar + 0.5 * xr)

    table["u^2*lap_phi"] = u2_lap_phi
    table["u^2*(phi*R+XR/2)"] = u2_phi_r
    if name not in table:
        raise UsageError(f"unknown volume integrand {name!r}; choose from {sorted(table)}")
    return table[name]


def _boundary_value(s: RadialSolution, r: BoundaryRecord, name) -> float:
    if callable(name):
        return float(name(r))
    f, f1, _, _ = s.model.warp.derivatives(r.t)
    if name == "1":
        return 1.0
    if name == "1/H":
        if _h_vanishes(r.H):
            raise PoleError("1/H with H = 0 on a boundary component")
        return 1.0 / r.H
    if name == "u_nu":
        return r.u_nu
    if name == "u_nu^2":
        return r.u_nu**2
    if name == "<X,nu>":
        return r.orientation * float(f)
    if name == "phi":
        return float(f1)
    if name == "H*u_nu^2":
        return r.H * r.u_nu**2
    raise UsageError(f"unknown boundary integrand {name!r}")


VOLUME_INTEGRANDS = ("1", "u", "u^2", "phi", "phi*u", "phi*u^2", "|grad u|^2", "u^2*lap_phi", "u^2*(phi*R+XR/2)")
BOUNDARY_INTEGRANDS = ("1", "1/H", "u_nu", "u_nu^2", "<X,nu>", "phi", "H*u_nu^2")


def integrate_radial(s: RadialSolution, integrand, domain: str = "volume") -> float:
    """Integral over the domain or its boundary, times ``s.fiber_volume``.

    ``integrand`` is a catalog name or a callable: ``t -> value`` for volume
    integrals (the ``f^{n-1}`` weight is applied here), ``BoundaryRecord -> value``
    for boundary integrals. Volume integrals use adaptive Gauss-Kronrod
    quadrature at relative tolerance ``1e-12``.
    """
    n = s.n
    if domain == "boundary":
        total = 0.0
        for r in s.boundary:
            f = float(s.model.warp.derivatives(r.t)[0])
            total += f ** (n - 1) * _boundary_value(s, r, integrand)
        return total * s.fiber_volume
    if domain != "volume":
        raise UsageError("domain must be 'volume' or 'boundary'")
    fn = integrand if callable(integrand) else _volume_integrand(s, integrand)
    return integrate_weighted(s.model, fn, s.a, s.b) * s.fiber_volume


def integrate_weighted(model: WarpModel, fn: Callable, a: float, b: float) -> float:
    """``∫_a^b fn(t) f(t)^{n-1} dt`` by adaptive Gauss-Kronrod quadrature."""
    n = model.n

    def weighted(t):
        f = model.warp.derivatives(t)[0]
        return float(fn(np.asarray(t)) * f ** (n - 1))

    # full_output reports trouble through ier instead of the (process-global) warnings
    # filters, which keeps concurrent sweeps deterministic
    out = quad(weighted, a, b, epsrel=QUAD_RTOL, epsabs=QUAD_ATOL, limit=400, full_output=1)
    value = out[0]
    if len(out) > 3:  # ier != 0: relax to the fallback tolerance
        value = quad(weighted, a, b, epsrel=1e-10, epsabs=QUAD_ATOL, limit=1000, full_output=1)[0]
    return float(value)
