"""Integral identities and inequalities for ``Δu + nku = -1``, checked on computed solutions.

Every verifier evaluates its two sides along separate routes (volume
quadrature against boundary sums, or two algebraically different integrands)
and returns an :class:`~serrinlab.report.IdentityReport`. Verifiers accept a
:class:`~serrinlab.radial.RadialSolution` and, where first derivatives
suffice, a :class:`~serrinlab.fem2d.FemSolution`.

A verifier whose hypotheses are not satisfied returns
``hypothesis_met=False`` rather than a failure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError, UnsupportedError, UsageError
from .expr import Expression
from .fem2d import FemSolution, conformal_factor, convergence_rate, recovered_gradients
from .geometry import WarpModel, curvature_from_jet
from .radial import BallProblem, RadialSolution, SlabProblem, integrate_weighted
from .report import IdentityReport

RADIAL_TOL = 1e-8
CURVATURE_TOL = 1e-8
IDENTITY_NAMES = (
    "reilly",
    "lemma22",
    "hk",
    "soap",
    "bochner",
    "pohozaev",
    "pohozaev-general",
    "main-condition",
    "minkowski",
    "minkowski-proof",
    "pfunction",
    "nonexistence",
)


# --- shared plumbing ---------------------------------------------------------------


@dataclass(frozen=True)
class BoundaryArrays:
    """Boundary samples with quadrature weights (``f^{n-1}`` per slice, or ``ds`` per edge)."""

    weight: np.ndarray
    u_nu: np.ndarray
    H: np.ndarray
    Xnu: np.ndarray
    phi: np.ndarray

    def integrate(self, values) -> float:
        return float(np.sum(self.weight * np.asarray(values, dtype=float)))


def boundary_arrays(solution) -> BoundaryArrays:
    if isinstance(solution, FemSolution):
        tr = solution.trace
        return BoundaryArrays(tr.ds, tr.u_nu, tr.H, tr.Xnu, tr.phi)
    if isinstance(solution, RadialSolution):
        recs = solution.boundary
        t = np.array([r.t for r in recs])
        f, f1, _, _ = solution.model.warp.derivatives(t)
        orient = np.array([r.orientation for r in recs], dtype=float)
        return BoundaryArrays(
            weight=f ** (solution.n - 1) * solution.fiber_volume,
            u_nu=np.array([r.u_nu for r in recs]),
            H=np.array([r.H for r in recs]),
            Xnu=orient * f,
            phi=np.asarray(f1, dtype=float),
        )
    raise UsageError(f"expected a radial or FEM solution, got {type(solution).__name__}")


def _volume(solution, integrand) -> float:
    """Volume integral by name (both solution kinds) or radial callable ``t -> value``."""
    return solution.integral(integrand, "volume")


def _radial_only(solution, what: str) -> RadialSolution:
    if not isinstance(solution, RadialSolution):
        raise UnsupportedError(f"{what} needs second derivatives and is available for radial solutions only")
    return solution


def _passes(lhs: float, rhs: float, tol: float, scale: float) -> bool:
    return abs(lhs - rhs) <= tol * max(abs(lhs), abs(rhs), scale, 1e-300)


def _fem_tol(solution) -> float:
    # first-order boundary fluxes: relative error of a few h at most
    return 5.0 * solution.h


def _default_tol(solution, tol: float | None) -> float:
    if tol is not None:
        return tol
    return _fem_tol(solution) if isinstance(solution, FemSolution) else RADIAL_TOL


def _radial_grid(s: RadialSolution, m: int = 200) -> np.ndarray:
    """Interior sample points, pole excluded."""
    t = np.linspace(s.a, s.b, m + 2)[1:-1]
    return t[t > 0]


def constant_scalar_curvature(model: WarpModel, a: float, b: float, tol: float = CURVATURE_TOL) -> bool:
    """``R = n(n-1)k`` at 101 samples of ``[a, b]`` (pole excluded)."""
    t = np.linspace(a, b, 101)
    t = t[t > 0]
    f, f1, f2, f3 = model.warp.derivatives(t)
    _, _, scalar, _ = curvature_from_jet(model.n, model.fiber_scalar, f, f1, f2, f3)
    target = model.n * (model.n - 1) * model.k
    return bool(np.max(np.abs(scalar - target)) <= tol * max(1.0, abs(target)))


def ricci_lower_bound(model: WarpModel, a: float, b: float, tol: float = CURVATURE_TOL) -> bool:
    """``Ric >= (n-1)k g`` at 101 samples of ``[a, b]``."""
    t = np.linspace(a, b, 101)
    t = t[t > 0]
    f, f1, f2, f3 = model.warp.derivatives(t)
    ric_r, ric_f, _, _ = curvature_from_jet(model.n, model.fiber_scalar, f, f1, f2, f3)
    bound = (model.n - 1) * model.k - tol * max(1.0, abs(model.k))
    return bool(np.all(ric_r >= bound) and np.all(ric_f >= bound))


def _solution_hypotheses(solution) -> tuple[bool, bool]:
    """(Ricci bound, constant scalar curvature); FEM domains live in space forms."""
    if isinstance(solution, FemSolution):
        return True, True
    m, a, b = solution.model, solution.a, solution.b
    return ricci_lower_bound(m, a, b), constant_scalar_curvature(m, a, b)


def overdetermined_holds(solution, rtol: float | None = None) -> bool:
    """``|u_ν|`` constant on the boundary to relative ``rtol``."""
    bd = boundary_arrays(solution)
    rtol = (1e-9 if isinstance(solution, RadialSolution) else _fem_tol(solution)) if rtol is None else rtol
    mags = np.abs(bd.u_nu)
    return bool(np.max(mags) - np.min(mags) <= rtol * np.max(mags))


def _overdetermined_constant(solution) -> float:
    bd = boundary_arrays(solution)
    return float(bd.integrate(np.abs(bd.u_nu)) / bd.integrate(1.0))


# --- radial test functions ---------------------------------------------------------


def radial_testfn(testfn, solution: RadialSolution | None = None) -> Callable:
    """Normalize a test function to ``t -> (g, g', g'', g''')``.

    Accepts an expression string in ``t``, an :class:`Expression`, the string
    ``"u"`` (the solution profile), or a callable already returning the jet.
    """
    if isinstance(testfn, str):
        if testfn.strip() == "u":
            if solution is None:
                raise UsageError("testfn 'u' needs a solution")
            return solution.profile
        testfn = Expression(testfn)
    if isinstance(testfn, Expression):
        expr = testfn
        return lambda t: expr.derivatives(t, 3)
    if callable(testfn):
        return testfn
    raise UsageError("testfn must be an expression string, Expression or callable")


def _domain_of(model: WarpModel, ball) -> tuple[float, float, list[tuple[float, int]], float]:
    """(a, b, [(t, orientation)], fiber_volume) for a radial problem or solution."""
    if isinstance(ball, RadialSolution):
        return ball.a, ball.b, [(r.t, r.orientation) for r in ball.boundary], ball.fiber_volume
    if isinstance(ball, BallProblem):
        return 0.0, ball.radius, [(ball.radius, 1)], 1.0
    if isinstance(ball, SlabProblem):
        return ball.a, ball.b, [(ball.a, -1), (ball.b, 1)], 1.0
    if isinstance(ball, (int, float)):
        if not model.has_pole:
            raise UsageError("a bare radius needs a model with a pole")
        return 0.0, float(ball), [(float(ball), 1)], 1.0
    raise UsageError("ball must be a radial solution, BallProblem, SlabProblem or radius")


# --- Reilly formula and its consequences --------------------------------------------


def verify_reilly_radial(model: WarpModel, ball, testfn, tol: float = RADIAL_TOL) -> IdentityReport:
    """Reilly's formula for a radial ``g`` (constant on each boundary slice).

    LHS ``∫[(n-1)/n (Δg)^2 - |∇̊²g|^2]``; RHS ``∫_∂ H g_ν^2 + ∫ Ric(∇g, ∇g)``.
    """
    a, b, slices, vol = _domain_of(model, ball)
    jet = radial_testfn(testfn, ball if isinstance(ball, RadialSolution) else None)
    n = model.n
    if a == 0.0:
        g1_pole = float(np.asarray(jet(np.array([0.0]))[1])[0])
        if abs(g1_pole) > 1e-10:
            raise DomainError(f"test function is not smooth at the pole (g'(0) = {g1_pole:.3e})")

    def lhs_density(t):
        f, f1, _, _ = model.warp.derivatives(t)
        g, g1, g2, _ = jet(t)
        q = f1 / f
        lap = g2 + (n - 1) * q * g1
        traceless = (n - 1) / n * (g2 - q * g1) ** 2
        return (n - 1) / n * lap**2 - traceless

    def ric_density(t):
        f, _, f2, _ = model.warp.derivatives(t)
        return -(n - 1) * f2 / f * jet(t)[1] ** 2

    lhs = integrate_weighted(model, lhs_density, a, b) * vol
    ric = integrate_weighted(model, ric_density, a, b) * vol
    bnd = 0.0
    for t, orient in slices:
        f, f1, _, _ = model.warp.derivatives(np.array([t]))
        H = orient * (n - 1) * f1[0] / f[0]
        g_nu = orient * float(jet(np.array([t]))[1][0])
        bnd += f[0] ** (n - 1) * H * g_nu**2 * vol
    rhs = bnd + ric
    scale = abs(bnd) + abs(ric)
    return IdentityReport(
        name="reilly",
        lhs=lhs,
        rhs=rhs,
        passed=_passes(lhs, rhs, tol, scale),
        tol=tol,
        terms={"boundary_H_gnu2": bnd, "ricci": ric},
    )


def _lemma22_volume(s: RadialSolution) -> tuple[float, float]:
    """``(∫|∇̊²u|², ∫[Ric - (n-1)k](∇u, ∇u))`` by quadrature."""
    n, k, model = s.n, s.k, s.model

    def traceless(t):
        f, f1, _, _ = model.warp.derivatives(t)
        _, u1, u2, _ = s.profile(t)
        return (n - 1) / n * (u2 - f1 / f * u1) ** 2

    def ricci_excess(t):
        f, _, f2, _ = model.warp.derivatives(t)
        return (-(n - 1) * f2 / f - (n - 1) * k) * s.profile(t)[1] ** 2

    return s.integral(traceless), s.integral(ricci_excess)


def verify_lemma22(model: WarpModel | None, solution, tol: float = RADIAL_TOL) -> IdentityReport:
    """Reilly applied to ``u``: interior Hessian/Ricci terms against ``-(1/n)∫_∂ u_ν[(n-1)+nHu_ν]``."""
    s = _radial_only(solution, "lemma22")
    n = s.n
    hess, ric = _lemma22_volume(s)
    bd = boundary_arrays(s)
    rhs = -bd.integrate(bd.u_nu * ((n - 1) + n * bd.H * bd.u_nu)) / n
    # natural size of the boundary side, for equality cases where both vanish
    scale = bd.integrate(np.abs(bd.u_nu)) * (n - 1) / n + bd.integrate(np.abs(bd.H) * bd.u_nu**2)
    lhs = hess + ric
    return IdentityReport(
        name="lemma22",
        lhs=lhs,
        rhs=rhs,
        passed=_passes(lhs, rhs, tol, scale),
        tol=tol,
        terms={"traceless_hessian": hess, "ricci_excess": ric, "boundary_scale": scale},
        flags={"both_vanish": max(abs(lhs), abs(rhs)) <= tol * scale},
    )


def verify_heintze_karcher(solution, tol: float | None = None) -> IdentityReport:
    """``(n-1)/n ∫_∂ 1/H >= Vol + nk∫u``; lhs is the boundary side, rhs the volume side.

    In the radial case the exact decomposition behind the inequality is also
    checked: the sum of three nonnegative terms (traceless Hessian, Ricci
    excess, ``(1/n²)∫_∂ [(n-1)+nHu_ν]²/H``) equals ``(n-1)/n`` times the gap.
    """
    tol = _default_tol(solution, tol)
    n, k = solution.n, solution.k
    bd = boundary_arrays(solution)
    ricci_ok, _ = _solution_hypotheses(solution)
    h_positive = bool(np.all(bd.H > 0))
    terms: dict[str, float] = {}
    flags: dict[str, bool] = {"H_positive": h_positive, "ricci_bound": ricci_ok}
    if not h_positive:
        return IdentityReport("hk", math.nan, math.nan, False, hypothesis_met=False, tol=tol, flags=flags)
    lhs = (n - 1) / n * bd.integrate(1.0 / bd.H)
    volume = _volume(solution, "1")
    int_u = _volume(solution, "u")
    rhs = volume + n * k * int_u
    gap = lhs - rhs
    scale = volume + n * abs(k) * abs(int_u)
    terms.update({"gap": gap, "volume": volume, "int_u": int_u, "relative_gap": gap / volume})
    passed = gap >= -tol * scale
    flags["equality"] = abs(gap) <= tol * scale
    if isinstance(solution, RadialSolution):
        hess, ric = _lemma22_volume(solution)
        defect = bd.integrate(((n - 1) + n * bd.H * bd.u_nu) ** 2 / bd.H) / n**2
        decomposition = hess + ric + defect
        terms.update({"traceless_hessian": hess, "ricci_excess": ric, "boundary_defect": defect,
                      "decomposition_lhs": decomposition, "decomposition_rhs": (n - 1) / n * gap})
        ok = _passes(decomposition, (n - 1) / n * gap, tol, (n - 1) / n * scale)
        flags["decomposition"] = ok
        passed = passed and ok
    return IdentityReport("hk", lhs, rhs, passed, hypothesis_met=ricci_ok, tol=tol, terms=terms, flags=flags)


def verify_soap_bubble(solution, tol: float | None = None) -> IdentityReport:
    """Soap-bubble integral ``∫_∂ (H_0 - H)u_ν² >= 0`` and its four-term rearrangement.

    ``c = -(n+1)/(n|∂Ω|) ∫_∂ u_ν`` and ``H_0 = 1/c``. The report's lhs is
    ``-(1/n)∫_∂ u_ν[(n-1)+nHu_ν]``, taken from the interior Hessian/Ricci
    integrals for radial solutions and from the boundary trace otherwise; rhs
    is the rearranged sum. ``terms["c_closure"]`` compares ``c`` with its
    volume expression ``(n+1)(Vol + nk∫u)/(n|∂Ω|)``.
    """
    tol = _default_tol(solution, tol)
    n, k = solution.n, solution.k
    bd = boundary_arrays(solution)
    ricci_ok, _ = _solution_hypotheses(solution)
    area = bd.integrate(1.0)
    flux = bd.integrate(bd.u_nu)
    c = -(n + 1) / (n * area) * flux
    c_volume = (n + 1) / (n * area) * (_volume(solution, "1") + n * k * _volume(solution, "u"))
    flags = {"ricci_bound": ricci_ok, "c_positive": c > 0}
    if c <= 0:
        return IdentityReport("soap", math.nan, math.nan, False, hypothesis_met=False, tol=tol,
                              terms={"c": c}, flags=flags)
    h0 = 1.0 / c
    t1 = (n + 1) / n * flux
    t2 = c * area
    t3 = -bd.integrate((bd.u_nu + c) ** 2) / c
    t4 = bd.integrate((h0 - bd.H) * bd.u_nu**2)
    rhs = t1 + t2 + t3 + t4
    if isinstance(solution, RadialSolution):
        hess, ric = _lemma22_volume(solution)
        lhs = hess + ric
    else:
        lhs = -bd.integrate(bd.u_nu * ((n - 1) + n * bd.H * bd.u_nu)) / n
    scale = abs(t1) + abs(t2) + abs(t3) + abs(t4)
    terms = {
        "c": c,
        "H0": h0,
        "soap_integral": t4,
        "flux_term": t1,
        "c_area": t2,
        "square_term": t3,
        "c_volume": c_volume,
        "c_closure": abs(c - c_volume) / abs(c_volume),
        "max_H0_minus_H": float(np.max(h0 - bd.H)),
        "min_H0_minus_H": float(np.min(h0 - bd.H)),
    }
    nonneg = t4 >= -tol * scale
    flags.update({"integral_nonnegative": nonneg, "rearrangement": _passes(lhs, rhs, tol, scale)})
    return IdentityReport(
        "soap", lhs, rhs, nonneg and flags["rearrangement"], hypothesis_met=ricci_ok, tol=tol, terms=terms, flags=flags
    )


# --- closed conformal field -----------------------------------------------------


def bochner_sides(model: WarpModel, jet: Callable, t) -> tuple[np.ndarray, np.ndarray]:
    """Both sides of ``Δ<X,∇g> = (2-n)<∇φ,∇g> + 2φΔg + <∇Δg, X>`` for radial ``g``."""
    n = model.n
    f, f1, f2, f3 = model.warp.derivatives(t)
    _, g1, g2, g3 = jet(t)
    q = f1 / f
    # left: w = f g' expanded by the product rule
    w1 = f1 * g1 + f * g2
    w2 = f2 * g1 + 2 * f1 * g2 + f * g3
    lhs = w2 + (n - 1) * q * w1
    # right: Laplacian of g and its radial derivative
    lap = g2 + (n - 1) * q * g1
    dlap = g3 + (n - 1) * ((f2 / f - q * q) * g1 + q * g2)
    rhs = (2 - n) * f2 * g1 + 2 * f1 * lap + f * dlap
    return np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float)


def verify_bochner(model: WarpModel, testfn, t_samples=None, tol: float = RADIAL_TOL) -> IdentityReport:
    """Pointwise Bochner-type identity for ``X = f ∂_t`` at ``t_samples`` (pole excluded).

    Passes when ``max |lhs - rhs| / max(1, |lhs|, |rhs|) <= tol``; the report
    carries the values at the worst sample.
    """
    if t_samples is None:
        lo, hi = model.interval
        lo = max(lo, -1.0) if math.isinf(lo) else lo
        hi = min(hi, lo + 2.0) if math.isinf(hi) else hi
        t_samples = np.linspace(lo, hi, 52)[1:-1]
    t = np.asarray(t_samples, dtype=float).ravel()
    if model.has_pole:
        t = t[t != 0.0]
    if t.size == 0:
        raise UsageError("no admissible sample points")
    jet = radial_testfn(testfn)
    lhs, rhs = bochner_sides(model, jet, t)
    rel = np.abs(lhs - rhs) / np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    worst = int(np.argmax(rel))
    return IdentityReport(
        "bochner",
        lhs[worst],
        rhs[worst],
        bool(rel[worst] <= tol),
        tol=tol,
        terms={"max_residual": float(rel[worst]), "t_worst": float(t[worst]), "samples": float(t.size)},
    )


def _u2_lap_phi(solution) -> float:
    if isinstance(solution, FemSolution):
        # constant curvature surface: Δφ = -2kφ
        return -2 * solution.k * _volume(solution, "phi*u^2")
    return _volume(solution, "u^2*lap_phi")


def verify_pohozaev(solution, mode: str = "overdetermined", tol: float | None = None) -> IdentityReport:
    """Pohozaev identity for the conformal field.

    ``overdetermined``: ``(n+2)/n ∫φu = c²∫φ - (n-2)/(2n(n-1)) ∫u²(φR + X(R)/2) - 2k∫φu²``,
    requiring ``|∇u| = c`` on the boundary.
    ``general``: ``(n+2)/n ∫φu = (1/n)∫_∂ <X,ν>u_ν² + (n-2)/(2n) ∫u²Δφ - 2k∫φu²``,
    for any solution vanishing on the boundary.
    """
    if mode not in ("overdetermined", "general"):
        raise UsageError("mode must be 'overdetermined' or 'general'")
    tol = _default_tol(solution, tol)
    n, k = solution.n, solution.k
    lhs = (n + 2) / n * _volume(solution, "phi*u")
    quad_term = -2 * k * _volume(solution, "phi*u^2")
    name = "pohozaev" if mode == "overdetermined" else "pohozaev-general"
    if mode == "overdetermined":
        overdet = overdetermined_holds(solution)
        c = solution.c if isinstance(solution, RadialSolution) else _overdetermined_constant(solution)
        lead = c**2 * _volume(solution, "phi")
        if isinstance(solution, FemSolution):
            # R = 2k and X(R) = 0 on a constant curvature surface; the factor n - 2 vanishes
            curv = -(n - 2) / (2 * n * (n - 1)) * 2 * k * _volume(solution, "phi*u^2")
        else:
            curv = -(n - 2) / (2 * n * (n - 1)) * _volume(solution, "u^2*(phi*R+XR/2)")
        terms = {"c": c, "c2_int_phi": lead, "curvature_term": curv, "k_term": quad_term}
    else:
        overdet = None
        bd = boundary_arrays(solution)
        lead = bd.integrate(bd.Xnu * bd.u_nu**2) / n
        curv = (n - 2) / (2 * n) * _u2_lap_phi(solution)
        terms = {"boundary_Xnu_unu2": lead, "lap_phi_term": curv, "k_term": quad_term}
    rhs = lead + curv + quad_term
    scale = abs(lead) + abs(curv) + abs(quad_term)
    return IdentityReport(
        name, lhs, rhs, _passes(lhs, rhs, tol, scale), hypothesis_met=overdet is not False, tol=tol, terms=terms,
        flags={} if overdet is None else {"overdetermined": overdet},
    )


def main_condition_integrands(model: WarpModel, t) -> tuple[np.ndarray, np.ndarray]:
    """Per unit ``u²``: ``φ(-R + n(n-1)k) - X(R)/2`` and ``(n-1)(Δφ + nkφ)``."""
    n, k = model.n, model.k
    f, f1, f2, f3 = model.warp.derivatives(t)
    _, _, scalar, xr = curvature_from_jet(n, model.fiber_scalar, f, f1, f2, f3)
    curvature_form = f1 * (-scalar + n * (n - 1) * k) - 0.5 * xr
    lap_phi = f3 + (n - 1) * (f1 / f) * f2
    return curvature_form, (n - 1) * (lap_phi + n * k * f1)


def verify_main_condition(solution, model: WarpModel | None = None, tol: float = RADIAL_TOL) -> IdentityReport:
    """Curvature form ``∫u²[φ(-R+n(n-1)k) - X(R)/2]`` against ``(n-1)∫u²(Δφ+nkφ)``.

    Also checks ``∫u²(Δφ+nkφ) = (2/(n-1))∫u[Ric(X,∇u) - (n-1)k<∇u,X>]`` and
    reports the sign and the pointwise size of the integrand (which vanishes
    on Einstein models).
    """
    s = _radial_only(solution, "main-condition")
    model = s.model if model is None else model
    n, k = model.n, model.k

    def curvature_form(t):
        return s.profile(t)[0] ** 2 * main_condition_integrands(model, t)[0]

    def lap_form(t):
        f, f1, f2, f3 = model.warp.derivatives(t)
        return s.profile(t)[0] ** 2 * (f3 + (n - 1) * (f1 / f) * f2 + n * k * f1)

    def ricci_form(t):
        f, _, f2, _ = model.warp.derivatives(t)
        u, u1, _, _ = s.profile(t)
        return u * f * u1 * (-(n - 1) * f2 / f - (n - 1) * k)

    def magnitude(t):
        f, f1, f2, f3 = model.warp.derivatives(t)
        _, _, _, xr = curvature_from_jet(n, model.fiber_scalar, f, f1, f2, f3)
        # size of the separate pieces of R, which cancel in flat or Einstein models
        pieces = np.abs(model.fiber_scalar / f**2) + 2 * (n - 1) * np.abs(f2 / f) + (n - 1) * (n - 2) * (f1 / f) ** 2
        return s.profile(t)[0] ** 2 * (np.abs(f1) * (pieces + n * (n - 1) * abs(k)) + 0.5 * np.abs(xr))

    i6 = integrate_weighted(model, curvature_form, s.a, s.b) * s.fiber_volume
    i10 = integrate_weighted(model, lap_form, s.a, s.b) * s.fiber_volume
    cor = 2 / (n - 1) * integrate_weighted(model, ricci_form, s.a, s.b) * s.fiber_volume
    scale = integrate_weighted(model, magnitude, s.a, s.b) * s.fiber_volume
    t = _radial_grid(s)
    pointwise = float(np.max(np.abs(s.profile(t)[0] ** 2 * main_condition_integrands(model, t)[0])))
    equivalence = _passes(i6, (n - 1) * i10, tol, scale)
    ricci_route = _passes(i10, cor, tol, scale / (n - 1))
    return IdentityReport(
        "main-condition",
        i6,
        (n - 1) * i10,
        equivalence and ricci_route,
        tol=tol,
        terms={"curvature_form": i6, "laplacian_form": i10, "ricci_form": cor, "pointwise_max": pointwise, "scale": scale},
        flags={"nonnegative": i10 >= -tol * scale, "ricci_route": ricci_route, "einstein_vanishing": pointwise <= 1e-10},
    )


def verify_minkowski(solution, form: str = "main", tol: float | None = None) -> IdentityReport:
    """Minkowski-type identity ``∫_∂ <X,ν>((n-1) - cnH) = 0`` (``form="main"``) or the
    identity used to prove it, ``∫_∂ φu_ν + ∫φ = -∫u(Δφ + nkφ)`` (``form="proof"``).

    The main form needs constant scalar curvature ``n(n-1)k`` and ``|∇u| = c``;
    ``terms["pointwise_max"]`` is the largest boundary value of the integrand.
    For ``k = 0`` with constant ``H`` and ``<X,ν> > 0`` the implied value
    ``H = ((n-1)/n)|∂Ω|/|Ω|`` is reported as ``H_predicted``.
    """
    if form not in ("main", "proof"):
        raise UsageError("form must be 'main' or 'proof'")
    tol = _default_tol(solution, tol)
    n, k = solution.n, solution.k
    bd = boundary_arrays(solution)
    _, const_r = _solution_hypotheses(solution)
    if form == "proof":
        boundary_part = bd.integrate(bd.phi * bd.u_nu)
        volume_part = _volume(solution, "phi")
        lhs = boundary_part + volume_part
        if isinstance(solution, FemSolution):
            rhs = 0.0  # Δφ = -2kφ on a constant curvature surface
        else:
            model = solution.model

            def density(t):
                f, f1, f2, f3 = model.warp.derivatives(t)
                return solution.profile(t)[0] * (f3 + (n - 1) * (f1 / f) * f2 + n * k * f1)

            rhs = -solution.integral(density)
        scale = abs(boundary_part) + abs(volume_part)
        # the right side vanishes only on space forms; elsewhere it is still reported
        return IdentityReport(
            "minkowski-proof", lhs, rhs, _passes(lhs, rhs, tol, scale), hypothesis_met=const_r, tol=tol,
            terms={"boundary_phi_unu": boundary_part, "volume_phi": volume_part},
            flags={"constant_scalar_curvature": const_r},
        )
    overdet = overdetermined_holds(solution)
    c = solution.c if isinstance(solution, RadialSolution) else _overdetermined_constant(solution)
    integrand = bd.Xnu * ((n - 1) - c * n * bd.H)
    lhs = bd.integrate(integrand)
    scale = bd.integrate(np.abs(bd.Xnu)) * (n - 1)
    terms = {"c": c, "pointwise_max": float(np.max(np.abs(integrand)))}
    h_const = bool(np.ptp(bd.H) <= 1e-9 * max(1.0, float(np.max(np.abs(bd.H)))))
    if k == 0 and h_const and np.all(bd.Xnu > 0):
        terms["H_predicted"] = (n - 1) / n * bd.integrate(1.0) / _volume(solution, "1")
        terms["H"] = float(np.mean(bd.H))
    return IdentityReport(
        "minkowski", lhs, 0.0, _passes(lhs, 0.0, tol, scale), hypothesis_met=const_r and overdet, tol=tol,
        terms=terms, flags={"constant_scalar_curvature": const_r, "overdetermined": overdet,
                            "strict_sign_reading": True},
    )


def _p_jet(s: RadialSolution, t):
    """``P``, ``P'`` and ``ΔP`` for ``P = u'^2 + (2/n)u + ku^2``."""
    n, k = s.n, s.k
    u, u1, u2, u3 = s.profile(t)
    p = u1**2 + 2 / n * u + k * u**2
    p1 = 2 * u1 * u2 + 2 / n * u1 + 2 * k * u * u1
    p2 = 2 * u2**2 + 2 * u1 * u3 + 2 / n * u2 + 2 * k * (u1**2 + u * u2)
    f, f1, _, _ = s.model.warp.derivatives(t)
    return p, p1, p2 + (s.n - 1) * f1 / f * p1


def verify_pfunction(solution, tol: float | None = None) -> IdentityReport:
    """P-function ``P = |∇u|² + (2/n)u + ku²``.

    Radial: ``ΔP >= 0`` on a grid (when ``Ric >= (n-1)k``), constancy on balls,
    and the boundary relation ``P_ν = -(2/n)u_ν((n-1) + nHu_ν)``, with
    ``P_ν`` from direct differentiation as lhs and the formula as rhs
    (outer boundary; others in ``terms``).
    FEM: discrete maximum principle, ``max P`` inside at most ``max P`` on the
    boundary plus ``4 h λ_max max|P|``.
    """
    tol = _default_tol(solution, tol)
    n = solution.n
    if isinstance(solution, FemSolution):
        mesh, field = solution.mesh, solution.field
        grad = recovered_gradients(mesh, field)
        lam = conformal_factor(mesh.nodes, solution.k)
        u = field.values
        p = np.sum(grad**2, axis=1) / lam**2 + 2 / n * u + solution.k * u**2
        on_bnd = np.zeros(len(u), bool)
        on_bnd[mesh.boundary_nodes] = True
        # u = 0 on the boundary, so P = u_ν² there; the edge trace is sharper than nodal recovery
        inner, outer = float(np.max(p[~on_bnd])), float(np.max(solution.trace.u_nu**2))
        # first-order slack in the geodesic mesh size
        eps = 4.0 * solution.h * float(np.max(lam)) * float(np.max(np.abs(p)))
        return IdentityReport(
            "pfunction", inner, outer, inner <= outer + eps, tol=eps,
            terms={"interior_max": inner, "boundary_max": outer, "epsilon": eps, "spread": float(np.ptp(p))},
            flags={"max_principle": inner <= outer + eps},
        )
    s = solution
    ricci_ok = ricci_lower_bound(s.model, s.a, s.b)
    t = _radial_grid(s, 400)
    p, _, lap_p = _p_jet(s, t)
    p_scale = max(float(np.max(np.abs(p))), 1e-300)
    lap_scale = 1.0 + float(np.max(np.abs(lap_p)))
    min_lap = float(np.min(lap_p))
    subharmonic = min_lap >= -tol * lap_scale
    spread = float(np.ptp(p)) / p_scale
    terms = {"min_lap_P": min_lap, "P_spread": spread, "P_mean": float(np.mean(p))}
    ok = True
    lhs = rhs = math.nan
    for r in s.boundary:
        _, p1, _ = _p_jet(s, np.array([r.t]))
        direct = r.orientation * float(p1[0])
        formula = -2 / n * r.u_nu * ((n - 1) + n * r.H * r.u_nu)
        size = 2 / n * abs(r.u_nu) * ((n - 1) + n * abs(r.H * r.u_nu))
        good = _passes(direct, formula, tol, size)
        ok = ok and good
        terms[f"P_nu_direct@{r.t:g}"] = direct
        terms[f"P_nu_formula@{r.t:g}"] = formula
        lhs, rhs = direct, formula
    flags = {"boundary_relation": ok, "subharmonic": subharmonic, "ricci_bound": ricci_ok}
    if s.kind == "ball":
        flags["constant"] = spread <= 1e-9
        terms["c_squared"] = s.c**2
    passed = ok and (subharmonic or not ricci_ok)
    return IdentityReport("pfunction", lhs, rhs, passed, tol=tol, terms=terms, flags=flags)


def nonexistence_threshold(perimeter: float, volume: float, n: int) -> float:
    """``T = -(|∂Ω|²/|Ω|²)((n-1)/(2(n-2)))((n+2)²/n)``."""
    if n == 2:
        raise UnsupportedError("the scalar curvature bound needs n >= 3")
    return -((perimeter / volume) ** 2) * ((n - 1) / (2 * (n - 2))) * ((n + 2) ** 2 / n)


def check_nonexistence_bound(geometry, R_scalar: float | None = None, tol: float = 1e-9) -> IdentityReport:
    """Compare the scalar curvature with the threshold below which no overdetermined solution exists.

    ``geometry`` is a mapping with ``perimeter``, ``volume``, ``n`` or a
    solution object. ``terms["discriminant"]`` is the discriminant of
    ``y(u) = (n-2)R/(2n(n-1)) u² + (n+2)/n u - c²`` with ``c = |Ω|/|∂Ω|``; it
    vanishes when ``R`` equals the threshold.
    """
    hypothesis = True
    if isinstance(geometry, (RadialSolution, FemSolution)):
        bd = boundary_arrays(geometry)
        perimeter, volume, n = bd.integrate(1.0), _volume(geometry, "1"), geometry.n
        _, hypothesis = _solution_hypotheses(geometry)
        if R_scalar is None:
            R_scalar = n * (n - 1) * geometry.k
    else:
        perimeter, volume, n = float(geometry["perimeter"]), float(geometry["volume"]), int(geometry["n"])
    if R_scalar is None:
        raise UsageError("R_scalar is required with explicit geometry")
    if perimeter <= 0 or volume <= 0:
        raise UsageError("perimeter and volume must be positive")
    threshold = nonexistence_threshold(perimeter, volume, n)
    c = volume / perimeter
    disc = ((n + 2) / n) ** 2 + 2 * c**2 * (n - 2) * R_scalar / (n * (n - 1))
    margin = R_scalar - threshold
    return IdentityReport(
        "nonexistence",
        R_scalar,
        threshold,
        margin > 0,
        hypothesis_met=hypothesis,
        tol=tol,
        terms={"margin": margin, "discriminant": disc, "isoperimetric_ratio": (perimeter / volume) ** 2, "c": c},
        flags={"boundary_case": abs(margin) <= tol * max(1.0, abs(threshold))},
    )


# --- batch and refinement helpers ---------------------------------------------------


def run_identities(solution, names, tolerances: dict[str, float] | None = None) -> list[IdentityReport]:
    """Run the named verifiers on one solution, in the given order.

    Verifiers that do not apply to the solution kind (second derivatives on
    FEM, the bound for ``n = 2``) are skipped.
    """
    tolerances = tolerances or {}
    radial = isinstance(solution, RadialSolution)
    reports = []
    for name in names:
        tol = tolerances.get(name)
        kw = {} if tol is None else {"tol": tol}
        if name not in IDENTITY_NAMES:
            raise UsageError(f"unknown identity {name!r}; choose from {', '.join(IDENTITY_NAMES)}")
        if name == "reilly" and radial:
            reports.append(verify_reilly_radial(solution.model, solution, "u", **kw))
        elif name == "lemma22" and radial:
            reports.append(verify_lemma22(solution.model, solution, **kw))
        elif name == "hk":
            reports.append(verify_heintze_karcher(solution, **kw))
        elif name == "soap":
            reports.append(verify_soap_bubble(solution, **kw))
        elif name == "bochner" and radial:
            reports.append(verify_bochner(solution.model, solution.profile, _radial_grid(solution, 50), **kw))
        elif name == "pohozaev":
            reports.append(verify_pohozaev(solution, "overdetermined", **kw))
        elif name == "pohozaev-general":
            reports.append(verify_pohozaev(solution, "general", **kw))
        elif name == "main-condition" and radial:
            reports.append(verify_main_condition(solution, **kw))
        elif name == "minkowski":
            reports.append(verify_minkowski(solution, "main", **kw))
        elif name == "minkowski-proof":
            reports.append(verify_minkowski(solution, "proof", **kw))
        elif name == "pfunction":
            reports.append(verify_pfunction(solution, **kw))
        elif name == "nonexistence" and solution.n >= 3:
            reports.append(check_nonexistence_bound(solution, **kw))
    return reports


@dataclass(frozen=True)
class RefinementStudy:
    hs: tuple[float, ...]
    errors: tuple[float, ...]
    rate: float
    monotone: bool

    @property
    def passed(self) -> bool:
        return self.monotone and self.rate >= 1.0


def refinement_study(hs, error: Callable[[float], float]) -> RefinementStudy:
    """Evaluate ``error(h)`` for decreasing ``h`` and fit the convergence rate."""
    hs = tuple(sorted((float(h) for h in hs), reverse=True))
    errors = tuple(abs(float(error(h))) for h in hs)
    monotone = all(e2 < e1 for e1, e2 in zip(errors, errors[1:]))
    return RefinementStudy(hs, errors, convergence_rate(hs, errors), monotone)


__all__ = [
    "BoundaryArrays",
    "IDENTITY_NAMES",
    "RefinementStudy",
    "boundary_arrays",
    "bochner_sides",
    "check_nonexistence_bound",
    "constant_scalar_curvature",
    "main_condition_integrands",
    "nonexistence_threshold",
    "overdetermined_holds",
    "radial_testfn",
    "refinement_study",
    "ricci_lower_bound",
    "run_identities",
    "verify_bochner",
    "verify_heintze_karcher",
    "verify_lemma22",
    "verify_main_condition",
    "verify_minkowski",
    "verify_pfunction",
    "verify_pohozaev",
    "verify_reilly_radial",
    "verify_soap_bubble",
]
