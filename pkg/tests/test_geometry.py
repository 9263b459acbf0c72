import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import warped_curvature_fd
from serrinlab.errors import DegenerateMetricError, DomainError, UsageError
from serrinlab.expr import Expression, ExpressionError, parse
from serrinlab.geometry import (
    WarpModel,
    callable_warp,
    check_einstein,
    conformal_field_defect,
    curvature_sample,
    eval_warp,
    laplacian_of_phi,
    make_warp,
    model_from_name,
    slice_mean_curvature,
    space_form,
    sphere_area,
)


def catalog_models():
    return [
        space_form(3, 0.0),
        space_form(3, 1.0),
        space_form(4, -1.0),
        space_form(2, 0.5),
        model_from_name("exp", 3, -1.0),
        model_from_name("exp", 4, -1.0),
        model_from_name("cosh", 4, -1.0),
        model_from_name("custom:t + 0.1*t^3", 3, 0.0),
        model_from_name("custom:sinh(t) + 0.05*t^2", 4, -1.0, fiber_scalar=6.0),
    ]


def sample_points(model, m=7):
    lo, hi = model.interval
    lo = -1.0 if math.isinf(lo) else lo
    hi = min(hi, lo + 2.0)
    return np.linspace(lo, hi, m + 2)[1:-1]


# --- expressions -------------------------------------------------------------------


def test_expression_grammar_accepts_catalog_functions():
    expr = Expression("sin(t)^2 + cosh(t)/exp(t) - sqrt(t)*pi")
    g, g1 = expr.derivatives(0.7, 1)
    t = 0.7
    assert g == pytest.approx(math.sin(t) ** 2 + math.cosh(t) / math.exp(t) - math.sqrt(t) * math.pi)
    assert g1 == pytest.approx(2 * math.sin(t) * math.cos(t) + (math.sinh(t) - math.cosh(t)) / math.exp(t) - math.pi / (2 * math.sqrt(t)))


@pytest.mark.parametrize("text", ["", "t +", "__import__('os')", "t.real", "x + 1", "foo(t)", "[t]", "t if t else 1"])
def test_expression_grammar_rejects(text):
    with pytest.raises(ExpressionError):
        parse(text)


def test_expression_derivative_order_limit():
    with pytest.raises(ValueError):
        Expression("t").derivatives(1.0, order=5)


# --- warp evaluation ---------------------------------------------------------------


def test_eval_warp_examples():
    assert eval_warp(model_from_name("euclidean", 3, 0.0), 2.0) == (2.0, 1.0, 0.0, 0.0)
    s = math.sqrt(2) / 2
    assert eval_warp(space_form(2, 1.0), math.pi / 4) == pytest.approx((s, s, -s, -s), abs=1e-15)
    c1, s1 = math.cosh(1), math.sinh(1)
    assert eval_warp(model_from_name("cosh", 4, -1.0), 1.0) == pytest.approx((c1, s1, c1, s1), rel=1e-15)


def test_eval_warp_vectorized():
    t = np.array([0.5, 1.0, 1.5])
    f, f1, f2, f3 = eval_warp(space_form(3, -1.0), t)
    np.testing.assert_allclose(f, np.sinh(t))
    np.testing.assert_allclose(f3, np.cosh(t))


def test_eval_warp_errors():
    with pytest.raises(DomainError):
        eval_warp(space_form(3, 1.0), 4.0)
    with pytest.raises(DomainError):
        eval_warp(model_from_name("cosh", 4, -1.0), 0.05)
    bad = WarpModel(3, make_warp("custom:t - 1"), 0.0, 0.0)
    with pytest.raises(DegenerateMetricError):
        eval_warp(bad, 0.5)


def test_callable_warp_uses_richardson_differences():
    warp = callable_warp(lambda t: np.sinh(t) + 0.1 * t**3, (0.0, math.inf))
    model = WarpModel(3, warp, -1.0, 2.0)
    t = np.array([0.3, 1.0, 2.5])
    f, f1, f2, f3 = eval_warp(model, t)
    np.testing.assert_allclose(f1, np.cosh(t) + 0.3 * t**2, rtol=1e-10)
    np.testing.assert_allclose(f2, np.sinh(t) + 0.6 * t, rtol=1e-9)
    np.testing.assert_allclose(f3, np.cosh(t) + 0.6, rtol=1e-8)


def test_cosh_interval_respects_eps():
    assert model_from_name("cosh", 4, -1.0, eps=0.3).interval == (0.3, math.inf)
    with pytest.raises(UsageError):
        make_warp("cosh", eps=0.0)


def test_unknown_warp_rejected():
    with pytest.raises(UsageError):
        make_warp("torus")


# --- curvature ----------------------------------------------------------------------


def test_curvature_examples():
    sph = curvature_sample(space_form(3, 1.0), 0.7)
    assert sph.scalar == pytest.approx(6.0, rel=1e-12)
    flat = curvature_sample(space_form(3, 0.0), 1.0)
    assert flat.scalar == pytest.approx(0.0, abs=1e-14)
    assert flat.ric_radial == 0.0
    ex = curvature_sample(model_from_name("exp", 4, -1.0), 0.3)
    assert (ex.ric_radial, ex.ric_fiber, ex.scalar) == pytest.approx((-3.0, -3.0, -12.0), rel=1e-12)


@pytest.mark.parametrize("model", catalog_models(), ids=lambda m: f"{m.warp.name}-n{m.n}")
def test_curvature_matches_christoffel_oracle(model):
    f = lambda t: float(eval_warp(model, t)[0])  # noqa: E731
    for t in sample_points(model, 3):
        cs = curvature_sample(model, float(t))
        radial, fiber, scalar = warped_curvature_fd(f, model.n, model.fiber_scalar, float(t))
        size = 1.0 + abs(cs.scalar)
        assert cs.ric_radial == pytest.approx(radial, abs=1e-6 * size)
        assert cs.ric_fiber == pytest.approx(fiber, abs=1e-6 * size)
        assert cs.scalar == pytest.approx(scalar, abs=1e-6 * size)


@pytest.mark.parametrize("model", catalog_models(), ids=lambda m: f"{m.warp.name}-n{m.n}")
def test_trace_identity_and_phi_relation(model):
    t = sample_points(model, 100)
    cs = curvature_sample(model, t)
    np.testing.assert_allclose(cs.scalar, cs.ric_radial + (model.n - 1) * cs.ric_fiber, atol=1e-10)
    lap = laplacian_of_phi(model, t)
    np.testing.assert_allclose(-(model.n - 1) * lap, cs.f1 * cs.scalar + cs.XR / 2, atol=1e-8)


def test_xr_matches_finite_difference():
    model = model_from_name("custom:t + 0.1*t^3", 3, 0.0)
    t, h = 0.8, 1e-5
    r_plus = curvature_sample(model, t + h).scalar
    r_minus = curvature_sample(model, t - h).scalar
    cs = curvature_sample(model, t)
    assert cs.XR == pytest.approx(cs.f * (r_plus - r_minus) / (2 * h), rel=1e-7)


@given(t=st.floats(0.05, 3.0), n=st.integers(2, 6))
@settings(max_examples=60, deadline=None)
def test_hyperbolic_space_is_einstein_everywhere(t, n):
    cs = curvature_sample(space_form(n, -1.0), t)
    assert cs.ric_radial == pytest.approx(-(n - 1), abs=1e-10)
    assert cs.ric_fiber == pytest.approx(-(n - 1), abs=1e-9)


# --- Einstein catalog -------------------------------------------------------------


def test_check_einstein_catalog_cases():
    exp3 = model_from_name("exp", 3, -1.0)
    assert check_einstein(exp3, np.linspace(-1, 1, 50), 1e-10).passed
    cosh4 = model_from_name("cosh", 4, -1.0, fiber_scalar=-6.0)
    assert check_einstein(cosh4, np.linspace(0.5, 2.0, 50), 1e-10).passed
    flat_as_sphere = WarpModel(3, make_warp("euclidean"), 1.0, 2.0)
    report = check_einstein(flat_as_sphere, np.linspace(0.5, 2.0, 10), 1e-10)
    assert not report.passed


@pytest.mark.parametrize("n,k", [(2, 0.0), (3, 1.0), (3, -1.0), (5, 0.25), (5, -2.0)])
def test_space_forms_flagged_and_einstein(n, k):
    model = space_form(n, k)
    assert model.is_space_form
    lo, hi = model.interval
    hi = min(hi, 3.0)
    assert check_einstein(model, np.linspace(lo, hi, 30)[1:-1], 1e-10).passed


def test_space_form_flag_requires_round_fiber():
    assert not model_from_name("euclidean", 3, 0.0, fiber_scalar=0.0).is_space_form
    assert not model_from_name("exp", 3, -1.0).is_space_form


def test_check_einstein_needs_samples():
    with pytest.raises(UsageError):
        check_einstein(space_form(3, 0.0), [])


# --- slices and the conformal field -----------------------------------------------


def test_slice_mean_curvature_examples():
    assert slice_mean_curvature(space_form(3, 0.0), 1.0, 1) == pytest.approx(2.0)
    assert slice_mean_curvature(space_form(3, -1.0), 1.0, 1) == pytest.approx(2 / math.tanh(1.0))
    assert slice_mean_curvature(space_form(2, 1.0), math.pi / 4, 1) == pytest.approx(1.0)
    assert slice_mean_curvature(space_form(3, 0.0), 1.0, -1) == pytest.approx(-2.0)
    with pytest.raises(UsageError):
        slice_mean_curvature(space_form(3, 0.0), 1.0, 0)


@pytest.mark.parametrize("model", catalog_models(), ids=lambda m: f"{m.warp.name}-n{m.n}")
def test_conformal_field_defect_vanishes(model):
    for t in sample_points(model, 5):
        assert conformal_field_defect(model, float(t)) <= 1e-10


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)
    assert sphere_area(4) == pytest.approx(2 * math.pi**2)
