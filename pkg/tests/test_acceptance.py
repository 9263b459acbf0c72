"""Acceptance criteria 1-10.

Each test records its criterion number; ``conftest.py`` prints one PASS/FAIL
line per criterion at the end of the run.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from serrinlab.fem2d import DomainSpec, convergence_rate, solve_domain
from serrinlab.geometry import check_einstein, model_from_name, space_form, sphere_area
from serrinlab.identities import (
    check_nonexistence_bound,
    main_condition_integrands,
    verify_bochner,
    verify_heintze_karcher,
    verify_lemma22,
    verify_main_condition,
    verify_minkowski,
    verify_pfunction,
    verify_pohozaev,
    verify_soap_bubble,
)
from serrinlab.radial import (
    BallProblem,
    SlabProblem,
    pde_residual,
    serrin_boundary_data,
    solve_ball,
    solve_ball_numeric,
    solve_slab,
)

PI = math.pi

# regression constants from a one-time oracle run at h = 0.005 (ellipse 1.5 x 1, k = 0)
ELLIPSE_GAP = 1.2271878
ELLIPSE_RATIO = 1.50003489


@pytest.fixture
def criterion(record_property):
    def mark(number: int, title: str):
        record_property("criterion", str(number))
        record_property("title", title)

    return mark


def ball_grid():
    for n in (2, 3, 5):
        for k in (-1.0, 0.0, 1.0):
            top = 0.95 * PI / 2 if k > 0 else 2.0
            for j in range(1, 6):
                yield n, k, top * j / 5


def test_1_ball_rigidity_suite(criterion):
    criterion(1, "ball rigidity suite")
    start = time.perf_counter()
    for n, k, R in ball_grid():
        model = space_form(n, k)
        exact = solve_ball(BallProblem(model, R), fiber_volume=sphere_area(n))
        numeric = solve_ball_numeric(BallProblem(model, R), fiber_volume=sphere_area(n))
        case = (n, k, R)
        for s in (exact, numeric):
            scale = max(1.0, float(np.max(np.abs(s.u))))
            assert pde_residual(s) <= 1e-9 * scale, case
            data = serrin_boundary_data(s)
            assert data.cor23_holds and data.max_cor23_residual <= 1e-9, case
        lemma = verify_lemma22(None, exact)
        assert abs(lemma.lhs) <= 1e-8 and abs(lemma.rhs) <= 1e-8, case
        hk = verify_heintze_karcher(exact)
        assert abs(hk.terms["gap"]) <= 1e-8 * exact.integral("1"), case
        poh = verify_pohozaev(exact)
        assert poh.hypothesis_met and poh.residual_rel <= 1e-8, case
        pf = verify_pfunction(exact)
        assert pf.terms["P_spread"] <= 1e-9 * max(1.0, pf.terms["P_mean"]), case
        mink = verify_minkowski(exact)
        assert mink.hypothesis_met and mink.terms["pointwise_max"] <= 1e-9, case
    elapsed = time.perf_counter() - start
    assert elapsed <= 10.0, f"{elapsed:.1f} s"


def test_2_closed_values(criterion):
    criterion(2, "closed values on the unit ball in R^3")
    s = solve_ball(BallProblem(space_form(3, 0.0), 1.0), fiber_volume=4 * PI)
    rel = 1e-9
    assert s.c == pytest.approx(1 / 3, rel=rel)
    assert s.integral("u") == pytest.approx(4 * PI / 45, rel=rel)
    poh = verify_pohozaev(s)
    assert poh.lhs == pytest.approx(4 * PI / 27, rel=rel)
    assert poh.rhs == pytest.approx(4 * PI / 27, rel=rel)
    soap = verify_soap_bubble(s)
    assert soap.terms["c"] == pytest.approx(4 / 9, rel=rel)
    assert soap.terms["H0"] - s.boundary[-1].H == pytest.approx(1 / 4, rel=rel)
    assert soap.terms["soap_integral"] == pytest.approx(PI / 9, rel=rel)
    assert -soap.terms["square_term"] == pytest.approx(PI / 9, rel=rel)


EINSTEIN_MODELS = [
    (model_from_name("exp", 3, -1.0), (-1.0, 1.0)),
    (model_from_name("exp", 4, -1.0), (-1.0, 1.0)),
    (model_from_name("cosh", 4, -1.0, fiber_scalar=-6.0), (0.3, 1.5)),
]


def test_3_einstein_catalog(criterion):
    criterion(3, "Einstein catalog")
    for model, (a, b) in EINSTEIN_MODELS:
        t = np.linspace(a, b, 201)
        assert check_einstein(model, t, 1e-10).passed, model.warp.name
        curvature_form, _ = main_condition_integrands(model, t)
        assert np.max(np.abs(curvature_form)) <= 1e-10, model.warp.name


BOCHNER_MODELS = [
    (space_form(3, 0.0), (0.1, 2.0)),
    (space_form(3, 1.0), (0.1, 3.0)),
    (space_form(3, -1.0), (0.2, 1.5)),
    (model_from_name("exp", 4, -1.0), (-1.0, 1.0)),
    (model_from_name("cosh", 4, -1.0, fiber_scalar=-6.0), (0.3, 1.5)),
    (model_from_name("custom:t + 0.1*t^3", 3, 0.0), (0.2, 1.5)),
]


def test_4_bochner_lemma(criterion):
    criterion(4, "Bochner lemma over the warp catalog")
    worst = 0.0
    for model, (a, b) in BOCHNER_MODELS:
        for fn in ("t^2", "cosh(t)", "sin(t) + t^3/6"):
            rep = verify_bochner(model, fn, np.linspace(a, b, 50))
            assert rep.terms["samples"] == 50
            worst = max(worst, rep.terms["max_residual"])
    assert worst <= 1e-8, worst


def test_5_annulus(criterion):
    criterion(5, "non-rigid annulus")
    s = solve_slab(SlabProblem(space_form(2, 0.0), 1.0, 2.0), fiber_volume=2 * PI)
    lemma = verify_lemma22(None, s)
    assert lemma.residual_rel <= 1e-8
    assert abs(lemma.lhs) > 1e-3
    # exact profile: u'(t) = -t/2 + (3/(4 log 2))/t
    A = 0.75 / math.log(2.0)
    d1, d2 = abs(-0.5 + A), abs(-1.0 + A / 2)
    assert abs(d1 - d2) > 0.1 * max(d1, d2)
    assert not serrin_boundary_data(s).overdet_holds
    proof = verify_minkowski(s, "proof")
    assert abs(proof.lhs) <= 1e-9


def test_6_fem_convergence(criterion):
    criterion(6, "FEM convergence on the unit disk")
    hs = (0.08, 0.04, 0.02)
    c_err, gap, closure = [], [], []
    start = time.perf_counter()
    for h in hs:
        s = solve_domain(DomainSpec("disk", h=h))
        perimeter, area = s.integral("1", "boundary"), s.integral("1")
        flux = s.integral("u_nu", "boundary")
        c_err.append(abs(-flux / perimeter - 0.5))
        gap.append(abs(verify_heintze_karcher(s).terms["gap"]))
        closure.append(abs(flux + area) / area)
    elapsed = time.perf_counter() - start
    for name, errors in (("c", c_err), ("hk gap", gap), ("closure", closure)):
        assert all(e2 < e1 for e1, e2 in zip(errors, errors[1:])), name
        assert convergence_rate(hs, errors) >= 1.0, (name, errors)
    assert elapsed <= 60.0


def test_7_fem_strictness(criterion):
    criterion(7, "FEM strictness on the ellipse")
    h = 0.02
    ell = solve_domain(DomainSpec("ellipse", a=1.5, b=1.0, h=h))
    disk = solve_domain(DomainSpec("disk", h=h))
    hk = verify_heintze_karcher(ell)
    disk_residual = abs(verify_heintze_karcher(disk).terms["gap"])
    assert hk.hypothesis_met and hk.terms["gap"] > 0
    assert hk.terms["gap"] > 3 * disk_residual
    assert hk.terms["gap"] == pytest.approx(ELLIPSE_GAP, rel=1e-3)
    mags = np.abs(ell.trace.u_nu)
    ratio = float(mags.max() / mags.min())
    assert ratio > 1.5
    assert ratio == pytest.approx(ELLIPSE_RATIO, abs=2e-3)


MAIN_CONDITION_CASES = [
    (space_form(3, 0.0), "ball", 1.0),
    (space_form(3, 1.0), "ball", 1.2),
    (space_form(4, -1.0), "ball", 1.0),
    (model_from_name("exp", 3, -1.0), "slab", (-0.5, 0.5)),
    (model_from_name("exp", 4, -1.0), "slab", (0.0, 1.0)),
    (model_from_name("cosh", 4, -1.0, fiber_scalar=-6.0), "slab", (0.3, 1.3)),
    (model_from_name("custom:t + 0.1*t^3", 3, 0.0), "slab", (0.5, 1.5)),
    (model_from_name("custom:sinh(t) + 0.05*t^3", 3, -1.0, fiber_scalar=2.0), "ball", 1.0),
]


def test_8_main_condition_forms_agree(criterion):
    criterion(8, "equivalence of the curvature and Laplacian forms")
    for model, kind, dom in MAIN_CONDITION_CASES:
        if kind == "ball":
            s = solve_ball(BallProblem(model, dom))
        else:
            s = solve_slab(SlabProblem(model, *dom))
        rep = verify_main_condition(s)
        lhs, rhs = rep.terms["curvature_form"], (model.n - 1) * rep.terms["laplacian_form"]
        scale = max(abs(lhs), abs(rhs), rep.terms["scale"])
        assert abs(lhs - rhs) <= 1e-8 * scale, (model.warp.name, lhs, rhs)


def test_9_nonexistence_bound(criterion):
    criterion(9, "nonexistence bound")
    s = solve_ball(BallProblem(space_form(3, 0.0), 1.0), fiber_volume=4 * PI)
    rep = check_nonexistence_bound(s)
    assert rep.rhs == pytest.approx(-75.0, rel=1e-9)
    assert rep.terms["margin"] == pytest.approx(75.0, rel=1e-9)
    boundary = check_nonexistence_bound({"perimeter": 4 * PI, "volume": 4 * PI / 3, "n": 3}, rep.rhs)
    assert abs(boundary.terms["discriminant"]) <= 1e-12


def test_10_cli_determinism(criterion, tmp_path):
    criterion(10, "byte-identical CSV from identical CLI runs")
    commands = [
        ["verify-ball", "--n", "3", "--k", "-1", "--radius", "1", "--format", "csv"],
        ["verify-fem", "--domain", "ellipse", "--a", "1.5", "--b", "1", "--h", "0.08", "--format", "csv"],
        ["sweep", "--target", "slab", "--n", "2", "--a", "1", "--param", "b", "--from", "1.5", "--to", "3", "--steps", "4"],
    ]
    for argv in commands:
        outputs = []
        for _ in range(2):
            proc = subprocess.run([sys.executable, "-m", "serrinlab.cli", *argv], capture_output=True)
            assert proc.returncode == 0, proc.stderr
            outputs.append(proc.stdout)
        assert outputs[0] == outputs[1], argv
        assert outputs[0]
