import math
import warnings

import numpy as np
import pytest

from serrinlab.errors import DomainError, ResonanceError, UsageError
from serrinlab.fem2d import (
    DomainSpec,
    Mesh,
    conformal_factor,
    convergence_rate,
    generate_mesh,
    geodesic_radius,
    chart_radius,
    read_mesh,
    solve_domain,
    solve_poisson,
    stiffness_matrix,
    write_mesh,
)
from serrinlab.geometry import space_form
from serrinlab.radial import BallProblem, solve_ball


def disk_exact(r, R=1.0):
    return (R * R - r * r) / 4


@pytest.mark.parametrize(
    "spec",
    [
        DomainSpec("disk", h=0.1),
        DomainSpec("ellipse", a=1.5, b=1.0, h=0.1),
        DomainSpec("perturbed_disk", eps=0.2, mode=3, h=0.08),
        DomainSpec("disk", k=-1.0, radius=0.8, h=0.1),
    ],
    ids=["disk", "ellipse", "perturbed", "hyperbolic"],
)
def test_mesh_is_a_disk(spec):
    mesh = generate_mesh(spec)
    assert mesh.euler_characteristic == 1
    assert np.all(mesh.areas > 0)
    # boundary edges form one closed loop
    nxt = {int(i): int(j) for i, j in mesh.boundary_edges}
    start = int(mesh.boundary_edges[0, 0])
    node, steps = nxt[start], 1
    while node != start:
        node, steps = nxt[node], steps + 1
    assert steps == len(mesh.boundary_edges) == len(mesh.boundary_nodes)
    assert mesh.max_edge_length() <= 1.6 * spec.h


def test_mesh_round_trip_is_bit_exact(tmp_path):
    mesh = generate_mesh(DomainSpec("ellipse", a=1.5, b=1.0, h=0.1))
    path = tmp_path / "e.mesh"
    write_mesh(mesh, path)
    back = read_mesh(path)
    np.testing.assert_array_equal(back.nodes, mesh.nodes)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    np.testing.assert_array_equal(back.boundary_edges, mesh.boundary_edges)
    np.testing.assert_array_equal(solve_poisson(back).values, solve_poisson(mesh).values)


def test_read_mesh_rejects_malformed(tmp_path):
    path = tmp_path / "bad.mesh"
    path.write_text("v 0 0\nv 1 0\nv 0 1\nt 0 1\n")
    with pytest.raises(UsageError):
        read_mesh(path)


def test_domain_spec_validation():
    with pytest.raises(UsageError):
        DomainSpec("square")
    with pytest.raises(DomainError):
        DomainSpec("perturbed_disk", eps=1.2)
    with pytest.raises(DomainError):
        DomainSpec("disk", k=1.0, radius=1.6)


def test_chart_radius_inverts_geodesic_radius():
    r = np.linspace(0, 1.4, 15)
    for k in (-1.0, 0.0, 1.0):
        np.testing.assert_allclose(geodesic_radius(chart_radius(r, k), k), r, atol=1e-14)


def test_areas():
    ell = solve_domain(DomainSpec("ellipse", a=1.5, b=1.0, h=0.05))
    assert ell.integral("1") == pytest.approx(1.5 * math.pi, rel=0.01)
    hyp = solve_domain(DomainSpec("disk", k=-1.0, radius=0.8, h=0.05))
    assert hyp.integral("1") == pytest.approx(2 * math.pi * (math.cosh(0.8) - 1), rel=0.01)


def test_disk_centre_value_and_boundary_trace():
    s = solve_domain(DomainSpec("disk", h=0.05))
    assert s.positive
    assert s.field.values.max() == pytest.approx(0.25, rel=0.01)
    assert np.max(np.abs(s.trace.u_nu + 0.5)) <= 0.02
    assert np.max(np.abs(s.trace.H - 1.0)) <= 1e-3


def test_hyperbolic_disk_agrees_with_radial_solver():
    fem = solve_domain(DomainSpec("disk", k=-1.0, radius=0.8, h=0.04))
    rad = solve_ball(BallProblem(space_form(2, -1.0), 0.8))
    assert fem.field.values.max() == pytest.approx(rad.u[0], rel=0.01)
    # boundary flux converges at first order; 3% at this resolution
    assert np.mean(fem.trace.u_nu) == pytest.approx(-rad.c, rel=0.03)
    assert np.mean(fem.trace.H) == pytest.approx(1 / math.tanh(0.8), rel=1e-3)


def test_stiffness_matrix_is_conformally_invariant():
    mesh = generate_mesh(DomainSpec("disk", k=-1.0, radius=0.8, h=0.1))
    flat = mesh.with_curvature(0.0)
    diff = stiffness_matrix(mesh) - stiffness_matrix(flat)
    assert abs(diff).max() <= 1e-13


def test_conformal_factor_values():
    p = np.array([[0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_allclose(conformal_factor(p, -1.0), [1.0, 4 / 3])
    np.testing.assert_allclose(conformal_factor(p, 1.0), [1.0, 0.8])


def test_disk_convergence_rates():
    hs, l2, flux = [0.1, 0.05, 0.025], [], []
    for h in hs:
        s = solve_domain(DomainSpec("disk", h=h))
        r = np.hypot(*s.mesh.nodes.T)
        l2.append(math.sqrt(np.sum(s.mesh.areas) / len(r) * np.sum((s.field.values - disk_exact(r)) ** 2)))
        flux.append(np.max(np.abs(s.trace.u_nu + 0.5)))
    assert convergence_rate(hs, l2) >= 1.8
    assert convergence_rate(hs, flux) >= 0.9


def test_geodesic_curvature_converges_on_circles():
    hs, err = [0.2, 0.1, 0.05], []
    for h in hs:
        s = solve_domain(DomainSpec("disk", k=-1.0, radius=0.8, h=h))
        err.append(np.max(np.abs(s.trace.H - 1 / math.tanh(0.8))))
    assert max(err) <= 1e-2


def test_near_resonance_warning_and_resonance_error():
    with pytest.warns(UserWarning, match="near resonance"):
        solve_domain(DomainSpec("disk", k=1.0, radius=1.55, h=0.1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        solve_domain(DomainSpec("disk", k=1.0, radius=1.0, h=0.1))
    # chart radius 2.5 on the unit sphere covers more than a hemisphere, so λ1 < 2
    mesh = generate_mesh(DomainSpec("disk", radius=2.5, h=0.25))
    with pytest.raises(ResonanceError):
        solve_poisson(mesh, k=1.0)


def test_convergence_rate_slope():
    hs = np.array([0.1, 0.05, 0.025])
    assert convergence_rate(hs, 3 * hs**2) == pytest.approx(2.0)
    assert convergence_rate(hs, [0, 0, 0]) == math.inf


def test_mesh_from_arrays_requires_consistency():
    with pytest.raises((UsageError, ValueError)):
        Mesh(np.zeros((3, 2)), np.array([[0, 1, 5]]), np.array([[0, 1]]))
