"""P1 finite elements for ``Δu + 2ku = -1`` on star-shaped domains of 2-D space forms.

The space form of curvature ``k`` is realized on a chart of the plane with
the conformal metric ``λ(p)^2 |dp|^2``, ``λ(p) = 1 / (1 + k|p|^2/4)``; for
``k = 0`` this is the Euclidean plane. Domains are star-shaped about the
origin and described in geodesic polar coordinates ``r(θ)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import eigsh, splu
from scipy.sparse.linalg import norm as spnorm

from .errors import DomainError, ResonanceError, SolverError, UsageError

N_DIM = 2

# 3-point Gauss rule on triangles (barycentric points, equal weights 1/3)
_GAUSS_BARY = np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]])


# --- space-form radial functions -------------------------------------------------


def sn_k(r, k):
    if k == 0:
        return np.asarray(r, dtype=float)
    if k > 0:
        return np.sin(math.sqrt(k) * r) / math.sqrt(k)
    return np.sinh(math.sqrt(-k) * r) / math.sqrt(-k)


def cs_k(r, k):
    if k == 0:
        return np.ones_like(np.asarray(r, dtype=float))
    if k > 0:
        return np.cos(math.sqrt(k) * r)
    return np.cosh(math.sqrt(-k) * r)


def chart_radius(r, k):
    """Euclidean chart radius of the geodesic circle of radius ``r``."""
    r = np.asarray(r, dtype=float)
    if k == 0:
        return r.copy()
    if k > 0:
        s = math.sqrt(k)
        return 2 / s * np.tan(s * r / 2)
    s = math.sqrt(-k)
    return 2 / s * np.tanh(s * r / 2)


def geodesic_radius(rho, k):
    """Geodesic distance to the origin of chart points at Euclidean radius ``rho``."""
    rho = np.asarray(rho, dtype=float)
    if k == 0:
        return rho.copy()
    if k > 0:
        s = math.sqrt(k)
        return 2 / s * np.arctan(s * rho / 2)
    s = math.sqrt(-k)
    return 2 / s * np.arctanh(s * rho / 2)


def conformal_factor(points, k):
    """``λ`` at chart points (shape ``(..., 2)``)."""
    p = np.asarray(points, dtype=float)
    return 1.0 / (1.0 + 0.25 * k * np.sum(p * p, axis=-1))


# --- domains ---------------------------------------------------------------------


@dataclass(frozen=True)
class DomainSpec:
    """Star-shaped domain ``{r < r(θ)}`` in geodesic polar coordinates.

    ``disk``: ``r = radius``; ``ellipse``: the ellipse with semi-axes ``a, b``
    in polar form; ``perturbed_disk``: ``r = radius (1 + eps cos(mode θ))``.
    """

    kind: str
    k: float = 0.0
    h: float = 0.1
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    eps: float = 0.0
    mode: int = 3

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse", "perturbed_disk"):
            raise UsageError(f"unknown domain kind {self.kind!r}")
        if self.h <= 0:
            raise UsageError("mesh size h must be positive")
        if self.kind == "ellipse" and (self.a <= 0 or self.b <= 0):
            raise DomainError("ellipse semi-axes must be positive")
        if self.kind in ("disk", "perturbed_disk") and self.radius <= 0:
            raise DomainError("radius must be positive")
        if self.kind == "perturbed_disk" and abs(self.eps) >= 1:
            raise DomainError("|eps| must be < 1 so that the boundary radius stays positive")
        rmax = float(np.max(self.polar(np.linspace(0, 2 * np.pi, 721))[0]))
        if self.k > 0 and 2 * rmax >= math.pi / math.sqrt(self.k):
            raise DomainError("domain does not fit in the conformal chart of the sphere")

    def polar(self, theta):
        """Geodesic boundary radius ``r(θ)`` and its first two θ-derivatives."""
        th = np.asarray(theta, dtype=float)
        if self.kind == "disk":
            r = np.full_like(th, self.radius)
            return r, 0 * r, 0 * r
        if self.kind == "perturbed_disk":
            R, e, m = self.radius, self.eps, self.mode
            return (
                R * (1 + e * np.cos(m * th)),
                -R * e * m * np.sin(m * th),
                -R * e * m * m * np.cos(m * th),
            )
        a, b = self.a, self.b
        q = b * b * np.cos(th) ** 2 + a * a * np.sin(th) ** 2
        q1 = (a * a - b * b) * np.sin(2 * th)
        q2 = 2 * (a * a - b * b) * np.cos(2 * th)
        r = a * b * q**-0.5
        r1 = -0.5 * a * b * q**-1.5 * q1
        r2 = a * b * (0.75 * q**-2.5 * q1 * q1 - 0.5 * q**-1.5 * q2)
        return r, r1, r2

    def chart_polar(self, theta):
        """Euclidean chart radius ``ρ(θ)`` and its first two θ-derivatives."""
        r, r1, r2 = self.polar(theta)
        rho = chart_radius(r, self.k)
        m1 = 1 + 0.25 * self.k * rho * rho  # dρ/dr
        m2 = 0.5 * self.k * rho * m1  # d²ρ/dr²
        return rho, m1 * r1, m2 * r1 * r1 + m1 * r2

    def boundary_point(self, theta):
        rho = self.chart_polar(theta)[0]
        return np.stack([rho * np.cos(theta), rho * np.sin(theta)], axis=-1)

    def boundary_geometry(self, theta):
        """Chart point, outward Euclidean unit normal and Euclidean curvature at ``θ``."""
        th = np.asarray(theta, dtype=float)
        rho, d1, d2 = self.chart_polar(th)
        c, s = np.cos(th), np.sin(th)
        point = np.stack([rho * c, rho * s], axis=-1)
        tangent = np.stack([d1 * c - rho * s, d1 * s + rho * c], axis=-1)
        tangent /= np.linalg.norm(tangent, axis=-1, keepdims=True)
        normal = np.stack([tangent[..., 1], -tangent[..., 0]], axis=-1)
        kappa = (rho**2 + 2 * d1**2 - rho * d2) / (rho**2 + d1**2) ** 1.5
        return point, normal, kappa

    def describe(self) -> dict:
        out = {"kind": self.kind, "k": self.k, "h": self.h}
        if self.kind == "ellipse":
            out.update(a=self.a, b=self.b)
        else:
            out["radius"] = self.radius
        if self.kind == "perturbed_disk":
            out.update(eps=self.eps, mode=self.mode)
        return out


# --- meshes ----------------------------------------------------------------------


def _signed_areas(nodes, tris):
    p0, p1, p2 = nodes[tris[:, 0]], nodes[tris[:, 1]], nodes[tris[:, 2]]
    return 0.5 * ((p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p2[:, 0] - p0[:, 0]) * (p1[:, 1] - p0[:, 1]))


def _edges(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


@dataclass(frozen=True)
class Mesh:
    """Triangulation of a disk-type domain in the chart.

    ``boundary_theta`` (polar angle of boundary nodes) and ``spec`` are set by
    :func:`generate_mesh`; meshes read from files carry neither, and boundary
    curvature then falls back to the polygon.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    k: float = 0.0
    spec: DomainSpec | None = None
    boundary_theta: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        tris = np.asarray(self.triangles, dtype=np.int64)
        bnd = np.asarray(self.boundary_edges, dtype=np.int64)
        for arr in (nodes, tris, bnd):
            arr.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "triangles", tris)
        object.__setattr__(self, "boundary_edges", bnd)
        if tris.ndim != 2 or tris.shape[1] != 3 or tris.min() < 0 or tris.max() >= len(nodes):
            raise DomainError("triangle indices out of range")
        if bnd.ndim != 2 or bnd.shape[1] != 2 or bnd.min() < 0 or bnd.max() >= len(nodes):
            raise DomainError("boundary edge indices out of range")
        if np.any(_signed_areas(nodes, tris) <= 1e-14):
            raise DomainError("mesh has degenerate or negatively oriented triangles")
        succ = dict(zip(bnd[:, 0].tolist(), bnd[:, 1].tolist()))
        if len(succ) != len(bnd):
            raise DomainError("boundary edges do not form a simple loop")
        start = int(bnd[0, 0])
        node, steps = start, 0
        while True:
            node = succ.get(node)
            steps += 1
            if node is None or steps > len(bnd):
                raise DomainError("boundary edges do not form a single closed loop")
            if node == start:
                break
        if steps != len(bnd):
            raise DomainError("boundary edges form more than one loop")

    @property
    def lam(self) -> np.ndarray:
        return conformal_factor(self.nodes, self.k)

    @property
    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges)

    @property
    def euler_characteristic(self) -> int:
        return len(self.nodes) - len(_edges(self.triangles)) + len(self.triangles)

    @property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.nodes, self.triangles)

    def max_edge_length(self) -> float:
        e = _edges(self.triangles)
        return float(np.max(np.linalg.norm(self.nodes[e[:, 0]] - self.nodes[e[:, 1]], axis=1)))

    def with_curvature(self, k: float) -> "Mesh":
        """Same node set and connectivity in the chart of another curvature."""
        return Mesh(self.nodes, self.triangles, self.boundary_edges, k, None, self.boundary_theta)


def _ring_nodes(spec: DomainSpec, beta: float):
    theta_fine = np.linspace(0, 2 * np.pi, 2049)
    rho, d1, _ = spec.chart_polar(theta_fine)
    rho_max = float(np.max(rho))
    speed = float(np.max(np.sqrt(rho**2 + d1**2)))
    step = beta * spec.h
    n_rings = max(1, math.ceil(rho_max / step))
    counts = []
    for i in range(1, n_rings + 1):
        s = i / n_rings
        counts.append(max(6, math.ceil(2 * np.pi * s * speed / step), counts[-1] if counts else 0))
    return n_rings, counts


def _zipper(inner_idx, inner_ang, outer_idx, outer_ang):
    """Triangulate the band between two closed rings ordered by angle."""
    tris = []
    n_in, n_out = len(inner_idx), len(outer_idx)
    i = j = 0
    while i < n_in or j < n_out:
        next_in = inner_ang[(i + 1) % n_in] + (2 * np.pi if i + 1 >= n_in else 0.0)
        next_out = outer_ang[(j + 1) % n_out] + (2 * np.pi if j + 1 >= n_out else 0.0)
        if j < n_out and (i >= n_in or next_out <= next_in):
            tris.append((inner_idx[i % n_in], outer_idx[j % n_out], outer_idx[(j + 1) % n_out]))
            j += 1
        else:
            tris.append((inner_idx[i % n_in], outer_idx[j % n_out], inner_idx[(i + 1) % n_in]))
            i += 1
    return tris


def generate_mesh(spec: DomainSpec) -> Mesh:
    """Mapped-polar triangulation: rings ``s_i ρ(θ)`` with linearly growing node counts.

    Deterministic for a fixed spec; the longest Euclidean edge is at most ``spec.h``.
    """
    beta = 0.6
    for _ in range(20):
        mesh = _build_mesh(spec, beta)
        if mesh.max_edge_length() <= spec.h:
            return mesh
        beta *= 0.9
    raise SolverError("mesh generator could not meet the requested edge length")


def _build_mesh(spec: DomainSpec, beta: float) -> Mesh:
    n_rings, counts = _ring_nodes(spec, beta)
    nodes = [np.zeros((1, 2))]
    ring_idx = [np.array([0])]
    ring_ang = [np.array([0.0])]
    offset = 1
    for i, count in enumerate(counts, start=1):
        s = i / n_rings
        ang = 2 * np.pi * np.arange(count) / count
        pts = s * spec.boundary_point(ang)
        nodes.append(pts)
        ring_idx.append(np.arange(offset, offset + count))
        ring_ang.append(ang)
        offset += count
    tris = []
    first = ring_idx[1]
    for j in range(len(first)):
        tris.append((0, first[j], first[(j + 1) % len(first)]))
    for r in range(1, len(ring_idx) - 1):
        tris.extend(_zipper(ring_idx[r], ring_ang[r], ring_idx[r + 1], ring_ang[r + 1]))
    nodes = np.concatenate(nodes)
    tris = np.array(tris, dtype=np.int64)
    flip = _signed_areas(nodes, tris) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    outer = ring_idx[-1]
    bnd = np.stack([outer, np.roll(outer, -1)], axis=1)
    theta = dict(zip(outer.tolist(), ring_ang[-1].tolist()))
    return Mesh(nodes, tris, bnd, spec.k, spec, theta)


def write_mesh(mesh: Mesh, path) -> None:
    """Write the line-oriented mesh format (``v``/``t``/``b`` records)."""
    lines = [f"# serrinlab mesh: {len(mesh.nodes)} nodes, {len(mesh.triangles)} triangles"]
    lines += [f"v {float(x)!r} {float(y)!r}" for x, y in mesh.nodes]
    lines += [f"t {i} {j} {k}" for i, j, k in mesh.triangles]
    lines += [f"b {i} {j}" for i, j in mesh.boundary_edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_mesh(path, k: float = 0.0) -> Mesh:
    """Read the line-oriented mesh format; ``#`` starts a comment."""
    nodes, tris, bnd = [], [], []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tag, *fields = line.split()
        try:
            if tag == "v" and len(fields) == 2:
                nodes.append((float(fields[0]), float(fields[1])))
            elif tag == "t" and len(fields) == 3:
                tris.append(tuple(int(f) for f in fields))
            elif tag == "b" and len(fields) == 2:
                bnd.append(tuple(int(f) for f in fields))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"{path}:{lineno}: malformed record {raw!r}") from None
    if not nodes or not tris or not bnd:
        raise UsageError(f"{path}: mesh needs v, t and b records")
    return Mesh(np.array(nodes), np.array(tris), np.array(bnd), k)


# --- assembly and solve ----------------------------------------------------------


def _gradients(mesh: Mesh):
    """Euclidean gradients of the three hat functions on each triangle, shape (T, 3, 2)."""
    p = mesh.nodes[mesh.triangles]
    area2 = 2 * mesh.areas
    g = np.empty((len(p), 3, 2))
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        g[:, a, 0] = (p[:, b, 1] - p[:, c, 1]) / area2
        g[:, a, 1] = (p[:, c, 0] - p[:, b, 0]) / area2
    return g


def stiffness_matrix(mesh: Mesh) -> sps.csr_matrix:
    """Dirichlet-energy matrix from Euclidean gradients; independent of ``k``."""
    g = _gradients(mesh)
    local = np.einsum("tad,tbd->tab", g, g) * mesh.areas[:, None, None]
    return _scatter(mesh, local)


def _gauss_points(mesh: Mesh):
    p = mesh.nodes[mesh.triangles]
    return np.einsum("qa,tad->tqd", _GAUSS_BARY, p)


def mass_and_load(mesh: Mesh):
    """``λ^2``-weighted mass matrix and load vector (3-point Gauss rule)."""
    lam2 = conformal_factor(_gauss_points(mesh), mesh.k) ** 2  # (T, 3)
    w = mesh.areas[:, None] / 3.0 * lam2
    local = np.einsum("tq,qa,qb->tab", w, _GAUSS_BARY, _GAUSS_BARY)
    load = np.einsum("tq,qa->ta", w, _GAUSS_BARY)
    b = np.zeros(len(mesh.nodes))
    np.add.at(b, mesh.triangles, load)
    return _scatter(mesh, local), b


def _scatter(mesh: Mesh, local):
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = len(mesh.nodes)
    return sps.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    positive: bool = True
    first_eigenvalue: float | None = None


def solve_poisson(mesh: Mesh, k: float | None = None) -> ScalarField:
    """Galerkin solution of ``Δu + 2ku = -1``, ``u = 0`` on the boundary."""
    k = mesh.k if k is None else k
    if k != mesh.k:
        mesh = mesh.with_curvature(k)
    K = stiffness_matrix(mesh)
    M, b = mass_and_load(mesh)
    A = (K - 2 * k * M).tocsr()
    interior = np.setdiff1d(np.arange(len(mesh.nodes)), mesh.boundary_nodes)
    A_ii = A[interior][:, interior].tocsc()
    b_i = b[interior]
    lam1 = None
    if k > 0:
        K_ii = K[interior][:, interior].tocsc()
        M_ii = M[interior][:, interior].tocsc()
        lam1 = float(eigsh(K_ii, k=1, M=M_ii, sigma=0, which="LM", return_eigenvectors=False)[0])
        if lam1 <= 2 * k * (1 + 1e-10):
            raise ResonanceError(f"first Dirichlet eigenvalue {lam1:.6g} <= 2k = {2 * k:.6g}")
        if lam1 < 2 * k * 1.05:
            warnings.warn(f"near resonance: first eigenvalue {lam1:.6g} vs 2k = {2 * k:.6g}", stacklevel=2)
    try:
        lu = splu(A_ii)
    except RuntimeError as exc:  # exactly singular factor
        raise ResonanceError(f"singular system: {exc}") from None
    u_i = lu.solve(b_i)
    for _ in range(2):  # iterative refinement
        u_i = u_i + lu.solve(b_i - A_ii @ u_i)
    # normwise backward error, independent of the conditioning of the mesh
    scale = spnorm(A_ii, np.inf) * np.max(np.abs(u_i)) + np.max(np.abs(b_i))
    res = np.max(np.abs(A_ii @ u_i - b_i)) / max(scale, 1e-300)
    if not np.all(np.isfinite(u_i)) or res > 1e-12:
        raise ResonanceError(f"linear solve failed, backward error {res:.3e}")
    u = np.zeros(len(mesh.nodes))
    u[interior] = u_i
    return ScalarField(u, bool(np.all(u_i > 0)), lam1)


# --- boundary postprocessing -----------------------------------------------------


@dataclass(frozen=True)
class BoundaryTrace:
    """Per boundary-edge samples at the analytic boundary point of each edge."""

    points: np.ndarray
    ds: np.ndarray
    u_nu: np.ndarray
    H: np.ndarray
    Xnu: np.ndarray
    phi: np.ndarray


def recovered_gradients(mesh: Mesh, field: ScalarField) -> np.ndarray:
    """Nodal Euclidean gradients: area-weighted average of the adjacent triangle gradients."""
    g = np.einsum("tad,ta->td", _gradients(mesh), field.values[mesh.triangles])
    acc = np.zeros((len(mesh.nodes), 2))
    wsum = np.zeros(len(mesh.nodes))
    area = mesh.areas
    for a in range(3):
        np.add.at(acc, mesh.triangles[:, a], g * area[:, None])
        np.add.at(wsum, mesh.triangles[:, a], area)
    return acc / wsum[:, None]


def _edge_patch_gradients(mesh: Mesh, field: ScalarField) -> np.ndarray:
    """Area-weighted mean gradient over the triangles adjacent to each boundary edge's end points."""
    g = np.einsum("tad,ta->td", _gradients(mesh), field.values[mesh.triangles])
    area = mesh.areas
    n = len(mesh.nodes)
    acc = np.zeros((n, 2))
    wsum = np.zeros(n)
    for a in range(3):
        np.add.at(acc, mesh.triangles[:, a], g * area[:, None])
        np.add.at(wsum, mesh.triangles[:, a], area)
    owner = {}
    for t, (a, b, c) in enumerate(mesh.triangles.tolist()):
        owner[(a, b)] = owner[(b, c)] = owner[(c, a)] = t
    bnd = mesh.boundary_edges
    shared = np.array([owner[(int(i), int(j))] for i, j in bnd])
    i, j = bnd[:, 0], bnd[:, 1]
    # the edge's own triangle lies in both patches; count it once
    total = acc[i] + acc[j] - g[shared] * area[shared, None]
    weight = wsum[i] + wsum[j] - area[shared]
    return total / weight[:, None]


def _polygon_geometry(mesh: Mesh):
    """Fallback boundary geometry from the polygon (meshes without an analytic curve)."""
    bnd = mesh.boundary_edges
    p, q = mesh.nodes[bnd[:, 0]], mesh.nodes[bnd[:, 1]]
    mid = 0.5 * (p + q)
    d = q - p
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / np.linalg.norm(d, axis=1, keepdims=True)
    prev = mesh.nodes[np.roll(bnd[:, 0], 1)]
    nxt = mesh.nodes[np.roll(bnd[:, 1], -1)]

    def menger(a, b, c):
        ab, bc, ca = np.linalg.norm(b - a, axis=1), np.linalg.norm(c - b, axis=1), np.linalg.norm(a - c, axis=1)
        cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
        return 2 * cross / (ab * bc * ca)

    kappa = 0.5 * (menger(prev, p, q) + menger(p, q, nxt))
    return mid, normal, kappa


def boundary_trace(mesh: Mesh, field: ScalarField, k: float | None = None) -> BoundaryTrace:
    """Normal derivative, geodesic curvature, ``φ`` and ``<X,ν>`` along the boundary.

    ``u_ν = (∇_e u · ν_e) / λ`` with the Euclidean gradient at an edge taken as
    the area-weighted mean over the triangles touching either end; the geodesic
    curvature is ``(κ_e + ∂_{ν_e} log λ) / λ`` from the analytic curve.
    """
    k = mesh.k if k is None else k
    bnd = mesh.boundary_edges
    p, q = mesh.nodes[bnd[:, 0]], mesh.nodes[bnd[:, 1]]
    if mesh.spec is not None and mesh.boundary_theta is not None:
        t0 = np.array([mesh.boundary_theta[int(i)] for i in bnd[:, 0]])
        t1 = np.array([mesh.boundary_theta[int(i)] for i in bnd[:, 1]])
        t1 = np.where(t1 < t0, t1 + 2 * np.pi, t1)
        point, normal, kappa = mesh.spec.boundary_geometry(0.5 * (t0 + t1))
    else:
        point, normal, kappa = _polygon_geometry(mesh)
    lam = conformal_factor(point, k)
    g_mid = _edge_patch_gradients(mesh, field)
    u_nu = np.sum(g_mid * normal, axis=1) / lam
    dlog = -0.5 * k * point * lam[:, None]  # ∇ log λ
    H = (kappa + np.sum(dlog * normal, axis=1)) / lam
    rho = np.linalg.norm(point, axis=1)
    r = geodesic_radius(rho, k)
    radial_dir = point / np.maximum(rho, 1e-300)[:, None]
    return BoundaryTrace(
        points=point,
        ds=lam * np.linalg.norm(q - p, axis=1),
        u_nu=u_nu,
        H=H,
        Xnu=sn_k(r, k) * np.sum(radial_dir * normal, axis=1),
        phi=cs_k(r, k),
    )


VOLUME_INTEGRANDS = ("1", "u", "u^2", "phi", "phi*u", "phi*u^2")
BOUNDARY_INTEGRANDS = ("1", "1/H", "u_nu", "u_nu^2", "H*u_nu^2", "<X,nu>u_nu^2", "phi*u_nu", "<X,nu>((n-1)-cnH)", "<X,nu>", "phi")


def integrals(mesh: Mesh, field: ScalarField, trace: BoundaryTrace, integrand: str, *, c: float | None = None) -> float:
    """Named volume (3-point Gauss, ``λ^2`` weight) or boundary (midpoint, ``ds``) integral."""
    if integrand.startswith("vol:") or integrand in VOLUME_INTEGRANDS:
        name = integrand.removeprefix("vol:")
        gp = _gauss_points(mesh)
        lam2 = conformal_factor(gp, mesh.k) ** 2
        w = mesh.areas[:, None] / 3.0 * lam2
        u = np.einsum("qa,ta->tq", _GAUSS_BARY, field.values[mesh.triangles])
        phi = cs_k(geodesic_radius(np.linalg.norm(gp, axis=-1), mesh.k), mesh.k)
        table = {"1": np.ones_like(u), "u": u, "u^2": u * u, "phi": phi, "phi*u": phi * u, "phi*u^2": phi * u * u}
        if name not in table:
            raise UsageError(f"unknown volume integrand {integrand!r}")
        return float(np.sum(w * table[name]))
    name = integrand.removeprefix("bnd:")
    tr = trace
    if name == "1/H":
        if np.any(tr.H == 0) or (np.min(tr.H) < 0 < np.max(tr.H)):
            from .errors import PoleError

            raise PoleError("1/H with H crossing zero on the boundary")
        values = 1.0 / tr.H
    elif name == "<X,nu>((n-1)-cnH)":
        if c is None:
            raise UsageError("this integrand needs the constant c")
        values = tr.Xnu * ((N_DIM - 1) - c * N_DIM * tr.H)
    else:
        table = {
            "1": np.ones_like(tr.ds),
            "u_nu": tr.u_nu,
            "u_nu^2": tr.u_nu**2,
            "H*u_nu^2": tr.H * tr.u_nu**2,
            "<X,nu>u_nu^2": tr.Xnu * tr.u_nu**2,
            "phi*u_nu": tr.phi * tr.u_nu,
            "<X,nu>": tr.Xnu,
            "phi": tr.phi,
        }
        if name not in table:
            raise UsageError(f"unknown boundary integrand {integrand!r}")
        values = table[name]
    return float(np.sum(tr.ds * values))


@dataclass
class FemSolution:
    """Mesh, nodal solution and boundary trace for one FEM run (``n = 2``)."""

    mesh: Mesh
    field: ScalarField
    trace: BoundaryTrace
    k: float
    n: int = N_DIM

    @property
    def h(self) -> float:
        return self.mesh.spec.h if self.mesh.spec is not None else self.mesh.max_edge_length()

    @property
    def positive(self) -> bool:
        return self.field.positive

    def integral(self, integrand: str, domain: str = "volume", **kw) -> float:
        prefix = "vol:" if domain == "volume" else "bnd:"
        return integrals(self.mesh, self.field, self.trace, prefix + integrand, **kw)


def solve_domain(spec: DomainSpec) -> FemSolution:
    """Mesh, solve and postprocess in one call."""
    mesh = generate_mesh(spec)
    field = solve_poisson(mesh, spec.k)
    return FemSolution(mesh, field, boundary_trace(mesh, field, spec.k), spec.k)


def convergence_rate(hs, errors) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    hs, errors = np.asarray(hs, dtype=float), np.abs(np.asarray(errors, dtype=float))
    if len(hs) < 2 or np.any(errors <= 0):
        return math.inf if np.all(errors == 0) else math.nan
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)
