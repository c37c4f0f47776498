"""P1 finite elements for ``-lap(phi) = phi**beta`` with zero Dirichlet data.

The polygon is meshed with Triangle (constrained Delaunay, 20 degree angle
floor, boundary kept exactly as subdivided).  The nonlinear problem is
solved by the monotone iteration ``K phi_{k+1} = m * phi_k**beta`` started
from a discrete supersolution, where ``K`` is the stiffness matrix on the
interior nodes and ``m`` the lumped mass.  ``K`` is an M-matrix on a
Delaunay mesh, so every iterate is a discrete supersolution and the
sequence decreases pointwise.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu
import triangle

from .errors import MeshFailure, NonConvergence, NonPositivity
from .geometry import ConvexBody

log = logging.getLogger(__name__)

MIN_ANGLE_DEG = 20.0
NODE_BUDGET = 2_000_000
# body edges shorter than this fraction of mesh_h are collapsed before meshing
SLIVER_FRACTION = 1e-3


@dataclass(frozen=True)
class SolverConfig:
    beta: float = 0.5
    mesh_h: float = 0.02
    fp_tol: float = 1e-8
    max_iter: int = 500
    lin_tol: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.mesh_h > 0:
            raise ValueError("mesh_h must be positive")
        if not (self.fp_tol > 0 and self.lin_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


class Mesh:
    """Triangulation of a polygon.

    Nodes ``0 .. n_boundary-1`` are the boundary nodes in counter-clockwise
    order; boundary edge ``j`` joins node ``j`` to node ``j+1`` (cyclically)
    and ``edge_tags[j]`` is the index of the body edge it lies on.
    """

    def __init__(self, nodes, triangles, n_boundary: int, edge_tags):
        self.nodes = np.asarray(nodes, dtype=float)
        self.triangles = np.asarray(triangles, dtype=np.int64)
        self.n_boundary = int(n_boundary)
        self.edge_tags = np.asarray(edge_tags, dtype=np.int64)
        j = np.arange(self.n_boundary)
        self.boundary_edges = np.stack([j, (j + 1) % self.n_boundary], axis=1)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @cached_property
    def _edges(self) -> np.ndarray:
        # e[:, i] is the edge opposite local node i, oriented counter-clockwise
        p = self.nodes[self.triangles]
        return np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)

    @cached_property
    def areas(self) -> np.ndarray:
        e = self._edges
        return 0.5 * (e[:, 2, 0] * (-e[:, 1, 1]) - e[:, 2, 1] * (-e[:, 1, 0]))

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Gradients of the three barycentric hats per triangle, shape (T, 3, 2)."""
        e = self._edges
        return np.stack([-e[..., 1], e[..., 0]], axis=-1) / (2.0 * self.areas[:, None, None])

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        e = self._edges
        local = np.einsum("tik,tjk->tij", e, e) / (4.0 * self.areas[:, None, None])
        rows = np.repeat(self.triangles, 3, axis=1).ravel()
        cols = np.tile(self.triangles, (1, 3)).ravel()
        n = self.n_nodes
        return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        return np.bincount(
            self.triangles.ravel(), weights=np.repeat(self.areas / 3.0, 3), minlength=self.n_nodes
        )

    @cached_property
    def boundary_lengths(self) -> np.ndarray:
        a, b = self.boundary_edges.T
        return np.linalg.norm(self.nodes[b] - self.nodes[a], axis=1)

    def angles(self) -> np.ndarray:
        """Interior angles in degrees, shape (T, 3)."""
        e = self._edges
        out = np.empty(e.shape[:2])
        for i in range(3):
            u, w = -e[:, (i + 2) % 3], e[:, (i + 1) % 3]
            cosv = np.einsum("tk,tk->t", u, w) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(w, axis=1)
            )
            out[:, i] = np.degrees(np.arccos(np.clip(cosv, -1.0, 1.0)))
        return out

    def gradients(self, values) -> np.ndarray:
        """Per-triangle gradient of the P1 interpolant of nodal ``values``."""
        return np.einsum("ti,tik->tk", np.asarray(values)[self.triangles], self.basis_gradients)


def boundary_points(body: ConvexBody, mesh_h: float):
    """Subdivide the body's boundary into pieces no longer than ``mesh_h``.

    Vertices closer than ``SLIVER_FRACTION * mesh_h`` to the previously kept
    vertex are dropped, so runs of tiny edges (rounded corners of Minkowski
    sums) become short chords.  Each chord is tagged with the longest body
    edge it replaces.
    """
    v = body.vertices
    n = len(v)
    lens = body.lengths
    thr = SLIVER_FRACTION * mesh_h
    kept = [0]
    for i in range(1, n):
        if np.linalg.norm(v[i] - v[kept[-1]]) >= thr:
            kept.append(i)
    while len(kept) > 1 and np.linalg.norm(v[kept[-1]] - v[kept[0]]) < thr:
        kept.pop()
    if len(kept) < 3:
        raise MeshFailure("body is too small for the requested mesh size")
    pts, tags = [], []
    for a_i, b_i in zip(kept, kept[1:] + [kept[0] + n]):
        spanned = np.arange(a_i, b_i) % n
        tag = int(spanned[np.argmax(lens[spanned])])
        a, b = v[a_i], v[b_i % n]
        k = max(1, int(math.ceil(np.linalg.norm(b - a) / mesh_h - 1e-9)))
        s = np.arange(k)[:, None] / k
        pts.append(a + s * (b - a))
        tags.append(np.full(k, tag))
    return np.concatenate(pts), np.concatenate(tags)


def triangulate(body: ConvexBody, cfg: SolverConfig) -> Mesh:
    """Quality constrained-Delaunay mesh of ``body``.

    Boundary edges are at most ``cfg.mesh_h`` long and are not split further;
    interior triangles have area at most that of an equilateral triangle with
    side ``mesh_h`` and angles of at least 20 degrees.
    """
    pts, tags = boundary_points(body, cfg.mesh_h)
    nb = len(pts)
    segs = np.stack([np.arange(nb), (np.arange(nb) + 1) % nb], axis=1)
    max_area = math.sqrt(3.0) / 4.0 * cfg.mesh_h**2
    est = body.area / max_area * 2.5
    if est > NODE_BUDGET:
        raise MeshFailure(f"estimated {est:.0f} nodes exceeds the node budget")
    # Triangle reads switches character by character: no exponent notation
    out = triangle.triangulate(
        {"vertices": pts, "segments": segs, "segment_markers": np.arange(nb) + 2},
        f"pq{MIN_ANGLE_DEG:g}a{max_area:.24f}Q",
    )
    if len(out["vertices"]) > NODE_BUDGET:
        raise MeshFailure("node budget exceeded")
    nodes, tris, nb, tags = _boundary_first(out, pts, tags)
    mesh = Mesh(nodes, tris, nb, tags)
    if np.any(mesh.areas <= 0):
        raise MeshFailure("mesher produced inverted triangles")
    # small corners of the input cannot be repaired by refinement
    corner_floor = min(MIN_ANGLE_DEG, _min_corner_angle(pts))
    if mesh.angles().min() < corner_floor - 1e-6:
        raise MeshFailure("could not meet the minimum angle bound")
    return mesh


def _boundary_first(out: dict, pts: np.ndarray, tags: np.ndarray):
    """Renumber nodes so the boundary comes first, counter-clockwise.

    Triangle may split input segments; every boundary node gets a position
    ``j + s`` (segment index plus fraction along it) and the boundary is
    sorted by that position.
    """
    nodes = out["vertices"]
    n_in = len(pts)
    if not np.array_equal(nodes[:n_in], pts):
        raise MeshFailure("mesher reordered input vertices")
    seg_nodes = out["segments"].ravel()
    seg_marks = np.repeat(out["segment_markers"].ravel() - 2, 2)
    bnodes, first = np.unique(seg_nodes, return_index=True)
    owner = seg_marks[first]
    nxt = pts[(owner + 1) % n_in]
    start = pts[owner]
    frac = np.einsum("ij,ij->i", nodes[bnodes] - start, nxt - start) / np.einsum(
        "ij,ij->i", nxt - start, nxt - start
    )
    pos = np.where(bnodes < n_in, bnodes.astype(float), owner + np.clip(frac, 0.0, 1.0 - 1e-12))
    order = bnodes[np.argsort(pos, kind="stable")]
    pos_sorted = np.sort(pos, kind="stable")
    is_b = np.zeros(len(nodes), dtype=bool)
    is_b[order] = True
    perm = np.concatenate([order, np.flatnonzero(~is_b)])
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    edge_tags = tags[np.floor(pos_sorted).astype(int)]
    return nodes[perm], inv[out["triangles"]], len(order), edge_tags


def _min_corner_angle(pts: np.ndarray) -> float:
    e_in = pts - np.roll(pts, 1, axis=0)
    e_out = np.roll(pts, -1, axis=0) - pts
    cosv = -np.einsum("ij,ij->i", e_in, e_out) / (
        np.linalg.norm(e_in, axis=1) * np.linalg.norm(e_out, axis=1)
    )
    return float(np.degrees(np.arccos(np.clip(cosv, -1, 1))).min())


@dataclass
class ScalarField:
    """Nodal values of the P1 solution plus iteration diagnostics."""

    mesh: Mesh
    values: np.ndarray
    beta: float
    iterations: int = 0
    sup_trace: list = field(default_factory=list)
    energy_trace: list = field(default_factory=list)
    monotone: bool = True
    residual: float = float("nan")

    def weak_residual(self) -> np.ndarray:
        """``int grad(phi).grad(v_j) - int phi**beta v_j`` for every node ``j``."""
        m = self.mesh
        return m.stiffness @ self.values - m.lumped_mass * np.maximum(self.values, 0.0) ** self.beta

    def interpolate(self, points) -> np.ndarray:
        """Evaluate the P1 field at points (``nan`` outside the mesh)."""
        import matplotlib.tri as mtri

        tri = mtri.Triangulation(self.mesh.nodes[:, 0], self.mesh.nodes[:, 1], self.mesh.triangles)
        interp = mtri.LinearTriInterpolator(tri, self.values)
        pts = np.atleast_2d(points)
        return np.ma.filled(interp(pts[:, 0], pts[:, 1]), np.nan)


def solve_sublinear(mesh: Mesh, cfg: SolverConfig) -> ScalarField:
    """Monotone fixed-point solve of the discrete sub-linear Dirichlet problem.

    The starting iterate is ``C * w`` with ``w`` the discrete torsion
    function (``K w = m``) and ``C = max(w)**(beta / (1 - beta))``, which is
    a discrete supersolution.  Iteration stops when the relative sup-norm
    change is below ``fp_tol`` and the weak-form residual on interior nodes is
    below ``lin_tol`` times the largest nodal load.
    """
    beta = cfg.beta
    nb = mesh.n_boundary
    K = mesh.stiffness
    m = mesh.lumped_mass
    interior = slice(nb, None)
    K_ii = K[interior, interior].tocsc()
    if K_ii.shape[0] == 0:
        raise MeshFailure("mesh has no interior nodes")
    m_i = m[interior]
    lu = splu(K_ii)

    w = lu.solve(m_i)
    phi = max(w.max(), 0.0) ** (beta / (1.0 - beta)) * w
    field_ = ScalarField(mesh, np.zeros(mesh.n_nodes), beta)
    sup_trace = [float(phi.max())]
    energy_trace = []
    monotone = True
    for it in range(1, cfg.max_iter + 1):
        load = m_i * np.maximum(phi, 0.0) ** beta
        new = lu.solve(load)
        if np.any(new > phi * (1.0 + 1e-12) + 1e-300):
            monotone = False
        change = np.abs(new - phi).max()
        phi = new
        sup = float(phi.max())
        sup_trace.append(sup)
        F = float(phi @ (K_ii @ phi))
        F_dual = float(m_i @ np.maximum(phi, 0.0) ** (beta + 1.0))
        energy_trace.append(0.5 * F - F_dual / (beta + 1.0))
        resid = np.abs(K_ii @ phi - m_i * np.maximum(phi, 0.0) ** beta).max()
        scale = float((m_i * np.maximum(phi, 0.0) ** beta).max())
        if change <= cfg.fp_tol * sup and resid <= cfg.lin_tol * scale:
            break
    else:
        raise NonConvergence(
            f"fixed point did not converge in {cfg.max_iter} iterations "
            f"(last change {change:.3e}, residual {resid / scale:.3e})"
        )
    if np.any(phi <= 0):
        raise NonPositivity("interior values are not strictly positive")
    values = np.zeros(mesh.n_nodes)
    values[interior] = phi
    field_.values = values
    field_.iterations = it
    field_.sup_trace = sup_trace
    field_.energy_trace = energy_trace
    field_.monotone = monotone
    field_.residual = resid / scale
    log.debug("fixed point converged in %d iterations (residual %.2e)", it, field_.residual)
    return field_


def solve_torsion(mesh: Mesh) -> ScalarField:
    """Discrete torsion function ``-lap w = 1``, returned as a ``beta = 0`` field.

    Used to calibrate the flux recovery against the closed form on disks.
    """
    nb = mesh.n_boundary
    interior = slice(nb, None)
    values = np.zeros(mesh.n_nodes)
    values[interior] = splu(mesh.stiffness[interior, interior].tocsc()).solve(mesh.lumped_mass[interior])
    return ScalarField(mesh, values, 0.0, iterations=1, monotone=True, residual=0.0)


def solve_body(body: ConvexBody, cfg: SolverConfig) -> ScalarField:
    return solve_sublinear(triangulate(body, cfg), cfg)


@dataclass(frozen=True)
class FieldStats:
    sup_phi: float
    sup_grad: float
    diameter: float
    bound_sup: float
    bound_grad: float

    @property
    def sup_ok(self) -> bool:
        return self.sup_phi <= self.bound_sup

    @property
    def grad_ok(self) -> bool:
        return self.sup_grad <= self.bound_grad

    @property
    def ok(self) -> bool:
        return self.sup_ok and self.grad_ok


def field_stats(field_: ScalarField, body: ConvexBody, cfg: SolverConfig) -> FieldStats:
    """Sup norms of the solution and its gradient against the a-priori bounds.

    ``bound_sup = (exp(2R) - 1)**(1/(1-beta))`` and
    ``bound_grad = sup_phi**beta * R / 2`` with ``R`` the diameter.
    """
    beta = cfg.beta
    R = body.diameter
    sup_phi = float(field_.values.max())
    grads = field_.mesh.gradients(field_.values)
    sup_grad = float(np.linalg.norm(grads, axis=1).max())
    bound_sup = math.expm1(2.0 * R) ** (1.0 / (1.0 - beta))
    bound_grad = 0.5 * sup_phi**beta * R
    stats = FieldStats(sup_phi, sup_grad, R, bound_sup, bound_grad)
    if not stats.ok:
        log.warning("a-priori bound violated: %s", stats)
    return stats
