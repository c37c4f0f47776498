"""Planar convex bodies stored as strictly convex counter-clockwise polygons.

Everything a convex body needs downstream is here: support functions,
reconstruction from sampled support values (half-plane intersection),
Minkowski sums, the Hausdorff distance, mean width against a grid measure,
similarity transforms, Steiner-point recentering and a seeded generator of
random bodies for property tests.
"""
from __future__ import annotations

import json
import math
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

from .errors import EmptyInterior, InvalidBody, NonpositiveScale, Unbounded, ZeroMassMeasure
from .grid import MIN_DIRECTIONS, SupportVector, SurfaceMeasure, grid_angles, unit

TWO_PI = 2.0 * math.pi
# turning angles below this are treated as straight and merged
TURN_TOL = 1e-12
# relative (to body size) length under which an edge is a duplicated vertex
LENGTH_TOL = 1e-12
# normal angles closer than this are the same direction in a Minkowski sum
PARALLEL_TOL = 1e-9


def _turning(e_in: np.ndarray, e_out: np.ndarray) -> np.ndarray:
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = np.einsum("ij,ij->i", e_in, e_out)
    return np.arctan2(cross, dot)


def _clean(vertices: np.ndarray) -> np.ndarray:
    """Drop repeated vertices and straight-angle vertices until stable."""
    v = vertices
    scale = max(float(np.ptp(v, axis=0).max()), 1e-300)
    while len(v) >= 3:
        nxt = np.roll(v, -1, axis=0)
        keep = np.linalg.norm(nxt - v, axis=1) > LENGTH_TOL * scale
        if not keep.all():
            v = v[keep]
            continue
        e_out = np.roll(v, -1, axis=0) - v
        e_in = v - np.roll(v, 1, axis=0)
        turn = _turning(e_in, e_out)
        straight = np.abs(turn) < TURN_TOL
        if straight.any():
            # drop one at a time so a run of collinear points keeps its ends
            v = np.delete(v, int(np.flatnonzero(straight)[0]), axis=0)
            continue
        break
    return v


class ConvexBody:
    """Strictly convex polygon with counter-clockwise vertices.

    The vertex list is rotated so that edge ``i`` (from vertex ``i`` to
    ``i+1``) has the ``i``-th smallest outer-normal angle in ``[0, 2pi)``.
    Instances are treated as immutable.
    """

    __slots__ = ("vertices", "__dict__")

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise InvalidBody("vertices must be an (n, 2) array")
        if not np.all(np.isfinite(v)):
            raise InvalidBody("vertices must be finite")
        v = _clean(v)
        if len(v) < 3:
            raise InvalidBody("a convex body needs at least 3 non-degenerate vertices")
        e_out = np.roll(v, -1, axis=0) - v
        e_in = v - np.roll(v, 1, axis=0)
        turn = _turning(e_in, e_out)
        if np.any(turn <= 0):
            raise InvalidBody("vertices are not strictly convex and counter-clockwise")
        if abs(turn.sum() - TWO_PI) > 1e-9:
            raise InvalidBody("polygon winds more than once")
        normal_angles = np.mod(np.arctan2(e_out[:, 1], e_out[:, 0]) - math.pi / 2, TWO_PI)
        start = int(np.argmin(normal_angles))
        v = np.roll(v, -start, axis=0)
        v.setflags(write=False)
        self.vertices = v

    @classmethod
    def from_points(cls, points) -> "ConvexBody":
        """Convex hull of an arbitrary point cloud."""
        pts = np.asarray(points, dtype=float)
        hull = ConvexHull(pts)
        return cls(pts[hull.vertices])

    # -- derived edge data -------------------------------------------------
    @cached_property
    def edge_vectors(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    @cached_property
    def lengths(self) -> np.ndarray:
        return np.linalg.norm(self.edge_vectors, axis=1)

    @cached_property
    def normals(self) -> np.ndarray:
        e = self.edge_vectors
        return np.stack([e[:, 1], -e[:, 0]], axis=1) / self.lengths[:, None]

    @cached_property
    def normal_angles(self) -> np.ndarray:
        n = self.normals
        return np.mod(np.arctan2(n[:, 1], n[:, 0]), TWO_PI)

    @cached_property
    def exterior_angles(self) -> np.ndarray:
        """Normal-cone opening at each vertex (sums to ``2*pi``)."""
        a = self.normal_angles
        return np.mod(a - np.roll(a, 1), TWO_PI)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def area(self) -> float:
        x, y = self.vertices.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @cached_property
    def perimeter(self) -> float:
        return float(self.lengths.sum())

    @cached_property
    def diameter(self) -> float:
        return float(pdist(self.vertices).max())

    def support(self, theta):
        """Support function ``max_x x . (cos theta, sin theta)``; vectorized in theta."""
        theta = np.asarray(theta, dtype=float)
        vals = (unit(theta.ravel()) @ self.vertices.T).max(axis=1)
        return vals.reshape(theta.shape) if theta.ndim else float(vals[0])

    def sample_support(self, M: int) -> SupportVector:
        return SupportVector(self.support(grid_angles(M)))

    def contains(self, points, tol: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        rhs = np.einsum("ij,ij->i", self.normals, self.vertices)
        return np.all(pts @ self.normals.T <= rhs + tol, axis=1)

    def to_dict(self) -> dict:
        return {"vertices": self.vertices.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "ConvexBody":
        return cls(np.asarray(data["vertices"], dtype=float))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "ConvexBody":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def __repr__(self) -> str:
        return f"ConvexBody(n_vertices={self.n_vertices}, area={self.area:.6g})"


def support_function(body: ConvexBody, theta):
    return body.support(theta)


def regular_polygon(n: int, circumradius: float = 1.0, center=(0.0, 0.0)) -> ConvexBody:
    """Regular n-gon inscribed in a circle, with edge normals at ``2*pi*k/n``."""
    ang = TWO_PI * (np.arange(n) + 0.5) / n
    return ConvexBody(np.asarray(center, dtype=float) + circumradius * unit(ang))


def square(half_side: float = 1.0) -> ConvexBody:
    s = half_side
    return ConvexBody([[s, -s], [s, s], [-s, s], [-s, -s]])


def disk(radius: float = 1.0, n: int = 256) -> ConvexBody:
    """Inscribed regular ``n``-gon standing in for the disk of given radius."""
    return regular_polygon(n, radius)


def _clip(poly: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Clip a convex polygon to the half-plane ``x . normal <= offset``."""
    s = poly @ normal - offset
    inside = s <= 0.0
    if inside.all():
        return poly
    if not inside.any():
        return poly[:0]
    s_next = np.roll(s, -1)
    nxt = np.roll(poly, -1, axis=0)
    cross = inside != np.roll(inside, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(cross, s / (s - s_next), 0.0)
    hit = poly + t[:, None] * (nxt - poly)
    out = np.stack([poly, hit], axis=1).reshape(-1, 2)
    mask = np.stack([inside, cross], axis=1).ravel()
    return out[mask]


def halfplane_intersection(thetas, values) -> ConvexBody:
    """Polygon ``{x : x . xi_i <= h_i}`` for arbitrary directions ``theta_i``."""
    thetas = np.mod(np.asarray(thetas, dtype=float), TWO_PI)
    values = np.asarray(values, dtype=float)
    order = np.argsort(thetas, kind="stable")
    thetas, values = thetas[order], values[order]
    if len(thetas) < 3:
        raise Unbounded("fewer than 3 constraint directions")
    gaps = np.diff(np.concatenate([thetas, thetas[:1] + TWO_PI]))
    if gaps.max() >= math.pi - 1e-12:
        raise Unbounded("constraint normals do not positively span the plane")
    normals = unit(thetas)
    R = 10.0 * (np.abs(values).max() + 1.0)
    for _ in range(8):
        poly = R * np.array([[1.0, -1.0], [1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0]])
        for nrm, h in zip(normals, values):
            poly = _clip(poly, nrm, h)
            if len(poly) == 0:
                raise EmptyInterior("half-plane intersection is empty")
        if np.abs(poly).max() < R * (1 - 1e-9):
            break
        R *= 100.0
    else:
        raise Unbounded("half-plane intersection did not close")
    x, y = poly.T
    area = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
    scale = max(np.abs(values).max(), 1e-300)
    if area <= 1e-14 * scale * scale:
        raise EmptyInterior("half-plane intersection has zero area")
    try:
        return ConvexBody(poly)
    except InvalidBody as exc:  # pragma: no cover - roundoff on slivers
        raise EmptyInterior(str(exc)) from exc


def body_from_support(h: SupportVector) -> ConvexBody:
    """Largest body whose support at every grid direction is at most ``h``."""
    return halfplane_intersection(h.thetas, h.values)


def active_bins(body: ConvexBody, M: int, tol: float = 1e-9) -> np.ndarray:
    """Grid indices of the body's edge normals; ``-1`` where an edge is off-grid."""
    idx = np.rint(body.normal_angles * M / TWO_PI).astype(int) % M
    off = np.abs(np.angle(np.exp(1j * (body.normal_angles - grid_angles(M)[idx])))) > tol
    idx[off] = -1
    return idx


def minkowski_sum(a: ConvexBody, b: ConvexBody) -> ConvexBody:
    """Minkowski sum by merging the two edge sequences in normal-angle order."""
    # vertex 0 of a canonical body supports every direction between its last
    # and first edge normals, so the two vertex-0s sum to a vertex of a + b
    edges = np.concatenate([a.edge_vectors, b.edge_vectors])
    angles = np.concatenate([a.normal_angles, b.normal_angles])
    order = np.argsort(angles, kind="stable")
    edges, angles = edges[order], angles[order]
    # parallel edges from the two bodies become one edge
    group = np.concatenate([[0], np.cumsum(np.diff(angles) > PARALLEL_TOL)])
    merged = np.zeros((group[-1] + 1, 2))
    np.add.at(merged, group, edges)
    start = a.vertices[0] + b.vertices[0]
    pts = start + np.concatenate([[[0.0, 0.0]], np.cumsum(merged, axis=0)[:-1]])
    return ConvexBody(pts)


def hausdorff_distance(a: ConvexBody, b: ConvexBody) -> float:
    """``sup_theta |h_a - h_b|``, maximized exactly on each smooth piece.

    Between consecutive edge normals of either body both support functions
    are linear in ``xi``, so the difference is ``d . xi`` for a fixed vector
    ``d`` and its extremum on the arc is at an endpoint or at ``+-d/|d|``.
    """
    brk = np.unique(np.concatenate([a.normal_angles, b.normal_angles]))
    lo = brk
    hi = np.concatenate([brk[1:], brk[:1] + TWO_PI])
    mid = 0.5 * (lo + hi)
    xi_mid = unit(mid)
    va = a.vertices[np.argmax(xi_mid @ a.vertices.T, axis=1)]
    vb = b.vertices[np.argmax(xi_mid @ b.vertices.T, axis=1)]
    d = va - vb
    cand = [np.abs(np.einsum("ij,ij->i", d, unit(lo))), np.abs(np.einsum("ij,ij->i", d, unit(hi)))]
    norm_d = np.linalg.norm(d, axis=1)
    for phi in (np.arctan2(d[:, 1], d[:, 0]), np.arctan2(-d[:, 1], -d[:, 0])):
        phi = lo + np.mod(phi - lo, TWO_PI)
        cand.append(np.where(phi <= hi, norm_d, 0.0))
    return float(np.max(np.stack(cand)))


def mean_width(body: ConvexBody, mu: SurfaceMeasure) -> float:
    """``(2 / mu(S^1)) * sum_i w_i h(theta_i)``."""
    if mu.mass <= 0:
        raise ZeroMassMeasure("mean width needs a measure of positive mass")
    return 2.0 * float(np.dot(mu.weights, body.support(mu.thetas))) / mu.mass


def transform(body: ConvexBody, t: float, x0=(0.0, 0.0)) -> ConvexBody:
    """Image under ``x -> t*x + x0``."""
    if not t > 0:
        raise NonpositiveScale(f"scale must be positive, got {t}")
    return ConvexBody(t * body.vertices + np.asarray(x0, dtype=float))


def steiner_point(body: ConvexBody) -> np.ndarray:
    """Steiner point ``(1/pi) int h(xi) xi dtheta``.

    For a polygon this equals the vertex average weighted by normal-cone
    angles, which is what is computed.
    """
    return body.exterior_angles @ body.vertices / TWO_PI


def recenter(body: ConvexBody):
    """Translate the Steiner point to the origin; returns ``(body, offset)``."""
    offset = -steiner_point(body)
    return ConvexBody(body.vertices + offset), offset


def random_convex_body(
    seed: int,
    M: int = 256,
    scale=(0.7, 1.0),
    amplitude: float = 0.25,
    modes=(2, 3, 4, 5),
) -> ConvexBody:
    """Seeded random body: a perturbed disk support vector, regularized.

    The support vector of a disk of random radius is perturbed by a few
    low-frequency Fourier modes with relative size at most ``amplitude`` and
    then mapped through :func:`body_from_support`, which makes it convex.
    Because every sampled value stays positive the origin is interior.
    """
    if M < MIN_DIRECTIONS:
        raise ValueError(f"need at least {MIN_DIRECTIONS} directions")
    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    r = rng.uniform(*scale)
    theta = grid_angles(M)
    pert = np.zeros(M)
    for k in modes:
        a, b = rng.standard_normal(2)
        pert += (a * np.cos(k * theta) + b * np.sin(k * theta)) / k
    peak = np.abs(pert).max()
    if peak > 0:
        pert *= amplitude / peak
    return body_from_support(SupportVector(r * (1.0 + pert)))
