"""Quadrature weights for point clouds.

Two routes produce the volume weight vectors ``V`` (over the manifold
samples) and ``A`` (over the boundary samples):

* :func:`mesh_weights` splits each simplex volume evenly among its vertices
  (and each boundary facet among its vertices), which conserves the total
  mesh measure exactly.
* :func:`estimate_weights` works from raw points: per point it fits a tangent
  space to the local neighborhood by weighted PCA, projects the neighborhood,
  and takes the volume of the point's Voronoi cell among the projections
  (clipped to the projected convex hull near the boundary, or whenever the
  cell is unbounded).

Both also feed the bandwidth heuristic: ``delta`` is the mean over points of
the mean distance to the ``nn_count`` nearest neighbors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

if TYPE_CHECKING:  # pragma: no cover
    from .geometry import SimplicialMesh


def _simplex_measure(verts, cells, k):
    """Unsigned k-volume of each simplex; verts may be embedded in R^3."""
    p0 = verts[cells[:, 0]]
    if k == 1:
        return np.linalg.norm(verts[cells[:, 1]] - p0, axis=1)
    if k == 2:
        a = verts[cells[:, 1]] - p0
        b = verts[cells[:, 2]] - p0
        if verts.shape[1] == 2:
            return 0.5 * np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        return 0.5 * np.linalg.norm(np.cross(a, b), axis=1)
    a = verts[cells[:, 1]] - p0
    b = verts[cells[:, 2]] - p0
    c = verts[cells[:, 3]] - p0
    return np.abs(np.einsum("ij,ij->i", np.cross(a, b), c)) / 6.0


def _check_degenerate(verts, cells, vols, k, what):
    edge = verts[cells[:, 0]] - verts[cells[:, 1]]
    scale = np.maximum(np.linalg.norm(edge, axis=1), 1e-300) ** k
    bad = np.nonzero(vols <= 1e-13 * scale)[0]
    if bad.size:
        raise ValueError(f"degenerate {what} {bad[0]} with measure {vols[bad[0]]:.3e}")


def mesh_weights(mesh: "SimplicialMesh"):
    """Vertex weights from a mesh: each simplex splits its volume evenly.

    Returns ``(V, A)`` where ``V[i]`` sums vol(c)/(k+1) over cells containing
    vertex i, and ``A[j]`` sums vol(b)/k over boundary facets containing the
    j-th boundary vertex (boundary vertices in sorted index order).  The sums
    conserve total volume and total boundary measure exactly.
    """
    k = mesh.intrinsic_dim
    verts, cells = mesh.vertices, mesh.cells
    vols = _simplex_measure(verts, cells, k)
    _check_degenerate(verts, cells, vols, k, "cell")
    V = np.zeros(mesh.n_vertices)
    share = np.repeat(vols / (k + 1), k + 1)
    np.add.at(V, cells.ravel(), share)

    bvert = mesh.boundary_vertices()
    A = np.zeros(bvert.size)
    if mesh.boundary_cells.size:
        bvols = _simplex_measure(verts, mesh.boundary_cells, k - 1)
        _check_degenerate(verts, mesh.boundary_cells, bvols, k - 1, "boundary cell")
        full = np.zeros(mesh.n_vertices)
        np.add.at(full, mesh.boundary_cells.ravel(), np.repeat(bvols / k, k))
        A = full[bvert]
    return V, A


@dataclass(frozen=True)
class WeightEstimateConfig:
    """Knobs for the point-only weight estimator.

    ``nn_count`` defaults to 10 for curves/surfaces and 15 in 3-D (only used
    there for the delta heuristic).  The tangent fit weights each neighbor q
    of p by exp(-|p-q|^2 / (factor*delta_p)^2) unless ``uniform`` is chosen.
    ``boundary_clip`` clips Voronoi cells of points within 2*delta_p of the
    boundary set to the convex hull of the projected neighborhood; unbounded
    cells are always clipped.
    """

    nn_count: int | None = None
    tangent_fit_weighting: str = "gaussian"
    bandwidth_factor: float = 1.0
    boundary_clip: bool = True

    def __post_init__(self):
        if self.tangent_fit_weighting not in ("gaussian", "uniform"):
            raise ValueError("tangent_fit_weighting must be 'gaussian' or 'uniform'")
        if self.bandwidth_factor <= 0:
            raise ValueError("bandwidth_factor must be positive")

    def resolved_nn(self, k: int) -> int:
        nn = self.nn_count if self.nn_count is not None else (15 if k >= 3 else 10)
        if nn < k + 1:
            raise ValueError(f"nn_count must be at least k+1 = {k + 1}")
        return nn


def mean_knn_distance(points, nn_count: int) -> float:
    """delta: mean over points of the mean distance to the nn nearest neighbors."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if points.shape[0] <= nn_count:
        raise ValueError(f"need more than nn_count={nn_count} points")
    tree = cKDTree(points)
    dists, _ = tree.query(points, k=nn_count + 1)
    return float(dists[:, 1:].mean())


def _clip_halfplane(poly, normal, offset):
    """Keep the part of a convex polygon with x . normal <= offset."""
    if len(poly) == 0:
        return poly
    vals = poly @ normal - offset
    out = []
    for i in range(len(poly)):
        j = (i + 1) % len(poly)
        pi, pj = poly[i], poly[j]
        vi, vj = vals[i], vals[j]
        if vi <= 0:
            out.append(pi)
            if vj > 0:
                out.append(pi + (pj - pi) * (vi / (vi - vj)))
        elif vj <= 0:
            out.append(pi + (pj - pi) * (vi / (vi - vj)))
    return np.array(out) if out else np.zeros((0, 2))


def _polygon_area(poly):
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _voronoi_cell_1d(s, clip_to_hull):
    pos = s[s > 0]
    neg = s[s < 0]
    right = pos.min() / 2 if pos.size else np.inf
    left = neg.max() / 2 if neg.size else -np.inf
    if clip_to_hull or not np.isfinite(right) or not np.isfinite(left):
        right = min(right, max(s.max(), 0.0))
        left = max(left, min(s.min(), 0.0))
    return float(right - left)


def _voronoi_cell_2d(proj, clip_to_hull):
    """Area of the origin's Voronoi cell among projected neighbors.

    The cell is the intersection of bisector half-planes x.q <= |q|^2/2; it
    is intersected with the convex hull of {0} u proj when requested or when
    it reaches the bounding box (unbounded cell).
    """
    L = 4.0 * np.linalg.norm(proj, axis=1).max()
    poly = np.array([[-L, -L], [L, -L], [L, L], [-L, L]])
    for q in proj:
        q2 = q @ q
        if q2 == 0.0:
            return 0.0
        poly = _clip_halfplane(poly, q, q2 / 2)
        if len(poly) == 0:
            return 0.0
    unbounded = np.any(np.abs(poly) >= L * (1 - 1e-9))
    if clip_to_hull or unbounded:
        pts = np.vstack([proj, [[0.0, 0.0]]])
        try:
            hull = ConvexHull(pts)
        except QhullError:
            raise ValueError("degenerate tangent fit: projected neighborhood is collinear") from None
        hv = pts[hull.vertices]  # counterclockwise
        for i in range(len(hv)):
            a, b = hv[i], hv[(i + 1) % len(hv)]
            edge = b - a
            normal = np.array([edge[1], -edge[0]])  # outward for CCW hull
            poly = _clip_halfplane(poly, normal, normal @ a)
    return _polygon_area(poly)


def _tangent_basis(diffs, w, k, d):
    """Top-k principal directions of the weighted second-moment matrix."""
    M = (diffs * w[:, None]).T @ diffs
    evals, evecs = np.linalg.eigh(M)
    if evals[d - k] <= 1e-12 * max(evals[-1], 1e-300):
        raise ValueError("degenerate tangent fit: neighborhood has rank < k")
    return evecs[:, d - k:]


def estimate_weights(points, boundary_idx, k: int, cfg: WeightEstimateConfig | None = None):
    """Point-only weight estimation via local tangent-plane Voronoi cells.

    Per point: take the ``nn_count`` nearest neighbors, set delta_p to their
    mean distance, re-collect neighbors within delta_p (falling back to the
    nn_count nearest when fewer), fit the tangent space, project, and measure
    the point's Voronoi cell among the projections.  Boundary weights come
    from the same procedure applied to the boundary subset in dimension k-1.

    Returns ``(V, A, delta)`` with delta the mean of the per-point delta_p,
    used downstream for kernel bandwidth selection.

    Supports k in {1, 2}; 3-D clouds must carry mesh weights.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    boundary_idx = np.asarray(boundary_idx, dtype=np.int64).reshape(-1)
    n, d = points.shape
    if k not in (1, 2):
        raise ValueError("estimate_weights supports k in {1, 2}; use mesh_weights for k = 3")
    if k > d:
        raise ValueError("intrinsic dimension exceeds ambient dimension")
    cfg = cfg or WeightEstimateConfig()
    nn = cfg.resolved_nn(k)
    if n < nn + 1:
        raise ValueError(f"need at least nn_count+1 = {nn + 1} points, got {n}")

    tree = cKDTree(points)
    dists, idxs = tree.query(points, k=nn + 1)
    delta_i = dists[:, 1:].mean(axis=1)
    delta = float(delta_i.mean())

    btree = cKDTree(points[boundary_idx]) if boundary_idx.size else None
    V = np.zeros(n)
    for i in range(n):
        ball = tree.query_ball_point(points[i], delta_i[i])
        nbrs = np.array([j for j in ball if j != i], dtype=np.int64)
        if nbrs.size < nn:
            nbrs = idxs[i, 1:]
        diffs = points[nbrs] - points[i]
        dist = np.linalg.norm(diffs, axis=1)
        order = np.lexsort((nbrs, dist))  # fixed summation order for determinism
        diffs, dist = diffs[order], dist[order]

        if k == d:
            proj = diffs
        else:
            if cfg.tangent_fit_weighting == "gaussian":
                w = np.exp(-((dist / (cfg.bandwidth_factor * delta_i[i])) ** 2))
            else:
                w = np.ones(diffs.shape[0])
            proj = diffs @ _tangent_basis(diffs, w, k, d)

        near_boundary = bool(
            btree is not None and btree.query(points[i], k=1)[0] < 2.0 * delta_i[i]
        )
        clip = cfg.boundary_clip and near_boundary
        if k == 1:
            V[i] = _voronoi_cell_1d(proj.ravel(), clip)
        else:
            if proj.shape[0] < 3:
                raise ValueError("fewer than 3 projected neighbors for k = 2")
            V[i] = _voronoi_cell_2d(proj, clip)

    if boundary_idx.size == 0:
        A = np.zeros(0)
    elif k == 1:
        A = np.ones(boundary_idx.size)  # 0-dimensional boundary: counting measure
    else:
        sub = points[boundary_idx]
        sub_cfg = cfg
        if sub.shape[0] <= cfg.resolved_nn(k - 1):
            sub_cfg = WeightEstimateConfig(
                nn_count=max(k, sub.shape[0] - 1),
                tangent_fit_weighting=cfg.tangent_fit_weighting,
                bandwidth_factor=cfg.bandwidth_factor,
                boundary_clip=cfg.boundary_clip,
            )
        A, _, _ = estimate_weights(sub, np.zeros(0, dtype=np.int64), k - 1, sub_cfg)
    return V, A, delta
