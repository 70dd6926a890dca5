"""Domain representations: point clouds, simplicial meshes, generators and I/O.

Meshes are intermediate artifacts: the solvers consume only a
:class:`PointCloudDomain` (points, boundary subset, and quadrature weights).
Structured generators are provided for the unit disk (triangles), the unit
ball (tetrahedra) and a planar two-hole domain, together with midpoint
subdivision for nested refinement studies.

All types are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from . import weights as _weights


class ParseError(ValueError):
    """Malformed geometry file; carries the offending line number."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def _freeze(arr, dtype):
    out = np.ascontiguousarray(arr, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class PointCloudDomain:
    """Sampled manifold: points, boundary subset, and quadrature weights.

    Attributes
    ----------
    points : (n, d) float array
    intrinsic_dim : int
        Manifold dimension k, 1 <= k <= d <= 3.
    boundary_idx : (m,) int array
        Indices into ``points`` sampling the boundary (may be empty).
    volume_weights : (n,) float array or None
        Per-point weights V with sum approximately the manifold volume.
    boundary_weights : (m,) float array or None
        Per-boundary-point weights A, ordered like ``boundary_idx``.
    """

    points: np.ndarray
    intrinsic_dim: int
    boundary_idx: np.ndarray
    volume_weights: np.ndarray | None = None
    boundary_weights: np.ndarray | None = None

    def __post_init__(self):
        pts = _freeze(np.atleast_2d(self.points), float)
        object.__setattr__(self, "points", pts)
        n, d = pts.shape
        if not np.all(np.isfinite(pts)):
            raise ValueError("point coordinates must be finite")
        k = int(self.intrinsic_dim)
        if not (1 <= k <= d <= 3):
            raise ValueError(f"need 1 <= k <= d <= 3, got k={k}, d={d}")
        object.__setattr__(self, "intrinsic_dim", k)
        bidx = _freeze(np.asarray(self.boundary_idx).reshape(-1), np.int64)
        if bidx.size:
            if bidx.min() < 0 or bidx.max() >= n:
                raise ValueError("boundary index out of range")
            if np.unique(bidx).size != bidx.size:
                raise ValueError("boundary indices must be distinct")
        object.__setattr__(self, "boundary_idx", bidx)
        for name, size in (("volume_weights", n), ("boundary_weights", bidx.size)):
            w = getattr(self, name)
            if w is not None:
                w = _freeze(np.asarray(w).reshape(-1), float)
                if w.size != size:
                    raise ValueError(f"{name} has length {w.size}, expected {size}")
                if not np.all(np.isfinite(w)) or np.any(w < 0):
                    raise ValueError(f"{name} must be finite and nonnegative")
                object.__setattr__(self, name, w)
        if self.volume_weights is not None and self.volume_weights.sum() <= 0:
            raise ValueError("volume weights sum to zero; domain has no measure")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def m(self) -> int:
        return self.boundary_idx.size

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    @property
    def has_weights(self) -> bool:
        return self.volume_weights is not None and (
            self.m == 0 or self.boundary_weights is not None
        )

    def with_weights(self, V, A) -> "PointCloudDomain":
        return PointCloudDomain(self.points, self.intrinsic_dim, self.boundary_idx, V, A)


@dataclass(frozen=True)
class SimplicialMesh:
    """k-simplex mesh with explicit boundary facets (k in {2, 3})."""

    vertices: np.ndarray
    cells: np.ndarray
    boundary_cells: np.ndarray
    intrinsic_dim: int

    def __post_init__(self):
        verts = _freeze(np.atleast_2d(self.vertices), float)
        if not np.all(np.isfinite(verts)):
            raise ValueError("vertex coordinates must be finite")
        object.__setattr__(self, "vertices", verts)
        k = int(self.intrinsic_dim)
        if k not in (2, 3):
            raise ValueError(f"intrinsic_dim must be 2 or 3, got {k}")
        object.__setattr__(self, "intrinsic_dim", k)
        cells = _freeze(np.atleast_2d(self.cells), np.int64)
        bcells = np.asarray(self.boundary_cells, dtype=np.int64).reshape(-1, k)
        bcells = _freeze(bcells, np.int64)
        n = verts.shape[0]
        if cells.shape[1] != k + 1:
            raise ValueError(f"cells must have {k + 1} vertices each")
        for name, arr in (("cell", cells), ("boundary cell", bcells)):
            if arr.size and (arr.min() < 0 or arr.max() >= n):
                raise ValueError(f"{name} index out of range")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "boundary_cells", bcells)
        _check_boundary_facets(cells, bcells, k)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    def boundary_vertices(self) -> np.ndarray:
        """Sorted unique vertex indices incident to boundary facets."""
        return np.unique(self.boundary_cells)

    def edges(self) -> np.ndarray:
        """Unique undirected edges (sorted pairs) of all cells."""
        k1 = self.cells.shape[1]
        pairs = []
        for a in range(k1):
            for b in range(a + 1, k1):
                pairs.append(self.cells[:, [a, b]])
        e = np.sort(np.vstack(pairs), axis=1)
        return np.unique(e, axis=0)

    def max_edge_length(self) -> float:
        e = self.edges()
        d = self.vertices[e[:, 0]] - self.vertices[e[:, 1]]
        return float(np.sqrt((d**2).sum(axis=1)).max())


def _facet_key(facets):
    """Row-sortable canonical keys for facet index tuples."""
    return np.sort(np.asarray(facets, dtype=np.int64), axis=1)


def _check_boundary_facets(cells, bcells, k):
    """Every boundary facet must be a facet of exactly one cell."""
    if bcells.size == 0:
        return
    k1 = k + 1
    all_facets = []
    for drop in range(k1):
        idx = [a for a in range(k1) if a != drop]
        all_facets.append(cells[:, idx])
    facets = _facet_key(np.vstack(all_facets))
    uniq, counts = np.unique(facets, axis=0, return_counts=True)
    once = uniq[counts == 1]
    lookup = {tuple(row) for row in once}
    for row in _facet_key(bcells):
        if tuple(row) not in lookup:
            raise ValueError(f"boundary facet {tuple(row)} is not a facet of exactly one cell")


@dataclass(frozen=True)
class DomainSpec:
    """Analytic description of a built-in domain (or a file reference).

    ``holes`` is a tuple of ``((cx, cy), radius)`` pairs, used only by the
    two-hole planar domain.  Hole circles must be strictly inside the outer
    circle and pairwise disjoint.
    """

    tag: str
    outer_radius: float = 1.0
    holes: tuple = ()
    path: str | None = None

    _TAGS = ("unit_disk", "unit_ball", "unit_circle_curve", "two_hole_planar", "file")

    def __post_init__(self):
        if self.tag not in self._TAGS:
            raise ValueError(f"unknown domain tag {self.tag!r}")
        if self.tag == "file" and not self.path:
            raise ValueError("file domain requires a path")
        if self.tag == "two_hole_planar":
            if len(self.holes) == 0:
                raise ValueError("two_hole_planar requires hole parameters")
            holes = tuple(((float(c[0]), float(c[1])), float(r)) for c, r in self.holes)
            object.__setattr__(self, "holes", holes)
            R = self.outer_radius
            for c, r in holes:
                if r <= 0:
                    raise ValueError("hole radius must be positive")
                if math.hypot(*c) + r >= R:
                    raise ValueError(f"hole at {c} with radius {r} is not strictly inside the outer circle")
            for i in range(len(holes)):
                for j in range(i + 1, len(holes)):
                    (ci, ri), (cj, rj) = holes[i], holes[j]
                    if math.hypot(ci[0] - cj[0], ci[1] - cj[1]) <= ri + rj:
                        raise ValueError("holes intersect")


def default_two_hole_spec() -> DomainSpec:
    """Outer unit circle with two radius-0.2 holes at (+-0.4, 0)."""
    return DomainSpec("two_hole_planar", holes=(((-0.4, 0.0), 0.2), ((0.4, 0.0), 0.2)))


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def generate_disk_mesh(rings: int) -> SimplicialMesh:
    """Structured polar triangulation of the unit disk.

    Ring ``r`` (1-based) carries ``6 r`` vertices at radius ``r / rings``;
    the total vertex count is ``1 + 3 rings (rings + 1)``.  Boundary edges
    are the outermost ring.
    """
    if rings < 1:
        raise ValueError("rings must be >= 1")
    verts = [np.zeros((1, 2))]
    ring_start = [0, 1]
    for r in range(1, rings + 1):
        ang = 2.0 * np.pi * np.arange(6 * r) / (6 * r)
        rad = r / rings
        verts.append(np.column_stack([rad * np.cos(ang), rad * np.sin(ang)]))
        ring_start.append(ring_start[-1] + 6 * r)
    vertices = np.vstack(verts)

    tris = []
    for r in range(1, rings + 1):
        n_out, n_in = 6 * r, 6 * (r - 1)
        start_out, start_in = ring_start[r], ring_start[r - 1]
        for s in range(6):
            outer = [start_out + (s * r + j) % n_out for j in range(r + 1)]
            if r == 1:
                inner = [0]
            else:
                inner = [start_in + (s * (r - 1) + j) % n_in for j in range(r)]
            for j in range(r):
                tris.append((outer[j], outer[j + 1], inner[j]))
            for j in range(r - 1):
                tris.append((inner[j], outer[j + 1], inner[j + 1]))
    cells = np.array(tris, dtype=np.int64)

    start = ring_start[rings]
    nb = 6 * rings
    bedges = np.column_stack([start + np.arange(nb), start + (np.arange(nb) + 1) % nb])
    return SimplicialMesh(vertices, cells, bedges, intrinsic_dim=2)


_OCTAHEDRON_VERTS = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)
_OCTAHEDRON_FACES = np.array(
    [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]],
    dtype=np.int64,
)


def _subdivide_sphere(verts, faces):
    """One midpoint subdivision of a sphere triangulation, re-snapped to radius 1."""
    verts = list(map(np.asarray, verts))
    mid_cache = {}

    def midpoint(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in mid_cache:
            p = 0.5 * (verts[a] + verts[b])
            verts.append(p / np.linalg.norm(p))
            mid_cache[key] = len(verts) - 1
        return mid_cache[key]

    new_faces = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_faces.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
    return np.vstack(verts), np.array(new_faces, dtype=np.int64)


def _tet_volume(verts, tets):
    a = verts[tets[:, 1]] - verts[tets[:, 0]]
    b = verts[tets[:, 2]] - verts[tets[:, 0]]
    c = verts[tets[:, 3]] - verts[tets[:, 0]]
    return np.einsum("ij,ij->i", np.cross(a, b), c) / 6.0


def generate_ball_mesh(resolution: int) -> SimplicialMesh:
    """Structured tetrahedralization of the unit ball.

    ``resolution`` is the number of radial layers; the sphere triangulation
    is an octahedron subdivided until its edges are no longer than the
    radial spacing (resolution 1 is the plain octahedron).  Boundary
    triangles form the unit sphere with vertices at radius exactly 1.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    layers = resolution
    subdiv = 0 if layers == 1 else max(1, math.ceil(math.log2(layers * math.sqrt(2.0))))
    sv, sf = _OCTAHEDRON_VERTS, _OCTAHEDRON_FACES
    for _ in range(subdiv):
        sv, sf = _subdivide_sphere(sv, sf)
    nsphere = sv.shape[0]

    verts = [np.zeros((1, 3))]
    for j in range(1, layers + 1):
        verts.append(sv * (j / layers))
    vertices = np.vstack(verts)
    # re-snap the outermost layer to defeat accumulated rounding
    outer = 1 + (layers - 1) * nsphere
    outer_pts = vertices[outer:]
    vertices[outer:] = outer_pts / np.linalg.norm(outer_pts, axis=1)[:, None]

    def layer_idx(face, j):
        return tuple(1 + (j - 1) * nsphere + v for v in face)

    tets = []
    for face in sf:
        tets.append((0,) + layer_idx(face, 1))
    for j in range(1, layers):
        for face in sf:
            bot = layer_idx(face, j)
            top = layer_idx(face, j + 1)
            rot = int(np.argmin(bot))
            v0, v1, v2 = bot[rot], bot[(rot + 1) % 3], bot[(rot + 2) % 3]
            v3, v4, v5 = top[rot], top[(rot + 1) % 3], top[(rot + 2) % 3]
            if v1 < v2:
                tets.extend([(v0, v1, v2, v5), (v0, v1, v5, v4), (v0, v4, v5, v3)])
            else:
                tets.extend([(v0, v1, v2, v4), (v0, v4, v2, v5), (v0, v4, v5, v3)])
    cells = np.array(tets, dtype=np.int64)
    vol = _tet_volume(vertices, cells)
    flip = vol < 0
    cells[flip] = cells[flip][:, [0, 2, 1, 3]]

    bfaces = np.array([layer_idx(face, layers) for face in sf], dtype=np.int64)
    return SimplicialMesh(vertices, cells, bfaces, intrinsic_dim=3)


def _point_signed_distance(spec: DomainSpec, pts):
    """Negative inside the two-hole domain, zero on its boundary circles."""
    d = np.linalg.norm(pts, axis=1) - spec.outer_radius
    for (cx, cy), r in spec.holes:
        d = np.maximum(d, r - np.linalg.norm(pts - [cx, cy], axis=1))
    return d


def generate_two_hole_mesh(spec: DomainSpec, target_h: float) -> SimplicialMesh:
    """Delaunay mesh of the outer disk minus the spec's circular holes.

    Boundary circles get evenly spaced vertices (snapped exactly onto the
    circles); the interior is filled with a triangular lattice of spacing
    ``target_h``, and triangles whose centroid falls outside the domain are
    discarded.  Boundary edges come out as three (or 1 + #holes) loops.
    """
    if spec.tag != "two_hole_planar":
        raise ValueError("generate_two_hole_mesh requires a two_hole_planar spec")
    if target_h <= 0:
        raise ValueError("target_h must be positive")
    h = float(target_h)

    circles = [((0.0, 0.0), spec.outer_radius)] + list(spec.holes)
    boundary_pts = []
    for (cx, cy), r in circles:
        count = max(8, int(round(2.0 * np.pi * r / h)))
        ang = 2.0 * np.pi * np.arange(count) / count
        boundary_pts.append(np.column_stack([cx + r * np.cos(ang), cy + r * np.sin(ang)]))
    boundary_pts = np.vstack(boundary_pts)

    R = spec.outer_radius
    nx = int(np.ceil(2 * R / h)) + 2
    ny = int(np.ceil(2 * R / (h * np.sqrt(3) / 2))) + 2
    xs = np.arange(-nx, nx + 1) * h
    ys = np.arange(-ny, ny + 1) * (h * np.sqrt(3) / 2)
    X, Y = np.meshgrid(xs, ys)
    X[1::2] += h / 2  # stagger alternate rows into a triangular lattice
    lattice = np.column_stack([X.ravel(), Y.ravel()])
    inside = _point_signed_distance(spec, lattice) < -0.55 * h
    pts = np.vstack([boundary_pts, lattice[inside]])

    tri = Delaunay(pts)
    centroids = pts[tri.simplices].mean(axis=1)
    keep = tri.simplices[_point_signed_distance(spec, centroids) < 0]

    used = np.unique(keep)
    remap = -np.ones(pts.shape[0], dtype=np.int64)
    remap[used] = np.arange(used.size)
    vertices = pts[used]
    cells = remap[keep]

    edges = np.sort(np.vstack([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    bedges = uniq[counts == 1]
    return SimplicialMesh(vertices, cells, bedges, intrinsic_dim=2)


def boundary_loops(mesh: SimplicialMesh) -> list[np.ndarray]:
    """Connected closed loops of a triangle mesh's boundary edges."""
    if mesh.intrinsic_dim != 2:
        raise ValueError("boundary loops are defined for triangle meshes")
    nxt = {}
    for a, b in mesh.boundary_cells:
        nxt.setdefault(int(a), []).append(int(b))
        nxt.setdefault(int(b), []).append(int(a))
    seen = set()
    loops = []
    for start in sorted(nxt):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            candidates = [v for v in nxt[cur] if v != prev]
            if not candidates:
                break
            prev, cur = cur, candidates[0]
            if cur == start:
                break
            loop.append(cur)
            seen.add(cur)
        loops.append(np.array(loop, dtype=np.int64))
    return loops


# ---------------------------------------------------------------------------
# refinement
# ---------------------------------------------------------------------------

def _circle_of_point(spec: DomainSpec, p, tol=1e-9):
    """Which analytic boundary circle (center, radius) the point lies on."""
    if spec.tag in ("unit_disk", "unit_circle_curve"):
        return (0.0, 0.0), spec.outer_radius
    if spec.tag == "two_hole_planar":
        if abs(np.linalg.norm(p) - spec.outer_radius) < tol:
            return (0.0, 0.0), spec.outer_radius
        for (cx, cy), r in spec.holes:
            if abs(np.hypot(p[0] - cx, p[1] - cy) - r) < tol:
                return (cx, cy), r
    return None


def subdivide_midpoint(mesh: SimplicialMesh, spec: DomainSpec | None = None,
                       snap: bool = True) -> SimplicialMesh:
    """Split every triangle into four using edge midpoints.

    When ``spec`` describes an analytic planar domain and ``snap`` is true,
    midpoints of boundary edges are projected back onto the boundary circle
    both endpoints lie on; otherwise refinement converges to the initial
    polygon instead of the curved domain.
    """
    if mesh.intrinsic_dim != 2:
        raise ValueError("midpoint subdivision supports triangle meshes only")
    n = mesh.n_vertices
    cells = mesh.cells
    edges = np.sort(np.vstack([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]]), axis=1)
    edges = np.unique(edges, axis=0)
    key_to_mid = {(int(a), int(b)): n + i for i, (a, b) in enumerate(edges)}
    midpoints = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])

    if snap and spec is not None and spec.tag != "file":
        for a, b in _facet_key(mesh.boundary_cells):
            circ = _circle_of_point(spec, mesh.vertices[a])
            if circ is None or _circle_of_point(spec, mesh.vertices[b]) != circ:
                continue
            (cx, cy), r = circ
            i = key_to_mid[(int(a), int(b))] - n
            v = midpoints[i] - [cx, cy]
            midpoints[i] = np.array([cx, cy]) + v * (r / np.linalg.norm(v))

    vertices = np.vstack([mesh.vertices, midpoints])
    new_cells = []
    for a, b, c in cells:
        mab = key_to_mid[(int(min(a, b)), int(max(a, b)))]
        mbc = key_to_mid[(int(min(b, c)), int(max(b, c)))]
        mca = key_to_mid[(int(min(c, a)), int(max(c, a)))]
        new_cells.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])
    new_bed = []
    for a, b in mesh.boundary_cells:
        m = key_to_mid[(int(min(a, b)), int(max(a, b)))]
        new_bed.extend([(a, m), (m, b)])
    return SimplicialMesh(vertices, np.array(new_cells, dtype=np.int64),
                          np.array(new_bed, dtype=np.int64), intrinsic_dim=2)


def mesh_to_cloud(mesh: SimplicialMesh) -> PointCloudDomain:
    """Forget the topology: vertices become points, with mesh-based weights."""
    V, A = _weights.mesh_weights(mesh)
    return PointCloudDomain(mesh.vertices, mesh.intrinsic_dim, mesh.boundary_vertices(), V, A)


def boundary_normals(spec: DomainSpec, points) -> np.ndarray:
    """Outward unit normals of the analytic domain at the given boundary points."""
    points = np.atleast_2d(points)
    normals = np.zeros_like(points)
    for i, p in enumerate(points):
        circ = _circle_of_point(spec, p, tol=1e-7)
        if circ is None:
            raise ValueError(f"point {p} is not on a boundary circle of {spec.tag}")
        (cx, cy), r = circ
        v = (p - [cx, cy]) / r
        # hole normals point into the hole, i.e. toward the hole center
        normals[i] = v if (cx, cy) == (0.0, 0.0) else -v
    return normals


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


class _LineReader:
    def __init__(self, path):
        self.path = path
        with open(path, "r") as f:
            self.raw = f.read().splitlines()
        self.pos = 0

    def next_tokens(self, expect=None):
        while self.pos < len(self.raw):
            self.pos += 1
            line = self.raw[self.pos - 1].strip()
            if line and not line.startswith("#"):
                return line.split()
        raise ParseError(self.path, self.pos + 1, f"unexpected end of file{f' while reading {expect}' if expect else ''}")

    def error(self, message):
        raise ParseError(self.path, self.pos, message)


def _parse_floats(reader, tokens, count, what):
    if len(tokens) < count:
        reader.error(f"expected {count} values for {what}, got {len(tokens)}")
    try:
        vals = [float(t) for t in tokens[:count]]
    except ValueError:
        reader.error(f"non-numeric value in {what}")
    if not all(math.isfinite(v) for v in vals):
        reader.error(f"non-finite coordinate in {what}")
    return vals


def _parse_ints(reader, tokens, count, what, upper):
    if len(tokens) < count:
        reader.error(f"expected {count} indices for {what}")
    try:
        vals = [int(t) for t in tokens[:count]]
    except ValueError:
        reader.error(f"non-integer index in {what}")
    for v in vals:
        if v < 0 or v >= upper:
            reader.error(f"index {v} out of range [0, {upper}) in {what}")
    return vals


def save_mesh(mesh: SimplicialMesh, path) -> None:
    """Write OFF (triangle meshes) or the ASCII TET format (tet meshes)."""
    with open(path, "w") as f:
        if mesh.intrinsic_dim == 2:
            f.write("OFF\n")
            f.write(f"{mesh.n_vertices} {len(mesh.cells)} 0\n")
            for v in mesh.vertices:
                coords = list(v) + [0.0] * (3 - len(v))
                f.write(" ".join(_fmt(c) for c in coords) + "\n")
            for c in mesh.cells:
                f.write("3 " + " ".join(str(i) for i in c) + "\n")
        else:
            f.write(f"TET {mesh.n_vertices} {len(mesh.cells)} {len(mesh.boundary_cells)}\n")
            for v in mesh.vertices:
                f.write(" ".join(_fmt(c) for c in v) + "\n")
            for c in mesh.cells:
                f.write(" ".join(str(i) for i in c) + "\n")
            for b in mesh.boundary_cells:
                f.write(" ".join(str(i) for i in b) + "\n")


def _boundary_edges_from_faces(cells):
    edges = np.sort(np.vstack([cells[:, [0, 1]], cells[:, [1, 2]], cells[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    return uniq[counts == 1]


def load_mesh(path) -> SimplicialMesh:
    """Read an OFF triangle mesh or an ASCII TET tetrahedral mesh.

    OFF files carry no boundary information; boundary edges are inferred as
    the edges incident to exactly one triangle.  Planar meshes saved by
    :func:`save_mesh` (all z exactly 0) load back with d = 2.
    """
    r = _LineReader(path)
    header = r.next_tokens("header")
    if header[0] == "OFF":
        counts = header[1:] if len(header) > 1 else r.next_tokens("vertex/face counts")
        if len(counts) < 2:
            r.error("OFF header needs vertex and face counts")
        try:
            nv, nf = int(counts[0]), int(counts[1])
        except ValueError:
            r.error("OFF counts must be integers")
        verts = np.array([_parse_floats(r, r.next_tokens("vertices"), 3, "vertex") for _ in range(nv)])
        faces = []
        for _ in range(nf):
            tokens = r.next_tokens("faces")
            try:
                arity = int(tokens[0])
            except ValueError:
                r.error("face line must start with its vertex count")
            if arity != 3:
                r.error(f"only triangle faces are supported, got {arity}-gon")
            faces.append(_parse_ints(r, tokens[1:], 3, "face", nv))
        cells = np.array(faces, dtype=np.int64)
        if nv and np.all(verts[:, 2] == 0.0):
            verts = verts[:, :2]
        return SimplicialMesh(verts, cells, _boundary_edges_from_faces(cells), intrinsic_dim=2)
    if header[0] == "TET":
        if len(header) < 4:
            r.error("TET header must be 'TET n_v n_c n_bf'")
        try:
            nv, nc, nb = int(header[1]), int(header[2]), int(header[3])
        except ValueError:
            r.error("TET counts must be integers")
        verts = np.array([_parse_floats(r, r.next_tokens("vertices"), 3, "vertex") for _ in range(nv)])
        cells = np.array([_parse_ints(r, r.next_tokens("cells"), 4, "cell", nv) for _ in range(nc)],
                         dtype=np.int64).reshape(nc, 4)
        bfaces = np.array([_parse_ints(r, r.next_tokens("boundary faces"), 3, "boundary face", nv)
                           for _ in range(nb)], dtype=np.int64).reshape(nb, 3)
        return SimplicialMesh(verts, cells, bfaces, intrinsic_dim=3)
    r.error(f"unrecognized mesh header {header[0]!r} (expected OFF or TET)")


def save_cloud(cloud: PointCloudDomain, path) -> None:
    """Write the PTS format: header, coordinates, boundary indices, V/A blocks."""
    with open(path, "w") as f:
        f.write(f"PTS {cloud.ambient_dim} {cloud.intrinsic_dim} {cloud.n} {cloud.m}\n")
        for p in cloud.points:
            f.write(" ".join(_fmt(c) for c in p) + "\n")
        for i in cloud.boundary_idx:
            f.write(f"{i}\n")
        if cloud.volume_weights is not None:
            f.write("V\n")
            for v in cloud.volume_weights:
                f.write(_fmt(v) + "\n")
            if cloud.m > 0 and cloud.boundary_weights is not None:
                f.write("A\n")
                for a in cloud.boundary_weights:
                    f.write(_fmt(a) + "\n")


def load_cloud(path) -> PointCloudDomain:
    r = _LineReader(path)
    header = r.next_tokens("header")
    if header[0] != "PTS" or len(header) < 5:
        r.error("expected header 'PTS d k n m'")
    try:
        d, k, n, m = (int(t) for t in header[1:5])
    except ValueError:
        r.error("PTS header counts must be integers")
    pts = np.array([_parse_floats(r, r.next_tokens("points"), d, "point") for _ in range(n)])
    pts = pts.reshape(n, d)
    bidx = [_parse_ints(r, r.next_tokens("boundary indices"), 1, "boundary index", n)[0]
            for _ in range(m)]
    V = A = None
    while r.pos < len(r.raw):
        try:
            tokens = r.next_tokens()
        except ParseError:
            break
        if tokens[0] == "V":
            V = [_parse_floats(r, r.next_tokens("V block"), 1, "volume weight")[0] for _ in range(n)]
        elif tokens[0] == "A":
            if m == 0:
                r.error("A block present but m = 0")
            A = [_parse_floats(r, r.next_tokens("A block"), 1, "boundary weight")[0] for _ in range(m)]
        else:
            r.error(f"unexpected trailing content {tokens[0]!r}")
    return PointCloudDomain(pts, k, np.array(bidx, dtype=np.int64), V, A)
