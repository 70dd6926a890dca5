"""Ground truths and independent oracles.

* :class:`RadialTruth`: the radial test solution u = cos(2 pi r) with its
  source term and boundary data on the unit disk / unit ball.
* :func:`bessel_zero` / :func:`disk_spectrum`: classical eigenvalues of the
  unit disk from Bessel-function zeros, computed from scratch (series /
  downward recurrence plus bisection), independent of any other code path.
* :func:`fem_solve` / :func:`fem_eigen`: a P1 finite-element oracle on
  triangle meshes (planar or embedded surfaces).
* error metrics: the weighted L2 error used for all reported numbers, the
  principal-angle distance between discrete eigenspaces, and the clustering
  of near-degenerate eigenvalues.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .solve import (DENSE_EIGEN_LIMIT, ConvergenceError, EigenResult,
                    _normalize_eigenvectors)
from .weights import mesh_weights

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class RadialTruth:
    """u(r) = cos(2 pi r) and its Poisson data in k dimensions.

    The source is f = -Laplacian(u) = 4 pi^2 (cos(2 pi r) + (k-1) sinc(2 r))
    (numpy sinc convention), which is smooth through r = 0 where it takes
    the value 4 pi^2 k.  On the unit boundary the normal derivative vanishes
    and u equals 1.
    """

    intrinsic_dim: int = 2

    def _radii(self, points):
        return np.linalg.norm(np.atleast_2d(points), axis=1)

    def u(self, points) -> np.ndarray:
        return np.cos(TWO_PI * self._radii(points))

    def source(self, points) -> np.ndarray:
        r = self._radii(points)
        k = self.intrinsic_dim
        return 4.0 * np.pi**2 * (np.cos(TWO_PI * r) + (k - 1) * np.sinc(2.0 * r))

    def gradient(self, points) -> np.ndarray:
        # grad u = u'(r) p / r = -4 pi^2 sinc(2r) p, smooth at the origin
        points = np.atleast_2d(points)
        r = self._radii(points)
        return -4.0 * np.pi**2 * np.sinc(2.0 * r)[:, None] * points

    def neumann_data(self, points, normals) -> np.ndarray:
        """Outward normal derivative at boundary points with given unit normals."""
        return np.einsum("ij,ij->i", self.gradient(points), np.atleast_2d(normals))

    def dirichlet_data(self, points) -> np.ndarray:
        return self.u(points)


# ---------------------------------------------------------------------------
# Bessel zeros
# ---------------------------------------------------------------------------

def _bessel_ladder(x: float, nmax: int) -> np.ndarray:
    """J_0(x) .. J_nmax(x) by normalized downward recurrence.

    Downward recurrence from well above the turning point is stable in
    float64; the ladder is normalized with J_0 + 2 sum_{k>=1} J_{2k} = 1.
    For small x the power series is used directly (no cancellation there).
    """
    if x < 1e-6:
        out = np.zeros(nmax + 1)
        for n in range(nmax + 1):
            term = (x / 2.0) ** n / np.prod(np.arange(1, n + 1), initial=1.0)
            out[n] = term * (1.0 - (x / 2.0) ** 2 / (n + 1))
        return out
    start = int(max(nmax, x)) + 42
    vals = np.zeros(start + 2)
    vals[start + 1] = 0.0
    vals[start] = 1e-30
    for k in range(start, 0, -1):
        vals[k - 1] = (2.0 * k / x) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > 1e250:
            vals *= 1e-250
    norm = vals[0] + 2.0 * vals[2::2].sum()
    return vals[: nmax + 1] / norm


def _bessel_value(x: float, n: int, kind: str) -> float:
    if kind == "J":
        return float(_bessel_ladder(x, n)[n])
    ladder = _bessel_ladder(x, n + 1)
    if n == 0:
        return float(-ladder[1])
    return float(0.5 * (ladder[n - 1] - ladder[n + 1]))


@lru_cache(maxsize=None)
def bessel_zero(n: int, m: int, kind: str = "J") -> float:
    """m-th positive zero of J_n (kind='J') or of J_n' (kind='Jprime').

    Brackets sign changes by scanning (consecutive zeros are more than 2.4
    apart for n <= 20) and refines by bisection to ~1e-12.
    """
    if kind not in ("J", "Jprime"):
        raise ValueError("kind must be 'J' or 'Jprime'")
    if not (0 <= n <= 20 and 1 <= m <= 20):
        raise ValueError("supported range is n <= 20, m <= 20")
    step = 0.25
    x = 0.05 + 1e-3 * n  # J_n and J_n' have fixed sign on (0, first zero)
    f_prev = _bessel_value(x, n, kind)
    found = 0
    limit = n + (m + 3) * np.pi + 30.0
    while x < limit:
        x_next = x + step
        f_next = _bessel_value(x_next, n, kind)
        if f_prev == 0.0:
            found += 1
            if found == m:
                return x
        elif f_prev * f_next < 0.0:
            found += 1
            if found == m:
                lo, hi, flo = x, x_next, f_prev
                for _ in range(60):
                    mid = 0.5 * (lo + hi)
                    fm = _bessel_value(mid, n, kind)
                    if flo * fm <= 0.0:
                        hi = mid
                    else:
                        lo, flo = mid, fm
                return 0.5 * (lo + hi)
        x, f_prev = x_next, f_next
    raise RuntimeError(f"failed to bracket zero {m} of {kind} with n={n}")


def disk_spectrum(problem: str, count: int) -> np.ndarray:
    """First ``count`` Laplace eigenvalues of the unit disk, ascending.

    Dirichlet eigenvalues are squared zeros of J_n (multiplicity 2 for
    n >= 1); Neumann eigenvalues are squared positive zeros of J_n' plus the
    leading 0.  Multiplicities are expanded in the returned array.
    """
    if problem not in ("neumann", "dirichlet"):
        raise ValueError("problem must be 'neumann' or 'dirichlet'")
    kind = "Jprime" if problem == "neumann" else "J"
    nmax = min(20, count + 1)
    mmax = min(20, count // 2 + 3)
    vals = [0.0] if problem == "neumann" else []
    for n in range(nmax + 1):
        if bessel_zero(n, 1, kind) ** 2 > _kth_smallest(vals, count):
            break
        for m in range(1, mmax + 1):
            lam = bessel_zero(n, m, kind) ** 2
            vals.extend([lam] if n == 0 else [lam, lam])
    vals = np.sort(np.array(vals))
    if vals.size < count:
        raise ValueError(f"count={count} exceeds the tabulated range")
    return vals[:count]


def _kth_smallest(vals, k):
    if len(vals) < k:
        return np.inf
    return np.partition(np.asarray(vals), k - 1)[k - 1]


# ---------------------------------------------------------------------------
# P1 finite elements (triangle meshes; the independent oracle)
# ---------------------------------------------------------------------------

def _triangle_geometry(mesh):
    v = mesh.vertices
    tri = mesh.cells
    e0 = v[tri[:, 2]] - v[tri[:, 1]]  # edge opposite vertex 0
    e1 = v[tri[:, 0]] - v[tri[:, 2]]
    e2 = v[tri[:, 1]] - v[tri[:, 0]]
    if v.shape[1] == 2:
        area = 0.5 * np.abs(e2[:, 0] * (-e1[:, 1]) - e2[:, 1] * (-e1[:, 0]))
    else:
        area = 0.5 * np.linalg.norm(np.cross(e2, -e1), axis=1)
    if np.any(area <= 0):
        bad = int(np.argmin(area))
        raise ValueError(f"degenerate triangle {bad} with area {area[bad]:.3e}")
    return (e0, e1, e2), area


def fem_matrices(mesh):
    """P1 stiffness and consistent mass matrices of a triangle mesh."""
    if mesh.intrinsic_dim != 2:
        raise ValueError("the FEM oracle supports triangle meshes only")
    tri = mesh.cells
    n = mesh.n_vertices
    edges, area = _triangle_geometry(mesh)
    rows, cols, kvals, mvals = [], [], [], []
    for a in range(3):
        for b in range(3):
            rows.append(tri[:, a])
            cols.append(tri[:, b])
            kvals.append(np.einsum("ij,ij->i", edges[a], edges[b]) / (4.0 * area))
            mvals.append(area / (6.0 if a == b else 12.0))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    K = sp.coo_matrix((np.concatenate(kvals), (rows, cols)), shape=(n, n)).tocsr()
    M = sp.coo_matrix((np.concatenate(mvals), (rows, cols)), shape=(n, n)).tocsr()
    return K, M


def _boundary_load(mesh, g):
    """Consistent P1 load of boundary data g (indexed like boundary_vertices)."""
    n = mesh.n_vertices
    bvert = mesh.boundary_vertices()
    gfull = np.zeros(n)
    gfull[bvert] = g
    load = np.zeros(n)
    for a, b in mesh.boundary_cells:
        ell = np.linalg.norm(mesh.vertices[a] - mesh.vertices[b])
        load[a] += ell / 6.0 * (2.0 * gfull[a] + gfull[b])
        load[b] += ell / 6.0 * (gfull[a] + 2.0 * gfull[b])
    return load


def fem_solve(mesh, problem: str, f, g=None, return_info: bool = False):
    """P1 Galerkin solution of the Poisson problem on a triangle mesh.

    ``f`` holds vertex values; ``g`` holds boundary-vertex values in sorted
    boundary-vertex order.  Neumann problems are solved with a mass-weighted
    mean-zero constraint (incompatible data lands on the constrained
    least-squares solution; the compatibility defect is in the info dict).
    Dirichlet problems eliminate the boundary rows and columns.
    """
    K, M = fem_matrices(mesh)
    n = mesh.n_vertices
    f = np.asarray(f, dtype=float).ravel()
    bvert = mesh.boundary_vertices()
    g = np.zeros(bvert.size) if g is None else np.asarray(g, dtype=float).ravel()
    if f.size != n or g.size != bvert.size:
        raise ValueError("f/g length mismatch with the mesh")
    rhs = M @ f

    if problem == "neumann":
        rhs = rhs + _boundary_load(mesh, g)
        V = np.asarray(M.sum(axis=1)).ravel()  # lumped masses
        mu = float(rhs.sum() / V.sum())
        rhs_proj = rhs - mu * V
        sigma = float(K.diagonal().mean())
        vv = float(V @ V)

        def matvec(x):
            return K @ x + (sigma / vv) * (V @ x) * V

        op = spla.LinearOperator((n, n), matvec=matvec)
        dinv = 1.0 / (K.diagonal() + sigma * V**2 / vv)
        precond = spla.LinearOperator((n, n), matvec=lambda x: dinv * x)
        u, info = spla.cg(op, rhs_proj, rtol=1e-12, atol=0.0, maxiter=20 * n, M=precond)
        if info != 0:
            raise ConvergenceError("FEM Neumann conjugate gradients did not converge")
        u = u - (u @ V) / V.sum()
        return (u, {"compatibility": mu}) if return_info else u

    if problem == "dirichlet":
        interior = np.setdiff1d(np.arange(n), bvert)
        u = np.zeros(n)
        u[bvert] = g
        Kii = K[np.ix_(interior, interior)].tocsc()
        rhs_i = rhs[interior] - K[np.ix_(interior, bvert)] @ g
        u[interior] = spla.spsolve(Kii, rhs_i)
        return (u, {}) if return_info else u

    raise ValueError("problem must be 'neumann' or 'dirichlet'")


def fem_eigen(mesh, problem: str, count: int) -> EigenResult:
    """P1 eigenpairs of the Laplacian on a triangle mesh (dense pencil)."""
    n = mesh.n_vertices
    if n > DENSE_EIGEN_LIMIT:
        raise ValueError(f"dense eigensolve limited to n <= {DENSE_EIGEN_LIMIT}, got {n}")
    K, M = fem_matrices(mesh)
    V, _ = mesh_weights(mesh)
    if problem == "neumann":
        w, vecs = sla.eigh(K.toarray(), M.toarray(), subset_by_index=[0, count - 1])
    elif problem == "dirichlet":
        bvert = mesh.boundary_vertices()
        interior = np.setdiff1d(np.arange(n), bvert)
        Kd = K.toarray()[np.ix_(interior, interior)]
        Md = M.toarray()[np.ix_(interior, interior)]
        w, vi = sla.eigh(Kd, Md, subset_by_index=[0, count - 1])
        vecs = np.zeros((n, count))
        vecs[interior] = vi
    else:
        raise ValueError("problem must be 'neumann' or 'dirichlet'")
    return EigenResult(eigenvalues=w, eigenvectors=_normalize_eigenvectors(vecs, V))


# ---------------------------------------------------------------------------
# error metrics
# ---------------------------------------------------------------------------

def weighted_l2_error(u, u_ref, V, adjust_constant: bool = False) -> float:
    """Relative error ||u - u_ref|| / ||u_ref|| in the V-weighted L2 norm.

    With ``adjust_constant`` the V-optimal constant shift is removed first,
    for solutions defined only up to a constant.
    """
    u = np.asarray(u, dtype=float).ravel()
    u_ref = np.asarray(u_ref, dtype=float).ravel()
    V = np.asarray(V, dtype=float).ravel()
    if u.size != u_ref.size or u.size != V.size:
        raise ValueError("u, u_ref and V must have equal lengths")
    ref_norm = np.sqrt(np.sum(u_ref**2 * V))
    if ref_norm == 0.0:
        raise ValueError("reference solution has zero norm")
    diff = u - u_ref
    if adjust_constant:
        diff = diff - np.sum(diff * V) / V.sum()
    return float(np.sqrt(np.sum(diff**2 * V)) / ref_norm)


def _orthonormal_basis(basis, weight):
    basis = np.atleast_2d(np.asarray(basis, dtype=float))
    if basis.ndim != 2:
        raise ValueError("basis must be a 2-D array of column vectors")
    if basis.shape[0] < basis.shape[1]:
        raise ValueError("basis cannot have more columns than rows")
    scaled = basis if weight is None else basis * np.sqrt(weight)[:, None]
    q, r = np.linalg.qr(scaled)
    diag = np.abs(np.diag(r))
    if diag.min() <= 1e-12 * max(diag.max(), 1e-300):
        raise ValueError("rank-deficient basis")
    return q


def eigenspace_angle(U_basis, V_basis, inner="euclidean") -> float:
    """Largest principal angle between the spans of two bases.

    The cosine realizes min over unit x in U of max over unit y in V of
    x . y; it is computed as the smallest singular value of the product of
    orthonormalized bases, with the sine taken from the projection residual
    so that tiny angles are resolved to machine precision.  ``inner`` is
    'euclidean' or a weight vector for the discrete L2 pairing.
    """
    weight = None if isinstance(inner, str) and inner == "euclidean" else np.asarray(inner, dtype=float)
    Qu = _orthonormal_basis(U_basis, weight)
    Qv = _orthonormal_basis(V_basis, weight)
    cross = Qu.T @ Qv
    if Qu.shape[1] > Qv.shape[1]:
        cosine = 0.0  # some direction of U has no counterpart in V
    else:
        cosine = float(np.clip(np.linalg.svd(cross, compute_uv=False).min(), 0.0, 1.0))
    resid = Qu - Qv @ (Qv.T @ Qu)
    sine = float(np.clip(np.linalg.svd(resid, compute_uv=False).max(), 0.0, 1.0))
    return float(np.arctan2(sine, cosine))


def merge_near_degenerate(eigenvalues, rel_tol: float = 0.02) -> list[list[int]]:
    """Greedy clustering of consecutive near-equal eigenvalues.

    Consecutive eigenvalues join a cluster when their gap is at most
    ``rel_tol * max(current, 1)``; returns the partition as index lists.
    """
    ev = np.asarray(eigenvalues, dtype=float).ravel()
    clusters = []
    for i in range(ev.size):
        if clusters and ev[i] - ev[clusters[-1][-1]] <= rel_tol * max(ev[clusters[-1][-1]], 1.0):
            clusters[-1].append(i)
        else:
            clusters.append([i])
    return clusters
