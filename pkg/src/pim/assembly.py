"""Sparse discrete operators from a weighted point cloud and a kernel.

Three matrices discretize the integral operators:

* ``L``      (n x n): L_ij = -(1/t) R_t(p_i, p_j) V_j for i != j, with the
  diagonal set to minus the off-diagonal row sum (rows sum to zero exactly).
* ``I_mat``  (n x n): I_ij = Rbar_t(p_i, p_j) V_j, including the self term.
* ``B``      (n x m): B_ij = Rbar_t(p_i, s_j) A_j over boundary samples s_j.

Neighbor pairs are found by a fixed-radius query on a spatial index over the
kernel support ``2 sqrt(t cutoff_r)``; a brute-force O(n^2) path produces
bitwise-identical entries and serves as the assembly oracle in tests.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .geometry import PointCloudDomain
from .kernel import KernelSpec


@dataclass(frozen=True)
class PimSystem:
    """Assembled operators plus their provenance."""

    L: sp.csr_matrix
    I_mat: sp.csr_matrix
    B: sp.csr_matrix
    spec: KernelSpec
    cloud: PointCloudDomain
    support_radius: float
    isolated: np.ndarray  # points with no neighbor inside the kernel support

    @property
    def n(self) -> int:
        return self.cloud.n

    @property
    def m(self) -> int:
        return self.cloud.m


def _candidate_pairs(points, radius, method):
    n = points.shape[0]
    if method == "tree":
        tree = cKDTree(points)
        pairs = tree.query_pairs(radius * (1.0 + 1e-12), output_type="ndarray")
        if pairs.size == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
        return pairs[:, 0].astype(np.int64), pairs[:, 1].astype(np.int64)
    if method == "brute":
        ii, jj = np.triu_indices(n, k=1)
        return ii.astype(np.int64), jj.astype(np.int64)
    raise ValueError(f"unknown neighbor search method {method!r}")


def assemble(cloud: PointCloudDomain, spec: KernelSpec, neighbor_search: str = "tree") -> PimSystem:
    """Build L, I and B for the cloud under the given kernel.

    ``neighbor_search`` is 'tree' (fixed-radius query, default) or 'brute'
    (all pairs); both paths filter candidate pairs with the same squared
    distance predicate, so their output is entrywise identical.
    """
    if not cloud.has_weights:
        raise ValueError("weights required: cloud carries no V/A (estimate or load them first)")
    pts = cloud.points
    n, m = cloud.n, cloud.m
    V = cloud.volume_weights
    t = spec.t
    radius = spec.support_radius

    ii, jj = _candidate_pairs(pts, radius, neighbor_search)
    diff = pts[ii] - pts[jj]
    d2 = np.einsum("ij,ij->i", diff, diff)
    keep = d2 <= 4.0 * t * spec.cutoff_r  # canonical truncation predicate
    ii, jj, d2 = ii[keep], jj[keep], d2[keep]

    r = d2 / (4.0 * t)
    Rv = spec.window(r)
    Rbv = spec.window_tail(r)

    deg = np.bincount(ii, minlength=n) + np.bincount(jj, minlength=n)
    isolated = np.nonzero(deg == 0)[0]
    if n > 1:
        tree = cKDTree(pts)
        min_spacing = tree.query(pts, k=2)[0][:, 1].min()
        if radius < min_spacing:
            warnings.warn(
                f"kernel support under-resolved: support radius {radius:.3g} is below "
                f"the minimum point spacing {min_spacing:.3g}",
                stacklevel=2,
            )

    rows = np.concatenate([ii, jj])
    cols = np.concatenate([jj, ii])

    off = sp.coo_matrix(
        (np.concatenate([-Rv * V[jj], -Rv * V[ii]]) / t, (rows, cols)), shape=(n, n)
    ).tocsr()
    off.sort_indices()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    L = (off + sp.diags(diag)).tocsr()
    L.sort_indices()

    self_tail = float(spec.window_tail(0.0))
    I_mat = sp.coo_matrix(
        (
            np.concatenate([Rbv * V[jj], Rbv * V[ii], self_tail * V]),
            (np.concatenate([rows, np.arange(n)]), np.concatenate([cols, np.arange(n)])),
        ),
        shape=(n, n),
    ).tocsr()
    I_mat.sort_indices()

    if m > 0:
        A = cloud.boundary_weights
        pos = np.full(n, -1, dtype=np.int64)
        pos[cloud.boundary_idx] = np.arange(m)
        bj = pos[jj] >= 0
        bi = pos[ii] >= 0
        brow = np.concatenate([ii[bj], jj[bi], cloud.boundary_idx])
        bcol = np.concatenate([pos[jj[bj]], pos[ii[bi]], np.arange(m)])
        bval = np.concatenate([Rbv[bj] * A[pos[jj[bj]]], Rbv[bi] * A[pos[ii[bi]]], self_tail * A])
        B = sp.coo_matrix((bval, (brow, bcol)), shape=(n, m)).tocsr()
    else:
        B = sp.csr_matrix((n, 0))
    B.sort_indices()

    return PimSystem(L=L, I_mat=I_mat, B=B, spec=spec, cloud=cloud,
                     support_radius=radius, isolated=isolated)


def _checked_matvec(mat, u, name):
    u = np.asarray(u, dtype=float).ravel()
    if u.size != mat.shape[1]:
        raise ValueError(f"{name} expects a vector of length {mat.shape[1]}, got {u.size}")
    return mat @ u


def apply_Lt(system: PimSystem, u):
    """Quadrature of the integral Laplace operator at every point: L u."""
    return _checked_matvec(system.L, u, "apply_Lt")


def apply_I(system: PimSystem, f):
    return _checked_matvec(system.I_mat, f, "apply_I")


def apply_B(system: PimSystem, g):
    return _checked_matvec(system.B, g, "apply_B")


def dump_matrices(system: PimSystem, directory) -> None:
    """Write L, I, B in MatrixMarket coordinate format for inspection."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(directory / "L.mtx"), system.L)
    scipy.io.mmwrite(str(directory / "I.mtx"), system.I_mat)
    scipy.io.mmwrite(str(directory / "B.mtx"), system.B)
