"""Linear and eigen solvers for assembled point-integral systems.

The Poisson solvers follow the discретe integral equations:

* Neumann:   L u = 2 B g + I f, with the constant nullspace of L handled by
  a volume-weighted mean-zero constraint (bordered / projected system).
* Dirichlet: K u = (2/beta) B g + I f with K = L plus (2/beta) B scattered
  into the boundary columns (a Robin penalty with small beta).
* ALM:       a multiplier iteration on the Robin problem that reaches the
  Dirichlet condition without driving beta to zero.

Eigen solvers reduce the pencils (L, I) and (K, I) densely; clouds above
``DENSE_EIGEN_LIMIT`` points are rejected rather than silently approximated.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import PimSystem

DENSE_EIGEN_LIMIT = 4000
DENSE_SOLVE_LIMIT = 3000


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveReport:
    """Solution vector plus how it was obtained."""

    u: np.ndarray
    iterations: int
    relative_residual: float
    method: str  # cg | gmres | dense_lu | sparse_lu
    mean_constraint_active: bool
    compatibility: float | None = None  # Neumann multiplier, 0 for consistent data


@dataclass(frozen=True)
class EigenResult:
    """Ascending spectrum with weighted-L2-normalized eigenvectors.

    Eigenvectors satisfy sum_i v_i^2 V_i = 1 with the sign fixed so the
    component of largest magnitude is positive.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    normalization: str = "weighted-l2"
    max_imag_part: float = 0.0


@dataclass
class AlmState:
    w: np.ndarray
    beta: float
    boundary_residual_history: list = field(default_factory=list)


def _check_system(system: PimSystem):
    if system.isolated.size:
        raise ValueError(
            f"{system.isolated.size} isolated point(s) with empty kernel support "
            f"(first: {system.isolated[0]}); increase t or the sampling density"
        )


def _rhs_neumann(system: PimSystem, f, g):
    f = np.asarray(f, dtype=float).ravel()
    if f.size != system.n:
        raise ValueError(f"f must have length n={system.n}")
    b = system.I_mat @ f
    if system.m > 0:
        g = np.zeros(system.m) if g is None else np.asarray(g, dtype=float).ravel()
        if g.size != system.m:
            raise ValueError(f"g must have length m={system.m}")
        b = b + 2.0 * (system.B @ g)
    elif g is not None and np.asarray(g).size:
        raise ValueError("nonempty g for a closed manifold (m = 0)")
    return b


def poisson_neumann(system: PimSystem, f, g=None, method: str = "auto",
                    tol: float = 1e-9) -> SolveReport:
    """Solve L u = 2 B g + I f subject to sum_i u_i V_i = 0.

    L annihilates constants, so the system is solved in the V-weighted
    least-squares sense through the bordered symmetric form
    [D_V L, V; V^T, 0] [u; mu] = [D_V b; 0]; the multiplier mu absorbs any
    data incompatibility and is reported as the compatibility diagnostic.
    """
    _check_system(system)
    b = _rhs_neumann(system, f, g)
    V = system.cloud.volume_weights
    n = system.n
    S = sp.diags(V) @ system.L
    S = ((S + S.T) * 0.5).tocsr()
    Dvb = V * b
    mu = float(Dvb.sum() / V.sum())
    rhs = Dvb - mu * V

    if method == "auto":
        method = "dense_lu" if n <= 1500 else "cg"

    if method == "dense_lu":
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = S.toarray()
        M[:n, n] = V
        M[n, :n] = V
        x = np.linalg.solve(M, np.concatenate([Dvb, [0.0]]))
        u, iterations = x[:n], 1
    elif method == "cg":
        sigma = float(S.diagonal().mean())
        vv = float(V @ V)

        def matvec(x):
            return S @ x + (sigma / vv) * (V @ x) * V

        op = spla.LinearOperator((n, n), matvec=matvec)
        dinv = 1.0 / (S.diagonal() + sigma * V**2 / vv)
        precond = spla.LinearOperator((n, n), matvec=lambda x: dinv * x)
        count = [0]

        def cb(_):
            count[0] += 1

        u, info = spla.cg(op, rhs, rtol=tol, atol=0.0, maxiter=10 * n, M=precond, callback=cb)
        iterations = count[0]
        if info != 0:
            res = np.linalg.norm(S @ u - rhs) / max(np.linalg.norm(rhs), 1e-300)
            raise ConvergenceError(
                f"conjugate gradients did not reach tol={tol} within 10n={10 * n} "
                f"iterations (relative residual {res:.3e})"
            )
    else:
        raise ValueError(f"unknown method {method!r} for the Neumann solve")

    u = u - (u @ V) / V.sum()  # exact mean-zero normalization
    rhs_norm = np.linalg.norm(rhs)
    rel = float(np.linalg.norm(S @ u - rhs) / rhs_norm) if rhs_norm > 0 else 0.0
    return SolveReport(u=u, iterations=iterations, relative_residual=rel,
                       method=method, mean_constraint_active=True, compatibility=mu)


def dirichlet_operator(system: PimSystem, beta: float) -> sp.csr_matrix:
    """K = L with (2/beta) B added into the boundary columns."""
    if system.m == 0:
        raise ValueError("Dirichlet problems require boundary samples (m > 0)")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    n, m = system.n, system.m
    scatter = sp.csr_matrix(
        (np.ones(m), (np.arange(m), system.cloud.boundary_idx)), shape=(m, n)
    )
    K = (system.L + (2.0 / beta) * (system.B @ scatter)).tocsr()
    K.sort_indices()
    return K


class _FactorizedOperator:
    """One-time factorization of K, reused across ALM iterations."""

    def __init__(self, K: sp.csr_matrix):
        self.n = K.shape[0]
        if self.n <= DENSE_SOLVE_LIMIT:
            self.method = "dense_lu"
            self._lu = sla.lu_factor(K.toarray())
        else:
            self.method = "sparse_lu"
            self._lu = spla.splu(K.tocsc())

    def solve(self, b):
        if self.method == "dense_lu":
            return sla.lu_solve(self._lu, b)
        return self._lu.solve(b)


def _solve_dirichlet_system(K, b, method, tol):
    """Solve the nonsymmetric penalized system, reporting the method used."""
    n = K.shape[0]
    if method == "auto":
        method = "dense_lu" if n <= DENSE_SOLVE_LIMIT else "gmres"

    if method == "dense_lu":
        if n > DENSE_SOLVE_LIMIT:
            raise ValueError(f"dense_lu is limited to n <= {DENSE_SOLVE_LIMIT}")
        return sla.lu_solve(sla.lu_factor(K.toarray()), b), 1, "dense_lu"
    if method == "sparse_lu":
        return spla.splu(K.tocsc()).solve(b), 1, "sparse_lu"
    if method == "gmres":
        dinv = 1.0 / K.diagonal()
        precond = spla.LinearOperator(K.shape, matvec=lambda x: dinv * x)
        count = [0]

        def cb(_):
            count[0] += 1

        u, info = spla.gmres(K, b, rtol=tol, atol=0.0, restart=50, maxiter=20,
                             M=precond, callback=cb, callback_type="pr_norm")
        if info == 0:
            return u, count[0], "gmres"
        # restarted GMRES with a Jacobi preconditioner stagnates on the
        # penalized system at scale; fall back to a direct factorization
        if n <= DENSE_SOLVE_LIMIT:
            return sla.lu_solve(sla.lu_factor(K.toarray()), b), 1, "dense_lu"
        return spla.splu(K.tocsc()).solve(b), 1, "sparse_lu"
    raise ValueError(f"unknown method {method!r} for the Dirichlet solve")


def poisson_dirichlet(system: PimSystem, f, g, beta: float = 1e-4,
                      method: str = "auto", tol: float = 1e-9) -> SolveReport:
    """Solve the penalized Dirichlet (small-beta Robin) problem K u = b.

    ``b = (2/beta) B g + I f``.  The boundary penalty makes K nonsymmetric;
    small systems are factored densely, large ones go through restarted
    GMRES with a direct sparse fallback.
    """
    _check_system(system)
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    if f.size != system.n or g.size != system.m:
        raise ValueError("f/g length mismatch with the system")
    K = dirichlet_operator(system, beta)
    b = (2.0 / beta) * (system.B @ g) + system.I_mat @ f
    u, iterations, used = _solve_dirichlet_system(K, b, method, tol)
    bnorm = np.linalg.norm(b)
    rel = float(np.linalg.norm(K @ u - b) / bnorm) if bnorm > 0 else 0.0
    if rel > max(tol, 1e-8):
        raise ConvergenceError(
            f"Dirichlet solve ({used}) left relative residual {rel:.3e} > {max(tol, 1e-8):.1e} "
            f"(beta={beta:g} may be too small for this cloud)"
        )
    return SolveReport(u=u, iterations=iterations, relative_residual=rel,
                       method=used, mean_constraint_active=False)


def alm_dirichlet(system: PimSystem, f, g, beta: float = 1.0, max_iter: int = 100,
                  tol: float = 1e-8):
    """Augmented-Lagrangian iteration for the Dirichlet problem.

    Repeats: solve K u = I f + 2 B ((1/beta) g + w), then update the
    multiplier w += (1/beta)(g - u|_S).  Stops when the A-weighted boundary
    residual ||g - u|_S|| drops below ``tol * ||g||`` (absolute when g = 0)
    or after ``max_iter`` iterations.  With w = 0 and a single iteration this
    reproduces :func:`poisson_dirichlet` at the same beta exactly.

    Returns ``(SolveReport, AlmState)`` with the full residual history.
    """
    _check_system(system)
    f = np.asarray(f, dtype=float).ravel()
    g = np.asarray(g, dtype=float).ravel()
    if f.size != system.n or g.size != system.m:
        raise ValueError("f/g length mismatch with the system")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    K = dirichlet_operator(system, beta)
    op = _FactorizedOperator(K)
    A = system.cloud.boundary_weights
    S_idx = system.cloud.boundary_idx
    b0 = system.I_mat @ f
    gnorm = float(np.sqrt(np.sum(g**2 * A)))
    threshold = tol * (gnorm if gnorm > 0 else 1.0)

    state = AlmState(w=np.zeros(system.m), beta=beta)
    u = np.zeros(system.n)
    iterations = 0
    for _ in range(max_iter):
        b = b0 + 2.0 * (system.B @ ((1.0 / beta) * g + state.w))
        u = op.solve(b)
        iterations += 1
        r = g - u[S_idx]
        res = float(np.sqrt(np.sum(r**2 * A)))
        state.boundary_residual_history.append(res)
        state.w = state.w + (1.0 / beta) * r
        if res > 10.0 * min(state.boundary_residual_history):
            raise ConvergenceError(
                f"ALM boundary residual diverged (grew 10x above its minimum) at "
                f"iteration {iterations}; beta={beta:g} is too small"
            )
        if res <= threshold:
            break
    bnorm = np.linalg.norm(b)
    rel = float(np.linalg.norm(K @ u - b) / bnorm) if bnorm > 0 else 0.0
    report = SolveReport(u=u, iterations=iterations, relative_residual=rel,
                         method=op.method, mean_constraint_active=False)
    return report, state


def _normalize_eigenvectors(vecs, V):
    out = np.array(vecs, dtype=float)
    for a in range(out.shape[1]):
        v = out[:, a]
        norm = np.sqrt(np.sum(v**2 * V))
        if norm > 0:
            v = v / norm
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        out[:, a] = v
    return out


def _mass_subspace(M: np.ndarray) -> np.ndarray:
    """Whitening basis Z of the symmetric mass matrix: Z^T M Z = identity.

    The truncated gaussian kernel leaves a noise floor of slightly negative
    eigenvalues around -1e-7 of the top; modes below 1e-6 of the top carry
    no resolvable mass and are dropped (they would sit far above any
    eigenvalue of interest).  A genuinely indefinite mass (compact kernel on
    a coarse cloud reaches -1e-2) is rejected instead.
    """
    w, Q = sla.eigh(M)
    lmax = w[-1]
    if lmax <= 0 or w[0] < -1e-4 * lmax:
        raise ValueError(
            "mass matrix D_V I is not positive definite "
            "(compact kernel on a coarse cloud?); use the gaussian kernel"
        )
    keep = w > max(1e-6, 4.0 * max(0.0, -w[0] / lmax)) * lmax
    return Q[:, keep] / np.sqrt(w[keep])


def eigen_neumann(system: PimSystem, count: int) -> EigenResult:
    """Smallest eigenpairs of L v = gamma I v (symmetric-definite reduction).

    Both sides are symmetrized by D_V, the mass side is whitened, and the
    reduced standard symmetric problem is solved densely; gamma_0 is ~0 with
    a constant eigenvector.  Requires a positive-definite mass, which the
    gaussian kernel provides.
    """
    n = system.n
    if n > DENSE_EIGEN_LIMIT:
        raise ValueError(f"dense eigensolve limited to n <= {DENSE_EIGEN_LIMIT}, got {n}")
    if not (1 <= count <= n):
        raise ValueError(f"count must be in [1, {n}]")
    V = system.cloud.volume_weights
    Dv = sp.diags(V)
    A = (Dv @ system.L).toarray()
    A = 0.5 * (A + A.T)
    M = (Dv @ system.I_mat).toarray()
    M = 0.5 * (M + M.T)
    Z = _mass_subspace(M)
    if count > Z.shape[1]:
        raise ValueError(f"count={count} exceeds the {Z.shape[1]} resolvable mass modes")
    w, y = sla.eigh(Z.T @ A @ Z, subset_by_index=[0, count - 1])
    return EigenResult(eigenvalues=w, eigenvectors=_normalize_eigenvectors(Z @ y, V))


def eigen_dirichlet(system: PimSystem, count: int, beta: float = 1e-4) -> EigenResult:
    """Smallest-real-part eigenpairs of K v = gamma I v (nonsymmetric pencil).

    Solved densely: whiten the symmetrized mass D_V I, form the reduced
    operator, nonsymmetric QR eigensolve.  Spurious imaginary parts are a
    failure mode, not noise to discard: the run aborts when max |Im gamma|
    exceeds 1e-8 of the spectral scale.
    """
    n = system.n
    if n > DENSE_EIGEN_LIMIT:
        raise ValueError(
            f"dense eigensolve limited to n <= {DENSE_EIGEN_LIMIT}, got {n}; "
            "subsample the cloud or raise the threshold"
        )
    if not (1 <= count <= n):
        raise ValueError(f"count must be in [1, {n}]")
    V = system.cloud.volume_weights
    Dv = sp.diags(V)
    K = (Dv @ dirichlet_operator(system, beta)).toarray()
    M = (Dv @ system.I_mat).toarray()
    M = 0.5 * (M + M.T)
    Z = _mass_subspace(M)
    if count > Z.shape[1]:
        raise ValueError(f"count={count} exceeds the {Z.shape[1]} resolvable mass modes")
    w, y = sla.eig(Z.T @ K @ Z)
    order = np.argsort(w.real)[:count]
    w, y = w[order], y[:, order]
    scale = max(abs(float(w.real[-1])), 1e-300)
    max_imag = float(np.abs(w.imag).max()) if count else 0.0
    if max_imag > 1e-8 * scale:
        raise ConvergenceError(
            f"Dirichlet pencil produced imaginary parts up to {max_imag:.3e} "
            f"(> 1e-8 of the spectral scale {scale:.3e})"
        )
    return EigenResult(eigenvalues=w.real.copy(),
                       eigenvectors=_normalize_eigenvectors(Z @ y.real, V),
                       max_imag_part=max_imag)


def neumann_residual(system: PimSystem, u_gt, f, g=None) -> float:
    """V-weighted L2 norm of L u_gt - 2 B g - I f (the integral-equation defect).

    For u_gt sampling a C^3 solution of the Neumann problem this decays like
    O(t^{1/4}) as the bandwidth shrinks (while the quadrature stays resolved).
    """
    u_gt = np.asarray(u_gt, dtype=float).ravel()
    res = system.L @ u_gt - _rhs_neumann(system, f, g)
    return float(np.sqrt(np.sum(res**2 * system.cloud.volume_weights)))
