"""Radial kernels, their tail integrals, and bandwidth selection.

The integral operators are built from a window function ``R`` of the scaled
squared distance ``r = |x - y|^2 / (4 t)`` together with its tail integral
``Rbar(r) = int_r^inf R(s) ds``.  Two families are provided:

* ``gaussian``:      R(r) = exp(-r),       Rbar(r) = exp(-r)
* ``compact_poly``:  R(r) = (1 - r)^2 on [0, 1] (0 beyond), Rbar(r) = (1 - r)^3 / 3

Both are nonnegative, nonincreasing and satisfy d/dr Rbar = -R inside the
support.  Evaluations are truncated to exactly zero beyond
``r > cutoff_r`` so that assembled operators have reproducible sparsity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("gaussian", "compact_poly")

# default truncation of the scaled argument; gaussian tail e^-12 ~ 6.1e-6
_DEFAULT_CUTOFF = {"gaussian": 12.0, "compact_poly": 1.0}

# sqrt(t) as a multiple of the sampling scale delta, keyed by
# (problem, intrinsic_dim).  Eigenproblems use the dirichlet factor.
DEFAULT_T_FACTORS = {
    ("neumann", 2): 0.5,
    ("dirichlet", 2): 0.75,
    ("neumann", 3): 0.375,
    ("dirichlet", 3): 0.75,
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus bandwidth ``t``, normalizer and truncation policy.

    ``t`` has squared-length units; ``cutoff_r`` is in units of the scaled
    argument.  ``c_t`` multiplies every kernel value; it cancels in all
    assembled systems and defaults to 1.
    """

    t: float
    family: str = "gaussian"
    c_t: float = 1.0
    cutoff_r: float = field(default=-1.0)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not np.isfinite(self.t) or self.t <= 0.0:
            raise ValueError(f"kernel bandwidth t must be positive, got {self.t}")
        if self.c_t <= 0.0:
            raise ValueError(f"kernel normalizer c_t must be positive, got {self.c_t}")
        if self.cutoff_r == -1.0:
            object.__setattr__(self, "cutoff_r", _DEFAULT_CUTOFF[self.family])
        if self.cutoff_r <= 0.0:
            raise ValueError(f"cutoff_r must be positive, got {self.cutoff_r}")
        if self.family == "compact_poly" and self.cutoff_r > 1.0:
            raise ValueError("compact_poly vanishes beyond r=1; cutoff_r > 1 is meaningless")

    @property
    def support_radius(self) -> float:
        """Euclidean distance beyond which both kernels evaluate to zero."""
        return 2.0 * np.sqrt(self.t * self.cutoff_r)

    def window(self, r):
        """R(r) times c_t, truncated to zero for r > cutoff_r (elementwise)."""
        r = np.asarray(r, dtype=float)
        if self.family == "gaussian":
            vals = np.exp(-r)
        else:
            vals = np.where(r <= 1.0, (1.0 - r) ** 2, 0.0)
        return np.where(r > self.cutoff_r, 0.0, self.c_t * vals)

    def window_tail(self, r):
        """Rbar(r) times c_t, truncated like :meth:`window`."""
        r = np.asarray(r, dtype=float)
        if self.family == "gaussian":
            vals = np.exp(-r)
        else:
            vals = np.where(r <= 1.0, (1.0 - r) ** 3 / 3.0, 0.0)
        return np.where(r > self.cutoff_r, 0.0, self.c_t * vals)

    def with_normalizer(self, c_t: float) -> "KernelSpec":
        return KernelSpec(t=self.t, family=self.family, c_t=c_t, cutoff_r=self.cutoff_r)


def scaled_argument(spec: KernelSpec, x, y):
    """r = |x - y|^2 / (4 t) for single points or row-stacked batches."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("kernel evaluation requires finite coordinates")
    d2 = np.sum((x - y) ** 2, axis=-1)
    return d2 / (4.0 * spec.t)


def eval_R(spec: KernelSpec, x, y):
    """Scaled kernel R_t(x, y) = c_t * R(|x-y|^2 / 4t)."""
    return spec.window(scaled_argument(spec, x, y))


def eval_Rbar(spec: KernelSpec, x, y):
    """Tail kernel Rbar_t(x, y) = c_t * Rbar(|x-y|^2 / 4t)."""
    return spec.window_tail(scaled_argument(spec, x, y))


def select_bandwidth(delta: float, factor: float) -> float:
    """t = (factor * delta)^2: bandwidth from the sampling scale delta."""
    if delta <= 0.0 or factor <= 0.0:
        raise ValueError("delta and factor must be positive")
    return (factor * delta) ** 2


def default_t_factor(problem: str, intrinsic_dim: int) -> float:
    """Empirically optimal sqrt(t)/delta for the Poisson solvers.

    Eigenproblems ('eigen-neumann'/'eigen-dirichlet') use the dirichlet
    factor 0.75 in every dimension.
    """
    if problem.startswith("eigen"):
        return DEFAULT_T_FACTORS[("dirichlet", 2)]
    key = (problem, 2 if intrinsic_dim <= 2 else 3)
    try:
        return DEFAULT_T_FACTORS[key]
    except KeyError:
        raise ValueError(f"no default bandwidth factor for problem {problem!r}") from None


def conventional_normalizer(t: float, intrinsic_dim: int) -> float:
    """The diagnostic normalizer (4 pi t)^(-k/2); not used by the solvers."""
    return float((4.0 * np.pi * t) ** (-intrinsic_dim / 2.0))
