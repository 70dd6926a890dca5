"""Point-integral solvers for Poisson problems and Laplace spectra on point clouds."""

from .assembly import PimSystem, apply_B, apply_I, apply_Lt, assemble
from .geometry import (DomainSpec, ParseError, PointCloudDomain, SimplicialMesh,
                       default_two_hole_spec, generate_ball_mesh, generate_disk_mesh,
                       generate_two_hole_mesh, load_cloud, load_mesh, mesh_to_cloud,
                       save_cloud, save_mesh, subdivide_midpoint)
from .kernel import KernelSpec, default_t_factor, eval_R, eval_Rbar, select_bandwidth
from .reference import (RadialTruth, bessel_zero, disk_spectrum, eigenspace_angle,
                        fem_eigen, fem_solve, merge_near_degenerate, weighted_l2_error)
from .solve import (AlmState, ConvergenceError, EigenResult, SolveReport, alm_dirichlet,
                    eigen_dirichlet, eigen_neumann, neumann_residual, poisson_dirichlet,
                    poisson_neumann)
from .weights import WeightEstimateConfig, estimate_weights, mean_knn_distance, mesh_weights

__version__ = "0.1.0"

__all__ = [
    "AlmState", "ConvergenceError", "DomainSpec", "EigenResult", "KernelSpec",
    "ParseError", "PimSystem", "PointCloudDomain", "RadialTruth", "SimplicialMesh",
    "SolveReport", "WeightEstimateConfig", "alm_dirichlet", "apply_B", "apply_I",
    "apply_Lt", "assemble", "bessel_zero", "default_t_factor", "default_two_hole_spec",
    "disk_spectrum", "eigen_dirichlet", "eigen_neumann", "eigenspace_angle",
    "estimate_weights", "eval_R", "eval_Rbar", "fem_eigen", "fem_solve",
    "generate_ball_mesh", "generate_disk_mesh", "generate_two_hole_mesh", "load_cloud",
    "load_mesh", "mean_knn_distance", "merge_near_degenerate", "mesh_to_cloud",
    "mesh_weights", "neumann_residual", "poisson_dirichlet", "poisson_neumann",
    "save_cloud", "save_mesh", "select_bandwidth", "subdivide_midpoint",
    "weighted_l2_error",
]
