"""Numerical toolkit for relative Cheeger sets, CMC graph functionals and
mixed Dirichlet/Neumann certificates on bounded domains inside half-cylinders
and planar cones."""

__version__ = "0.1.0"

from .domain import (
    Container,
    CrossSection,
    GraphFunction,
    SubgraphDomain,
    ConeDomain,
    SubsetMask,
    TriangleMesh,
    VolumeGrid,
    build_subgraph_domain,
    dilate,
    rasterize,
    triangulate,
)
from .geometry import (
    CurvatureField,
    mean_curvature,
    minkowski_check,
    orthogonality_residual,
    relative_perimeter,
    surface_area,
    volume,
)
from .cheeger import (
    CheegerResult,
    PerturbationReport,
    cheeger_bruteforce,
    cheeger_dinkelbach,
    curvature_bound_check,
    mincut_subproblem,
    non_self_cheeger_witness,
    perturbation_derivative,
    self_cheeger_test,
    touches_boundary_check,
)
from .fem import (
    EigenCertificate,
    ScalarField,
    TorsionCertificate,
    cheeger_eigen_bound,
    curvature_upper_bound_check,
    gradient_necessary_condition,
    solve_eigen,
    solve_torsion,
    torsion_certificate,
)
from .audit import AuditReport, overdetermined_audit
