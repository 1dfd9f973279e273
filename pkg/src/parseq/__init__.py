"""Evaluate nonlinear recursions in parallel as iterated linear dynamical systems."""
from .fixedpoint import (
    CLIP_ELK,
    JACOBI,
    NEWTON,
    PICARD,
    QUASI_NEWTON,
    DivergenceError,
    Scheme,
    SolveReport,
    SolverConfig,
    compare_methods,
    linearize,
    residual_and_merit,
    scale_elk,
    scheme_from_name,
    solve,
    solve_batch,
)
from .jacobian import Analytic, CentralDifference, Dynamics, FunctionDynamics, HutchinsonDiagonal
from .lds import (
    AffineElement,
    StateTrajectory,
    TransitionMatrix,
    compose_affine,
    evaluate_lds_parallel,
    evaluate_lds_sequential,
)
from .pscan import ScanOperator, inclusive_scan, sequential_scan

__version__ = "0.1.0"
