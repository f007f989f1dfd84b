"""P1 finite elements for quasilinear elliptic problems with local uniqueness certificates."""
from .adaptivity import AdaptiveOptions, CertifiedSolution, Status, adaptive_certify, mark
from .certificate import (
    Certificate,
    certify,
    certify_1d,
    certify_2d,
    certify_2d_global,
    compare_fields,
    element_variation,
    verify_lemma_bounds,
)
from .errors import QuasiFEMError
from .fem import FEField, assemble, error_norms, interpolate
from .geometry import (
    build_interval_mesh,
    build_tri_mesh,
    check_regularity,
    generate_mesh,
    read_mesh,
    refine,
    triangle_quality,
    write_mesh,
)
from .models import (
    CoefficientModel,
    ProblemSpec,
    builtin_model,
    counterexample_1d,
    counterexample_2d,
    manufactured_problem,
)
from .solver import SolverOptions, multi_start, picard_solve

__version__ = "0.1.0"

__all__ = [
    "adaptive_certify",
    "AdaptiveOptions",
    "assemble",
    "build_interval_mesh",
    "build_tri_mesh",
    "builtin_model",
    "Certificate",
    "CertifiedSolution",
    "certify",
    "certify_1d",
    "certify_2d",
    "certify_2d_global",
    "check_regularity",
    "CoefficientModel",
    "compare_fields",
    "counterexample_1d",
    "counterexample_2d",
    "element_variation",
    "error_norms",
    "FEField",
    "generate_mesh",
    "interpolate",
    "manufactured_problem",
    "mark",
    "multi_start",
    "picard_solve",
    "ProblemSpec",
    "QuasiFEMError",
    "read_mesh",
    "refine",
    "SolverOptions",
    "Status",
    "triangle_quality",
    "verify_lemma_bounds",
    "write_mesh",
]
