"""Smooth labeling of eigenvalues and eigenvectors of one-parameter matrix families."""
from .core_linalg import (
    SpectralDecomposition,
    eigen,
    gram_schmidt,
    hermitian_eigen,
    lu_factor,
    lu_solve,
    normal_eigen,
    operator_norm,
)
from .errors import *  # noqa: F401,F403
from .family import (
    MatrixFamily,
    SegmentSpec,
    callable_family,
    constant_family,
    glued_family,
    paper_example_family,
    polynomial_entry_family,
    schrodinger_family,
)
from .matching import check_normal_bound, matching_distance, optimal_permutation
from .polyroots import (
    PolynomialFamily,
    PowerSubstitution,
    charpoly,
    estimate_substitution_order,
    hyperbolicity_check,
    substitute_power,
    track_roots,
)
from .riesz import (
    Contour,
    compressed_matrix,
    local_frame,
    rank_constancy_scan,
    resolvent,
    riesz_projector,
)
from .tracking import (
    CrossingReport,
    CurveBundle,
    crossing_detect,
    hoelder_quotient,
    sorted_vs_smooth,
    track_eigenvalues,
    track_eigenvectors,
)

__version__ = "0.1.0"
