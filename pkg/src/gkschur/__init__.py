"""Forward stability of Schur factorizations under structured perturbations.

Jordan structure and Gohberg-Kaashoek (GK) numbers of a matrix, subspace
gaps, and two constructive matchers: one producing a nearby Schur
factorization when the Jordan structure is preserved (Lipschitz regime) and
one when only the GK numbers are (Hölder regime).
"""

from .errors import (
    ChainConstructionError,
    ExperimentFailedError,
    GKSchurError,
    IllConditionedStructureWarning,
    InvalidInputError,
    NumericalFailureError,
    RankDeficiencyError,
    StructureMismatchError,
    UnsupportedSizeError,
)
from .frobenius import (
    TriangularJordanFactorization,
    holder_match,
    invariant_factor_degrees,
    is_nonderogatory,
    triangular_jordan,
)
from .lab import (
    ExperimentReport,
    PerturbationSpec,
    fit_exponent,
    min_schur_distance_search,
    perturb_generic,
    perturb_same_gk,
    perturb_same_jordan,
    run_experiment,
)
from .matching import (
    ChainSet,
    MatchResult,
    Pairing,
    close_chain,
    deflation_step,
    jordan_chains,
    lipschitz_match,
    pair_eigenvalues,
    schur_distance,
)
from .numcore import (
    DEFAULT_TOL,
    SchurPair,
    SubspaceBasis,
    Tolerance,
    kernel_basis,
    numerical_rank,
    qr_decompose,
    schur_decompose,
    spectral_norm,
    unitary_completion,
)
from .structure import (
    GKVector,
    JordanStructure,
    dual_partition,
    gk_numbers,
    jordan_structure,
    same_gk,
    same_jordan_structure,
    truncate_structure,
)
from .subspaces import gap, hausdorff_inv_distance, kernel_semigap, projector, semigap

__version__ = "0.1.0"

__all__ = [
    "ChainConstructionError",
    "ExperimentFailedError",
    "GKSchurError",
    "IllConditionedStructureWarning",
    "InvalidInputError",
    "NumericalFailureError",
    "RankDeficiencyError",
    "StructureMismatchError",
    "UnsupportedSizeError",
    "TriangularJordanFactorization",
    "holder_match",
    "invariant_factor_degrees",
    "is_nonderogatory",
    "triangular_jordan",
    "ExperimentReport",
    "PerturbationSpec",
    "fit_exponent",
    "min_schur_distance_search",
    "perturb_generic",
    "perturb_same_gk",
    "perturb_same_jordan",
    "run_experiment",
    "ChainSet",
    "MatchResult",
    "Pairing",
    "close_chain",
    "deflation_step",
    "jordan_chains",
    "lipschitz_match",
    "pair_eigenvalues",
    "schur_distance",
    "DEFAULT_TOL",
    "SchurPair",
    "SubspaceBasis",
    "Tolerance",
    "kernel_basis",
    "numerical_rank",
    "qr_decompose",
    "schur_decompose",
    "spectral_norm",
    "unitary_completion",
    "GKVector",
    "JordanStructure",
    "dual_partition",
    "gk_numbers",
    "jordan_structure",
    "same_gk",
    "same_jordan_structure",
    "truncate_structure",
    "gap",
    "hausdorff_inv_distance",
    "kernel_semigap",
    "projector",
    "semigap",
]
