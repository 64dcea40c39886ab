"""Unitary reachability and ground-state cooling bounds for system-bath states."""

__version__ = "0.1.0"

from .config import DEFAULT_TOLERANCES, Tolerances, jit_enabled
from .errors import (
    ConfigInvalid,
    DecompositionFailure,
    DimensionMismatch,
    InfeasiblePairing,
    InvalidSplit,
    NoGoCoolError,
    NotHermitian,
    NotPositiveSemidefinite,
    NotUnitary,
    NumericalFailure,
)
from .linalg import (
    BipartiteDims,
    DensityMatrix,
    HermitianOperator,
    UnitaryMatrix,
    eig_hermitian,
    evolve,
    expm_unitary,
    haar_unitary,
    is_unitary,
    partial_trace,
    tensor,
)
from .spectral import (
    RankReport,
    Spectrum,
    numerical_rank,
    product_spectrum,
    spectra_equal,
    spectrum,
)
from .feasibility import (
    FeasibilityReport,
    Obstruction,
    Pairing,
    Verdict,
    build_cooling_unitary,
    check_no_go,
    ground_population,
    max_ground_population,
    pair_eigenvalues,
)

__all__ = [
    "__version__",
    "BipartiteDims",
    "ConfigInvalid",
    "DEFAULT_TOLERANCES",
    "DecompositionFailure",
    "DensityMatrix",
    "DimensionMismatch",
    "FeasibilityReport",
    "HermitianOperator",
    "InfeasiblePairing",
    "InvalidSplit",
    "NoGoCoolError",
    "NotHermitian",
    "NotPositiveSemidefinite",
    "NotUnitary",
    "NumericalFailure",
    "Obstruction",
    "Pairing",
    "RankReport",
    "Spectrum",
    "Tolerances",
    "UnitaryMatrix",
    "Verdict",
    "build_cooling_unitary",
    "check_no_go",
    "eig_hermitian",
    "evolve",
    "expm_unitary",
    "ground_population",
    "haar_unitary",
    "is_unitary",
    "jit_enabled",
    "max_ground_population",
    "numerical_rank",
    "pair_eigenvalues",
    "partial_trace",
    "product_spectrum",
    "spectra_equal",
    "spectrum",
    "tensor",
]
