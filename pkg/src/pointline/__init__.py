"""Classification engine for calibrated multi-view point-line problems.

The package enumerates balanced point-line problems, decides minimality by
exact Jacobian rank tests over prime fields, and counts solutions of the
minimal ones by numerical monodromy.
"""

from .algebra import DEFAULT_PRIMES, matrix_rank, cayley_rotation
from .catalog import (
    CatalogEntry,
    IncidenceRelation,
    ProblemSignature,
    enumerate_balanced,
    entry_by_label,
    is_balanced,
    reference_catalog,
)
from .equations import ConstraintSystem, Encoding, encode
from .minimality import MinimalityVerdict, check_all, check_minimal, summarize
from .monodromy import (
    DegreeReport,
    StopPolicy,
    TrackerSettings,
    VerificationReport,
    compute_degree,
    track_segment,
    verify_solution_set,
)
from .scene import CameraConfig, Chart, JointImage, sample_instance

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_PRIMES",
    "matrix_rank",
    "cayley_rotation",
    "CatalogEntry",
    "IncidenceRelation",
    "ProblemSignature",
    "enumerate_balanced",
    "entry_by_label",
    "is_balanced",
    "reference_catalog",
    "ConstraintSystem",
    "Encoding",
    "encode",
    "MinimalityVerdict",
    "check_all",
    "check_minimal",
    "summarize",
    "DegreeReport",
    "StopPolicy",
    "TrackerSettings",
    "VerificationReport",
    "compute_degree",
    "track_segment",
    "verify_solution_set",
    "CameraConfig",
    "Chart",
    "JointImage",
    "sample_instance",
    "__version__",
]
