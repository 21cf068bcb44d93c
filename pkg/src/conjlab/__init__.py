"""Circle diffeomorphisms built by fast approximation by conjugation.

Exact Liouville rotation numbers, explicit generator families, a verified
step scheduler and diagnostics on the resulting conjugacies.
"""
from .circle import CircleMap, Rotation, conjugate, cr_norm, dist_r, eval, eval_lift, jet
from .errors import (
    ArchiveVersionMismatch, CandidateLimit, ConjlabError, DegenerateFit, InvalidManifest, InvalidParam,
    InvalidSchedule, PrecisionExhausted, ScheduleExhausted, UnknownDiagnostic, UnknownExport,
)
from .liouville import find_rational, make_liouville, verify_witness
from .values import precision

__version__ = "0.1.0"

__all__ = [
    "CircleMap", "Rotation", "conjugate", "cr_norm", "dist_r", "eval", "eval_lift", "jet",
    "ArchiveVersionMismatch", "CandidateLimit", "ConjlabError", "DegenerateFit", "InvalidManifest",
    "InvalidParam", "InvalidSchedule", "PrecisionExhausted", "ScheduleExhausted", "UnknownDiagnostic",
    "UnknownExport", "find_rational", "make_liouville", "verify_witness", "precision",
]
