"""Exception types shared across the package.

Each error that the CLI maps to an exit code carries a ``code`` attribute.
"""


class ConjlabError(Exception):
    code = 1


class NonConvergence(ConjlabError):
    pass


class IntegrationFailure(ConjlabError):
    pass


class InvalidParam(ConjlabError, ValueError):
    pass


class InvalidSchedule(ConjlabError, ValueError):
    pass


class PrecisionExhausted(ConjlabError):
    code = 10


class ScheduleExhausted(ConjlabError):
    code = 11


class CandidateLimit(ConjlabError):
    code = 12


class InvalidManifest(ConjlabError, ValueError):
    code = 2


class DegenerateFit(ConjlabError):
    pass


class UnknownDiagnostic(ConjlabError):
    code = 3


class UnknownExport(ConjlabError):
    code = 4


class ArchiveVersionMismatch(ConjlabError):
    code = 5
