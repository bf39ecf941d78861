"""Exception hierarchy. Every error carries the CLI exit code it maps to."""


class NLCHError(Exception):
    exit_code = 1


class ConfigParse(NLCHError):
    exit_code = 2


class ResolutionGuard(NLCHError):
    """Kernel scale below two grid cells."""

    exit_code = 3


class SupportOverflow(NLCHError):
    """Kernel support does not fit on the torus."""

    exit_code = 4


class InvalidParameter(NLCHError):
    exit_code = 5


class DtUnderflow(NLCHError):
    exit_code = 6


class NonFiniteField(NLCHError):
    exit_code = 7


class MismatchedRuns(NLCHError):
    exit_code = 8


class QuadratureFailure(NLCHError):
    exit_code = 9


class DomainError(NLCHError):
    exit_code = 10


class DegenerateInput(NLCHError):
    exit_code = 11


class InsufficientOutputs(NLCHError):
    exit_code = 12
