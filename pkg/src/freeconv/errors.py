"""Exception hierarchy shared by all modules."""


class FreeconvError(Exception):
    """Base class for all package errors."""


class ValidationError(FreeconvError):
    """A measure or parameter failed validation (CLI exit code 2)."""


class MassNotOne(ValidationError):
    pass


class DomainViolation(ValidationError):
    pass


class ZeroMeanOnCircle(ValidationError):
    pass


class DomainMismatch(ValidationError):
    pass


class PointOnCut(ValidationError):
    pass


class TLessThanOne(ValidationError):
    pass


class TBelowTwoWithoutCertificate(ValidationError):
    pass


class MassCondition(ValidationError):
    pass


class SolverError(FreeconvError):
    """A numerical procedure failed to certify its result (CLI exit code 3)."""


class NoConvergence(SolverError):
    pass


class PsiPoleHit(SolverError):
    pass


class ConeTooLow(SolverError):
    pass


class OutsideImage(SolverError):
    pass


class ExtrapolationUnstable(SolverError):
    pass


class NoRoot(SolverError):
    pass


class NoWitnessFound(SolverError):
    pass


class EigensolverFailure(SolverError):
    pass
