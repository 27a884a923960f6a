"""Exception hierarchy shared by all modules."""


class IsoctlError(Exception):
    """Base class for library errors."""


class ValidationError(IsoctlError):
    """Bad input; the CLI maps these to exit code 2."""


class NumericalError(IsoctlError):
    """A monitored numerical invariant was violated; CLI exit code 3."""


# domain
class DisconnectedGraph(ValidationError):
    pass


class DirichletAtInternalVertex(ValidationError):
    pass


class DanglingIncidence(ValidationError):
    pass


class GridTooCoarse(ValidationError):
    pass


# funcspace
class GridMismatch(ValidationError):
    pass


# specfun
class ConvergenceFailure(NumericalError):
    pass


# spectral
class IncommensurateLengths(UserWarning):
    """Warning: edge lengths are not rational multiples of pi; roots stay numeric."""


class AssemblyAsymmetry(NumericalError):
    pass


# isomod
class NotReal(ValidationError):
    pass


class NotOrthogonal(ValidationError):
    pass


class NonPositiveRho(ValidationError):
    pass


class ModulusVanishes(ValidationError):
    pass


class ModulusMismatch(ValidationError):
    pass


# saturation
class TargetOutOfRange(ValidationError):
    pass


# propagator
class TruncationLoss(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass


class UnitarityDrift(NumericalError):
    pass


# synth
class NotInGeneratorSpan(ValidationError):
    pass


class InvalidCertificate(ValidationError):
    pass


class BelowThreshold(NumericalError):
    """A calibrated fidelity or error threshold was missed."""


# cli
class ParseError(ValidationError):
    pass


class UnknownDomain(ValidationError):
    pass


class UnknownGenerator(ValidationError):
    pass
