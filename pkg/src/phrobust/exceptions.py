"""Exception hierarchy."""

import numpy as np


class PassivityError(Exception):
    """Base class for all errors raised by phrobust."""


class DimensionMismatch(PassivityError, ValueError):
    pass


class NonFiniteEntry(PassivityError, ValueError):
    pass


class ComplexModelError(PassivityError, TypeError):
    """Raised when complex coefficients are supplied; only real models are supported."""


class ModelFileError(PassivityError, ValueError):
    pass


class ResolventSingular(PassivityError, np.linalg.LinAlgError):
    pass


class NotPositiveDefinite(PassivityError, np.linalg.LinAlgError):
    pass


class InfeasibleCertificate(PassivityError, ValueError):
    pass


class InvariantViolation(PassivityError, ValueError):
    pass


class SingularDBlock(PassivityError, np.linalg.LinAlgError):
    pass


class SingularPencil(PassivityError, np.linalg.LinAlgError):
    pass


class ImaginaryAxisEigenvalues(PassivityError):
    pass


class SingularU1(PassivityError, np.linalg.LinAlgError):
    pass


class AsymmetricSolution(PassivityError):
    pass


class ResidualTooLarge(PassivityError):
    pass


class NotMinimal(PassivityError, ValueError):
    pass


class NotInterior(PassivityError, ValueError):
    pass


class NotStrictlyPassive(PassivityError, ValueError):
    pass


class NotStable(PassivityError, ValueError):
    pass


class ConvergenceFailure(PassivityError, RuntimeError):
    pass


class StallDetected(PassivityError, RuntimeError):
    pass


class ConstraintViolated(PassivityError, RuntimeError):
    pass
