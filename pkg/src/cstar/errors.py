"""Exception hierarchy.

Every error raised by the toolkit derives from ``CStarError``.  The three
intermediate classes decide the CLI exit code: ``InputError`` (2),
``NumericalFailure`` (3) and ``UnsupportedClass`` (4).
"""


class CStarError(Exception):
    pass


class InputError(CStarError, ValueError):
    """Malformed or precondition-violating input."""


class NumericalFailure(CStarError, ArithmeticError):
    """A verification residual exceeded its tolerance."""


class UnsupportedClass(CStarError):
    """The instance lies outside the classes the decision procedures cover."""


# numerics
class ShapeMismatch(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class NotPSD(InputError):
    pass


# algebras
class EmptyRepresentation(InputError):
    pass


class NestMismatch(InputError):
    pass


class NotPD(InputError):
    pass


class StructureMismatch(NumericalFailure):
    pass


# cpmaps
class AlgebraMismatch(InputError):
    pass


class NotUnital(InputError):
    pass


class NotIsometry(InputError):
    pass


class NotDominated(CStarError):
    """psi is not dominated by phi.  ``result`` holds the attempted solve."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


# extremity
class BlockMismatch(InputError):
    pass


class NonMinimal(InputError):
    pass


class SingularCompression(InputError):
    pass


class AlphaOutOfRange(InputError):
    pass


class NotMultiplicityFree(InputError):
    pass


class Unsupported(UnsupportedClass):
    pass


class FactorizationFailed(CStarError):
    """No factorization inside the M-algebra was found.

    This is evidence against C*-extremity, so it is kept apart from the
    numerical failures.  ``evidence`` is a dict of residuals.
    """

    def __init__(self, message, evidence=None):
        super().__init__(message)
        self.evidence = evidence or {}


# kmapprox
class AnchorNotCertified(UnsupportedClass):
    pass


class EmptyComponentList(InputError):
    pass


class IndexOutOfRange(InputError, IndexError):
    pass


# hardy
class DegreeTooLarge(InputError):
    pass


class SymbolNotPositive(InputError):
    pass


class NotConverged(NumericalFailure):
    def __init__(self, message, drift=None):
        super().__init__(message)
        self.drift = drift
