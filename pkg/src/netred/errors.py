"""Exception hierarchy.

Every error raised on purpose by the package derives from :class:`NetredError`.
The intermediate classes group errors by the CLI exit code they map to.
"""


class NetredError(Exception):
    """Base class for package errors."""

    exit_code = 1


# --- validation / assumption (exit code 3) --------------------------------

class ValidationError(NetredError, ValueError):
    """An input object violates one of its invariants."""

    exit_code = 3


class NotSkew(ValidationError):
    pass


class NotPSD(ValidationError):
    pass


class NotPD(ValidationError):
    pass


class NotMinimal(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class ParseError(ValidationError):
    """Malformed network file."""


class AssumptionViolation(ValidationError):
    """The interconnection is not a tree or lacks a directed rooted spanning tree."""


class EdgeNotFound(ValidationError):
    pass


class DegenerateNetwork(ValidationError):
    """Operation needs at least one edge."""


class GridMismatch(ValidationError):
    pass


class UnknownExample(NetredError):
    exit_code = 2


# --- solver infeasibility (exit code 4) -----------------------------------

class Infeasible(NetredError):
    """No certified feasible diagonal found for an LMI."""

    exit_code = 4


# --- numerical failure (exit code 5) --------------------------------------

class NumericalError(NetredError, ArithmeticError):
    exit_code = 5


class NotHurwitz(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class SingularEdgeLaplacian(NumericalError):
    pass


class SingularBlock(NumericalError):
    pass


class SingularAtFrequency(NumericalError):
    pass


class NonFinite(NumericalError):
    pass


class InheritanceViolation(NumericalError):
    """Inherited Gramians fail the reduced LMIs (indicates a bug)."""
