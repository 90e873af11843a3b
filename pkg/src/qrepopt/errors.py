"""Exception types shared across the package."""


class QrepError(Exception):
    """Base class for all library errors."""


class DimensionError(QrepError, ValueError):
    """Shapes or vector lengths are inconsistent."""


class DomainError(QrepError, ValueError):
    """An argument lies outside the domain of the requested function."""


class SingularityError(QrepError, ArithmeticError):
    """A small Schur/divided-difference system is numerically singular.

    Usually signals loss of interiority upstream; callers shorten the step.
    """


class InteriorityError(QrepError, ArithmeticError):
    """A factorization failed because the point is effectively on the boundary."""


class DegenerateMapError(QrepError, ValueError):
    """A positive linear map is identically zero (no face to reduce to)."""


class DeclarationError(QrepError, ValueError):
    """A declared block structure does not match the actual map."""


class MemoryGuardError(QrepError, MemoryError):
    """A dense Hessian build was refused because it exceeds the memory guard."""
