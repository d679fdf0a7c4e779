"""Exception types shared across the package."""


class FepLabError(Exception):
    """Base class for errors raised by this package."""


class DomainError(FepLabError, ValueError):
    """Input outside the mathematical domain of an operation."""


class EnumerationCapError(FepLabError):
    """Exhaustive enumeration requested above the configured size cap."""


class ShapeMismatchError(FepLabError, ValueError):
    """Lattice size and particle count are mutually inconsistent."""


class MassConsistencyError(FepLabError, ValueError):
    """Profile data violate the mass identity required by the density map."""


class StabilityError(FepLabError, ValueError):
    """Requested time step violates the explicit stability bound."""

    def __init__(self, dt: float, dt_max: float):
        self.dt = dt
        self.dt_max = dt_max
        super().__init__(
            f"time step {dt:g} rejected; admissible dt <= {dt_max:g}"
        )


class SchemeFailureError(FepLabError):
    """A solver left its invariant region beyond the allowed overshoot."""
