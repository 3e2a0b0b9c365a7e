"""Exception types shared across the package."""


class EnclosureKitError(Exception):
    """Base class for every error raised by enclosure_kit."""


class InvalidDirectionError(EnclosureKitError, ValueError):
    """A direction vector is not unit length within tolerance."""


class InvalidParameterError(EnclosureKitError, ValueError):
    """A scalar or structural argument violates its contract."""


class InvalidConstantsError(EnclosureKitError, ValueError):
    """Nonpositive constants passed where positive ones are required."""


class DegenerateBackgroundError(EnclosureKitError, ValueError):
    """Background constants make the reduction divisor vanish."""


class EmptySlabError(EnclosureKitError):
    """The probing slab contains no inclusion material."""


class DegenerateHullError(EnclosureKitError):
    """Half-plane intersection is empty or unbounded."""


class ResourceLimitError(EnclosureKitError):
    """Requested discretization exceeds the configured element budget."""


class MeshError(EnclosureKitError):
    """Invalid mesh: degenerate triangle, broken boundary loop, or empty."""


class SolveError(EnclosureKitError):
    """Linear solve failed or did not meet the residual contract.

    Carries the offending relative residual in ``residual`` when known.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InterfaceError(EnclosureKitError):
    """Objects from different meshes or systems were mixed."""


class ProbeResolutionError(EnclosureKitError):
    """Probe oscillation is not resolved by the mesh (tau * h_max too large).

    ``tau_max_admissible`` is the largest tau the mesh supports.
    """

    def __init__(self, message: str, tau_max_admissible: float | None = None):
        super().__init__(message)
        self.tau_max_admissible = tau_max_admissible


class EstimationError(EnclosureKitError):
    """Support-function fit could not be performed (e.g. underflowed data)."""


class ConfigError(EnclosureKitError, ValueError):
    """Scenario configuration failed to parse or validate."""
