"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SpectralCausalError(Exception):
    exit_code = 1


class StructuralError(SpectralCausalError, ValueError):
    """Inputs with inconsistent shapes or out-of-range indices."""

    exit_code = 2


class ArgumentError(SpectralCausalError, ValueError):
    exit_code = 2


class StabilityError(SpectralCausalError, ValueError):
    """AR generator whose companion matrix is not strictly stable."""

    exit_code = 2

    def __init__(self, spectral_radius: float):
        self.spectral_radius = spectral_radius
        super().__init__(
            f"unstable AR spec: stability violated, companion spectral radius "
            f"{spectral_radius:.6g} >= 1 - 1e-6"
        )


class ConditioningError(SpectralCausalError, ArithmeticError):
    """A per-bin linear solve is too ill-conditioned to trust."""

    exit_code = 4

    def __init__(self, message: str, bins=()):
        self.bins = tuple(int(b) for b in bins)
        if self.bins:
            message = f"{message} (bins: {list(self.bins)})"
        super().__init__(message)


class InadmissibleError(SpectralCausalError):
    """A graphical identification criterion does not hold."""

    exit_code = 5

    def __init__(self, criterion: str, violations):
        self.criterion = criterion
        self.violations = tuple(violations)
        super().__init__(f"{criterion} criterion not satisfied: violated {', '.join(self.violations)}")


class CoverageError(SpectralCausalError, ValueError):
    """An adjustment stratum has too few samples."""

    exit_code = 4


class UnsupportedStructureError(SpectralCausalError, ValueError):
    exit_code = 5
