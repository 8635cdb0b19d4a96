"""Exception hierarchy shared by all solvers."""


class PdBundleError(Exception):
    """Base class for every error raised by this package."""


class InstanceError(PdBundleError):
    """The problem instance is malformed (non-finite oracle output, bad data)."""


class UsageError(PdBundleError, ValueError):
    """A caller passed arguments outside an operation's contract."""


class SolverToleranceError(PdBundleError):
    """An inner solver hit its iteration cap without meeting its KKT tolerance."""

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class InfeasibleDualError(PdBundleError):
    """A dual vector fell outside dom f*; always indicates a bug upstream."""


class CapabilityError(PdBundleError):
    """The requested quantity needs an oracle or property the instance lacks."""


class CertificationError(PdBundleError):
    """A runtime certificate check failed beyond its tolerance."""

    def __init__(self, message, residual=None, iteration=None):
        detail = message
        if iteration is not None:
            detail += f" at iteration {iteration}"
        if residual is not None:
            detail += f" (residual={residual:.3e})"
        super().__init__(detail)
        self.residual = residual
        self.iteration = iteration


class ConfigError(PdBundleError):
    """A run configuration or instance file could not be parsed."""
