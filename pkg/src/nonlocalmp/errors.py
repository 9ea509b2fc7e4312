"""Exception types shared across the package."""


class NonlocalMPError(Exception):
    """Base class for all errors raised by this package."""


class DegenerateInterval(NonlocalMPError):
    """Requested mesh interval is too short for the requested spacing."""


class TailBoundUnavailable(NonlocalMPError):
    """Kernel has no analytic tail bound, so truncated quadrature is unsafe."""


class QuadratureFailure(NonlocalMPError):
    """Kernel diagnostics could not be computed to the requested tolerance."""


class SingularExteriorBlock(NonlocalMPError):
    """Exterior-exterior block of the Neumann operator is numerically singular."""


class OutsideDomain(NonlocalMPError):
    """Point-wise operator evaluation requested outside the physical domain."""


class ZeroDirection(NonlocalMPError):
    """Ray maximizer is undefined: the direction has no energy content."""


class ZeroGradient(NonlocalMPError):
    """Descent direction requested at a point where the gradient vanishes."""


class SingularSystem(NonlocalMPError):
    """Linear solve failed even after grounding."""


class StallError(NonlocalMPError):
    """Backtracking exhausted its halving budget without an energy decrease.

    Carries the partial solve result in ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class MaxIterations(NonlocalMPError):
    """Iteration budget exhausted before the stopping criterion was met.

    Carries the partial solve result in ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(NonlocalMPError):
    """Configuration file could not be parsed or validated.

    ``line`` is the 1-based line number when known, ``key`` the offending key.
    """

    def __init__(self, message, line=None, key=None):
        super().__init__(message)
        self.line = line
        self.key = key


class ExtensionMarginWarning(UserWarning):
    """Neumann extension margin is smaller than the kernel truncation radius."""
