"""Exception types shared across the package."""


class LdapLabError(Exception):
    """Base class for all package errors."""


# linear algebra / subspaces
class ZeroRank(LdapLabError):
    """All columns of the input matrix are numerically zero."""


class DimensionMismatch(LdapLabError):
    """Operands live in incompatible ambient dimensions."""


class InvalidDimension(LdapLabError):
    """Requested dimensions violate 1 <= k <= d."""


# regions
class ZeroGradient(LdapLabError):
    """Gradient norm below tolerance where a direction is required."""


class BadShape(LdapLabError):
    """Network layer widths or weight shapes are inconsistent."""


# sampling / estimation
class EmptyConditional(LdapLabError):
    """No samples landed in the conditioning event after the rejection cap."""


class EmptySample(LdapLabError):
    """An empirical estimate was requested from zero samples."""


class EigenFailure(LdapLabError):
    """Eigendecomposition residual exceeded the accuracy contract."""


# bound parameter validation
class AlphaOutOfRange(LdapLabError):
    """alpha outside the admissible interval for the requested bound."""


class TOutOfRange(LdapLabError):
    """t outside (0, sqrt(k/d))."""


class AlphaTooSmall(LdapLabError):
    """alpha <= theta/beta, so the oscillation bound is vacuous."""


class EpsOutOfValidityWindow(LdapLabError):
    """eps outside [0, alpha*beta/L]."""


class EpsExceedsR(LdapLabError):
    """eps beyond the gradient-oscillation radius R."""


class POutOfRange(LdapLabError):
    """Probability argument outside (0, 1)."""


class DegenerateVolume(LdapLabError):
    """Monte-Carlo volume estimate of the body is zero."""


# cli / configs
class ConfigError(LdapLabError):
    """Configuration file failed validation; message names the field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


class UnknownBound(LdapLabError):
    """Bound name not recognized by the CLI."""


class MissingParam(LdapLabError):
    """Required CLI parameter absent."""
