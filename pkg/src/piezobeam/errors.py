"""Exception types raised across the package.

Every error is a subclass of :class:`PiezobeamError` so callers (and the CLI
exit-code mapping) can catch domain failures without swallowing bugs.
"""


class PiezobeamError(Exception):
    """Base class for all domain errors."""


# -- parameters and kernels -------------------------------------------------

class NonPositiveCoefficient(PiezobeamError):
    """A physical coefficient that must be strictly positive is not."""


class MixingOutOfRange(PiezobeamError):
    """Mixing parameter m outside [0, 1]."""


class MixingAtEndpoint(PiezobeamError):
    """Constants requested that are undefined at m = 0 or m = 1."""


class NegativeArgument(PiezobeamError):
    """Kernel evaluated at a negative age s."""


class KernelNotAdmissible(PiezobeamError):
    """Tabulated kernel violates sign or monotonicity requirements."""


class DegenerateGrid(PiezobeamError):
    """Sample grid too short or not strictly increasing."""


# -- grid and state layout --------------------------------------------------

class HistoryRequiredForPositiveM(PiezobeamError):
    """n_s = 0 requested while the mixing parameter is positive."""


class ShapeMismatch(PiezobeamError):
    """Block or vector lengths inconsistent with the grid layout."""


# -- operator, evolution ----------------------------------------------------

class SingularOperator(PiezobeamError):
    """The assembled generator is singular; signals a discretization bug."""


class SolverFailure(PiezobeamError):
    """A linear solve did not reach the required residual."""


class IncompatibleSpec(PiezobeamError):
    """Initial-condition spec invalid for the given grid."""


# -- diagnostics, spectral --------------------------------------------------

class ResolventSingular(PiezobeamError):
    """(i*lambda*I - A) could not be inverted at the requested lambda."""


class OnSpectrum(ResolventSingular):
    """Resolvent norm requested exactly on the spectrum."""


class EigensolverFailure(PiezobeamError):
    """Dense eigensolver did not converge."""


class NonPositiveEnergy(PiezobeamError):
    """Decay fit requested on energies that are not strictly positive."""


class InsufficientTail(PiezobeamError):
    """Resolvent scan covers less than one decade; no tail fit possible."""


# -- configuration / CLI ----------------------------------------------------

class ParseError(PiezobeamError):
    """Config file could not be parsed; message carries file and line."""


class ValidationError(PiezobeamError):
    """Config parsed but failed semantic validation."""
