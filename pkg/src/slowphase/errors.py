"""Exception hierarchy.

Exit-code mapping used by the CLI:
  2  validation threshold failure
  3  numerical abort (Newton, resonance, small divisor, hyperbolicity, ...)
  4  I/O or configuration failure
"""


class SlowphaseError(Exception):
    """Base class for all package errors."""


class ConfigError(SlowphaseError):
    """Malformed configuration file, key, or value."""


class GridError(SlowphaseError):
    """Invalid spectral grid (size not a power of two, mismatched layouts)."""


class ModelError(SlowphaseError):
    """Invalid model parameters or incompatible model/state dimensions."""


class NumericalError(SlowphaseError):
    """Base class for aborts of the numerical pipeline (CLI exit code 3)."""


class IntegrationError(NumericalError):
    """ODE integration failed (step exhaustion or non-finite state).

    Carries the time of failure in ``time``.
    """

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SectionError(NumericalError):
    """Degenerate Poincare section (vector field too small at the anchor)."""


class NewtonError(NumericalError):
    """Newton iteration failed to converge."""


class HyperbolicityError(NumericalError):
    """Cycle is not hyperbolic attracting, or the trivial multiplier is off."""


class DefectiveSpectrumError(NumericalError):
    """Monodromy eigenvector basis is numerically defective."""


class ResonanceError(NumericalError):
    """Flagged resonance among the Floquet exponents."""


class SmallDivisorError(NumericalError):
    """A Fourier-space divisor fell below tolerance.

    ``context`` is a ``(k, component, order)`` triple when available.
    """

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class SolvabilityError(NumericalError):
    """Solvability condition of a free-mode solve violated."""


class FrameError(NumericalError):
    """Frame construction failed (singular frame or non-convergent polish)."""


class ValidationFailure(SlowphaseError):
    """A configured validation threshold was not met (CLI exit code 2)."""
