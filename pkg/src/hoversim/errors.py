"""Exception types shared across the simulator."""


class HoversimError(Exception):
    """Base class for all simulator errors."""


class BehindCamera(HoversimError):
    """A landmark has non-positive depth and cannot be projected."""


class DegenerateProjection(HoversimError):
    """Projected landmarks carry no usable pose information."""


class InsufficientHistory(HoversimError):
    """Not enough tracked frames to classify the user state."""


class NonpositiveDt(HoversimError):
    """A discrete-time step was asked to integrate over dt <= 0."""


class NoEstimate(HoversimError):
    """Follow control invoked without a usable pose estimate."""


class TimeRegression(HoversimError):
    """A timestamp moved backwards."""


class LengthMismatch(HoversimError):
    """Paired traces have different lengths."""


class AliasingRisk(HoversimError):
    """Sample rate too low for the requested spectral content."""


class BufferTooShort(HoversimError):
    """Audio buffer shorter than one analysis window."""


class NoTarget(HoversimError):
    """Noise canceller stepped before a target tone was set."""


class EmptyBuffer(HoversimError):
    """Level measurement on an empty buffer."""


class SimulationStopped(HoversimError):
    """Command submitted to a simulation that is no longer running."""


class ScenarioError(HoversimError):
    """Scenario file failed validation."""
