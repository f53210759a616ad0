"""Exception types shared across the package."""


class SafeRegionsError(Exception):
    """Base class for errors raised by this package."""


class InvalidArgument(SafeRegionsError, ValueError):
    """A parameter is outside its admissible range or inconsistent in shape."""


class TrainingError(SafeRegionsError, RuntimeError):
    """Training could not produce a valid model (degenerate data,
    infeasible constraints, or optimizer non-convergence)."""


class SimulationError(SafeRegionsError, RuntimeError):
    """Numerical blow-up inside a simulator, reported with the failing step."""


class UncertifiedPlanError(SafeRegionsError, RuntimeError):
    """A calibration plan does not meet its confidence target and the caller
    did not ask to proceed anyway."""
