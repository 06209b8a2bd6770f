"""Exception types shared across the simulator; the CLI maps them to exit codes."""


class ConfigError(ValueError):
    """Invalid run configuration."""


class ConvergenceError(RuntimeError):
    """An iterative solver did not reach the requested tolerance."""


class GapClosureError(RuntimeError):
    """The ground subspace lost its isolation along a path (gap closed or steps too coarse)."""


class LeakageError(RuntimeError):
    """Too much weight left the logical subspace to interpret the result as a gate."""
