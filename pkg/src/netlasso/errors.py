"""Exception types shared across the library.

The CLI maps these onto exit codes: configuration problems exit with 2,
numeric divergence with 3, and a sweep that never meets its accuracy band
with 4.
"""


class NetlassoError(Exception):
    """Base class for all library errors."""


class ConfigError(NetlassoError):
    """Invalid parameters, preconditions, or experiment configuration."""


class DataFormatError(NetlassoError):
    """Malformed input data (ragged CSV rows, non-numeric cells, ...)."""


class DisconnectedGraphError(NetlassoError):
    """Operation requires a connected graph."""


class NumericalError(NetlassoError):
    """Internal numeric failure (e.g. eigensolver non-convergence)."""


class DivergenceError(NetlassoError):
    """Iteration produced non-finite values."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class RegimeError(NetlassoError):
    """A formula was evaluated outside its region of validity."""


class BandNotMetError(NetlassoError):
    """No grid point reached the requested accuracy band."""
