"""Exception types shared across the package."""


class FusecastError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(FusecastError):
    """Invalid configuration value or unknown configuration key."""


class ParseError(FusecastError):
    """Malformed input file; message names the offending row and column."""


class SplitError(FusecastError):
    """A chronological split would leave a partition empty."""


class StandardizeError(FusecastError):
    """Feature standardization is impossible (e.g. constant column)."""


class WindowError(FusecastError):
    """Partition too short for the requested look-back window."""


class ShapeError(FusecastError):
    """Operands with incompatible shapes; message names the op and shapes."""


class NumericError(FusecastError):
    """Non-finite value produced where a finite one is required."""


class ContractError(FusecastError):
    """An operation was called outside its contract (e.g. non-scalar loss)."""


class TrainError(FusecastError):
    """Training aborted; message names the failing epoch."""


class DegenerateVarianceError(FusecastError):
    """A statistic is undefined because the sample variance is zero."""
