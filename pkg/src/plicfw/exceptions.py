"""Exception types raised by plicfw.

Plain argument problems raise ``ValueError``; the classes here mark the
failure modes the CLI maps to distinct exit codes.
"""


class ConfigError(ValueError):
    """Malformed or inconsistent configuration / sweep spec."""


class DataError(ValueError):
    """Input data file could not be parsed."""


class CapacityError(RuntimeError):
    """Instance too large for an exhaustive routine."""


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given ledger (e.g. zero impressions)."""


class TrainingError(RuntimeError):
    """Model training diverged."""
