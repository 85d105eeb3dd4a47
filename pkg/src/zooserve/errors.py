"""Exception types shared across the package."""


class ZooFormatError(ValueError):
    """A zoo file failed validation; the message names the offending field."""


class EmptyEnsembleError(ValueError):
    """An operation that needs at least one selected model got an all-zero selector."""


class UndefinedMetricError(ValueError):
    """A metric is undefined for the given inputs (e.g. single-class ROC-AUC)."""


class OverloadError(RuntimeError):
    """Offered query rate exceeds measured serving capacity."""


class DivergenceError(RuntimeError):
    """Queueing bound diverges: long-run arrival rate exceeds the service rate."""


class ExplorationExhaustedError(RuntimeError):
    """The candidate space has fewer unseen selectors than requested."""


class ConfigurationError(ValueError):
    """A run configuration is inconsistent (message includes the field path)."""
