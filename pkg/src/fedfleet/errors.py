"""Exception taxonomy. Everything raised on purpose derives from FedfleetError
so the CLI can map library failures onto its exit-code contract."""


class FedfleetError(Exception):
    pass


class ConfigError(FedfleetError):
    """Invalid configuration value or file."""


class TripLoadError(FedfleetError):
    """Trip CSV missing a role column, malformed cell, or broken invariant."""


class FeatureError(FedfleetError):
    """Negative speed or distance increment where none is physical."""


class SplitError(FedfleetError):
    """Requested split leaves some partition empty."""


class DegenerateVoltageError(FedfleetError):
    """Terminal voltage collapsed to zero or below; cell model is invalid."""


class PartitionError(FedfleetError):
    """Shared/personal split does not tile the parameter vector."""


class CorrelationError(FedfleetError):
    """Cross-correlation undefined (constant series)."""


class CheckpointError(FedfleetError):
    """Checkpoint file corrupt or from an incompatible version."""
