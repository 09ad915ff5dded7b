"""Exception types shared across the package."""


class DataError(ValueError):
    """Malformed or inconsistent input data (files, event streams, bit streams)."""


class InsufficientDataError(DataError):
    """Input too short for the requested statistical procedure."""


class GuardError(RuntimeError):
    """A simulation or extraction cannot make progress (e.g. zero click probability)."""
