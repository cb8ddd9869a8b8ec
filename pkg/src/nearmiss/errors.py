"""Exception types shared across the package."""


class NearMissError(Exception):
    """Base class for package-specific errors."""


class ConfigError(NearMissError):
    """Scenario configuration is structurally or semantically invalid."""


class UnknownNodeError(NearMissError):
    """A tree node id was requested that does not exist."""
