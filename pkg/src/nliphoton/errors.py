"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A physical or job parameter is missing, malformed, or out of range."""
