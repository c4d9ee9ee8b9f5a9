"""Shared exception types."""


class ConfigError(ValueError):
    """Invalid configuration: bad parameter values, step sizes, or keys."""
