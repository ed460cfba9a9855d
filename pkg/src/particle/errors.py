"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration: unknown key, bad value, or unknown tap name."""


class DataError(ValueError):
    """Dataset ingestion or manifest validation failure."""
