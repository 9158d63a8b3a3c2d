"""Exception types shared across stages."""


class ConfigError(ValueError):
    """Invalid or unknown configuration field; the message names the field."""
