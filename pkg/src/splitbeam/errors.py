"""Exception types shared across the package."""


class SplitbeamError(Exception):
    """Base class for domain errors raised by this package."""


class ConfigError(SplitbeamError):
    """Invalid configuration: bad parameters, schema violations, failed pre-validation."""


class GeometryError(SplitbeamError):
    """Runtime physics guard tripped: boundary mass, cone preconditions, bad pivots."""
