"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """A configuration value or combination violates a stated constraint."""


class DomainError(ValueError):
    """An argument lies outside the physical domain of a model function."""


class SearchSpaceError(ValueError):
    """An exhaustive search was refused because its space exceeds the bound."""


class SimulationError(RuntimeError):
    """The event engine aborted: scheduling in the past or a handler crash."""
