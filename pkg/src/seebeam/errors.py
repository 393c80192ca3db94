"""Exception types shared across the package."""


class SeebeamError(Exception):
    """Base class for all package errors."""


class InvalidConfigError(SeebeamError, ValueError):
    """A configuration value violates its documented range or coupling."""


class DomainError(SeebeamError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class DimensionError(SeebeamError, ValueError):
    """Array shapes are inconsistent with each other or with the config."""


class ContractError(SeebeamError, RuntimeError):
    """An input violates a precondition that callers are required to ensure,
    e.g. feeding a non-optimal solution into a recovery procedure."""


class InfeasibleDemandError(SeebeamError, ValueError):
    """A demand (e.g. harvested power above harvester saturation) can never
    be met regardless of the transmit strategy."""
