"""Error taxonomy shared across the package."""


class ConfigurationError(ValueError):
    """A build/run specification is invalid (non-positive sizes, bad fields)."""


class ContractError(ValueError):
    """A caller violated an operation precondition (wrong kind, length mismatch)."""


class DomainError(ValueError):
    """A numeric argument lies outside the mathematical domain of the operation."""


class NumericalError(RuntimeError):
    """An iterative numeric procedure failed (non-convergence, overflow)."""


class ResourceError(RuntimeError):
    """A precomputation would exceed the configured memory budget."""
