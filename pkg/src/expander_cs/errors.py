"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter is outside its admissible range."""


class DimensionError(ValueError):
    """Vector or matrix dimensions do not match."""


class DomainError(ValueError):
    """A value is outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """An operation's stated precondition does not hold for the inputs."""


class UncoverableError(ValueError):
    """A right node has no neighbors, so no cover set exists."""


class BudgetError(ValueError):
    """Exact subset enumeration would exceed the caller-supplied budget."""


class RegimeError(ValueError):
    """Inputs fall outside the parameter regime an inequality requires."""
