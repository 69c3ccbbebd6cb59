"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    pass


class ContractViolation(ValueError):
    """An input broke a documented precondition (e.g. a non-Hermitian matrix)."""


class DegenerateGeometry(ValueError):
    """A candidate position coincides with a station location."""


class NumericalFailure(ArithmeticError):
    pass
