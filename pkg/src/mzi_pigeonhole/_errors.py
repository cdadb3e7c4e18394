from __future__ import annotations


class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class UnsupportedCaseError(NotImplementedError):
    """The operation is only defined for a narrower set of configurations."""


class InfeasibleDesignError(ValueError):
    """No beam parameters satisfy the physical bounds of the design solver."""


class NumericalInvariantError(ArithmeticError):
    """A computed quantity broke an invariant that holds analytically."""
