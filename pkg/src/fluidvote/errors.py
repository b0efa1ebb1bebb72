"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A topology spec, mechanism, or run configuration is invalid."""


class StructuralError(ValueError):
    """A delegation structure violates its invariants (bad indices, cycles)."""


class DegenerateElectionError(RuntimeError):
    """An election was requested with an empty elector set."""


class BudgetInfeasibleError(RuntimeError):
    """No sweep row fits inside the given transmission-cost budget."""


class UndefinedSimilarityError(ValueError):
    """Cosine similarity is undefined because one of the vectors has zero norm."""


class NumericalError(ArithmeticError):
    """A numeric computation produced non-finite values."""
