"""Exception and warning types shared across the package.

Every error carries an ``exit_code`` so the CLI can map it without a lookup
table of its own.
"""


class GKSchurError(Exception):
    exit_code = 1


class InvalidInputError(GKSchurError, ValueError):
    exit_code = 2


class UnsupportedSizeError(InvalidInputError):
    pass


class StructureMismatchError(GKSchurError):
    exit_code = 3

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class NumericalFailureError(GKSchurError):
    exit_code = 4

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class RankDeficiencyError(NumericalFailureError):
    pass


class ChainConstructionError(NumericalFailureError):
    pass


class ExperimentFailedError(NumericalFailureError):
    pass


class IllConditionedStructureWarning(UserWarning):
    """Rank decision taken with a singular value close to the cutoff."""
