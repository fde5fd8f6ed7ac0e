"""Exception hierarchy shared across the package."""


class CovbalError(Exception):
    """Base class for every error raised by covbal."""


class InputError(CovbalError, ValueError):
    """Bad user input: shapes, values, or a violated precondition."""


class LengthMismatch(InputError):
    pass


class RankDeficient(InputError):
    pass


class DegenerateTreatment(InputError):
    pass


class EmptyPopulation(InputError):
    pass


class MethodMismatch(InputError):
    pass


class NegativeWeight(InputError):
    pass


class RankDeficientSubgroup(InputError):
    pass


class FittedProbabilityOutOfRange(InputError):
    pass


class DenominatorNearZero(InputError):
    pass


class DegenerateDraw(CovbalError):
    pass


class SolverError(CovbalError):
    """A propensity-score system could not be solved.

    ``moment_index`` points at the covariate column whose moment condition
    had the largest residual when the solver gave up (``None`` if unknown).
    """

    def __init__(self, message, method=None, moment_index=None, iterations=None):
        super().__init__(message)
        self.method = method
        self.moment_index = moment_index
        self.iterations = iterations


class NoConvergence(SolverError):
    pass


class Infeasible(SolverError):
    pass


class Separation(SolverError):
    pass
