"""Exception types shared by all modules.

Numerical faults (exit code 3 in the CLI) derive from :class:`NumericalFault`;
failed mathematical assertions (exit code 4) derive from :class:`AssertionFault`.
"""

import warnings


class TauberError(Exception):
    """Base class for every error raised by the package."""


class SchemaError(TauberError, ValueError):
    """Malformed rule or request document."""


class NumericalFault(TauberError):
    pass


class AssertionFault(TauberError):
    pass


class NonConvergent(NumericalFault):
    pass


class Inconclusive(NumericalFault):
    pass


class OutOfRange(NumericalFault, ValueError):
    pass


class GridTooCoarse(NumericalFault):
    pass


class DecayNotAchieved(NumericalFault):
    pass


class BranchDegenerate(NumericalFault):
    pass


class TailUnbounded(NumericalFault):
    pass


class NormDiverges(NumericalFault):
    pass


class FitUnstable(NumericalFault):
    pass


class SingularAtZero(NumericalFault):
    pass


class SignPatternViolation(AssertionFault):
    pass


class MismatchBeyondTolerance(AssertionFault):
    pass


class InequalityViolated(AssertionFault):
    pass


class SandwichViolated(AssertionFault):
    pass


class FlatObjective(RuntimeWarning):
    """The rate minimiser sits on the upper end of the lambda range."""


def warn_flat(msg):
    warnings.warn(msg, FlatObjective, stacklevel=3)
