import click


class GrlError(click.ClickException):
    """Base class for every error the toolkit reports to the user."""

    exit_code = 1


class ConfigError(GrlError):
    exit_code = 2


class NumericalError(GrlError):
    exit_code = 3


class EnumerationBudgetError(GrlError):
    """Exhaustive enumeration would exceed the configured budget."""


class InadmissibleTrajectoryError(GrlError):
    pass


class ShapeMismatchError(GrlError):
    pass


class StochasticDynamicsError(GrlError):
    """Operation needs a deterministic GMDP but the kernel is stochastic."""


class AnchorError(GrlError):
    """Permutation prefix does not match the anchor set."""


class DecompositionRequiredError(GrlError):
    pass


class UnsupportedRewardError(GrlError):
    pass


class NotTimeInvariantError(UnsupportedRewardError):
    pass


class UndefinedCurvatureError(GrlError):
    pass
