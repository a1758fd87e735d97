"""Exception types shared across the package."""


class HiergameError(Exception):
    """Base class for all library errors."""


class UnknownManeuver(HiergameError):
    """The rule table has no maneuver entry for the requested key."""


class DegenerateLane(HiergameError):
    """Lane centerline is too short for the required travel distance."""


class Infeasible(HiergameError):
    """Endpoint is not kinematically reachable; the caller should discard it."""


class NumericalFailure(HiergameError):
    """Spline fitting or another numeric routine failed irrecoverably."""


class MismatchedHorizon(HiergameError):
    """Two trajectories do not share the same time grid."""


class EmptyActionSet(HiergameError):
    """An agent has no available action at some level of the game."""


class SolverFailure(HiergameError):
    """A level-game solver did not terminate; indicates a bug for finite games."""


class EmptyEquilibriumSet(HiergameError):
    """A quantal-error response was requested with no pure equilibria."""


class ObservedActionMissing(HiergameError):
    """An observed action is not present in the game's action set."""


class SingularDesign(HiergameError):
    """GLM design matrix is rank deficient."""


class NonPositiveEta(HiergameError):
    """Inverse-link linear predictor fell below its positivity floor."""


class InvalidSplit(HiergameError):
    """Train/test split configuration is unusable."""


class ParseError(HiergameError):
    """Scenario file could not be parsed in strict mode."""


class SchemaViolation(HiergameError):
    """A scenario record violates the documented schema."""

    def __init__(self, message, field_path=None, line_number=None):
        super().__init__(message)
        self.field_path = field_path
        self.line_number = line_number


class TemplateUnsatisfiable(HiergameError):
    """Synthetic spec produces a non-positive linear predictor on its support."""
