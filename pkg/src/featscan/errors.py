"""Exception hierarchy shared across the package.

Every error carries an ``exit_code`` so the command-line layer can map
failures onto its contract: 1 for configuration problems, 2 for data
problems, 3 for numeric problems.
"""

EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class FeatscanError(Exception):
    """Base class for all package errors."""

    exit_code = EXIT_CONFIG


# --- configuration / usage errors ---------------------------------------

class KTooLargeError(FeatscanError):
    """Requested more features than are available."""

    exit_code = EXIT_CONFIG


class UnknownFeatureError(FeatscanError):
    """A referenced feature does not exist in the dataset."""

    exit_code = EXIT_CONFIG


class InvalidSpecError(FeatscanError):
    """A synthetic-data or pipeline spec fails validation."""

    exit_code = EXIT_CONFIG


class MismatchedFeatureSetsError(FeatscanError):
    """Rankings to be merged do not cover the same features."""

    exit_code = EXIT_CONFIG


class NoFeaturesError(FeatscanError):
    """An operation was asked to run over an empty feature list."""

    exit_code = EXIT_CONFIG


# --- data errors ---------------------------------------------------------

class SchemaMismatchError(FeatscanError):
    """CSV columns or observed values do not match the declared schema."""

    exit_code = EXIT_DATA


class NonBinaryOutcomeError(FeatscanError):
    """An outcome cell is not 0 or 1."""

    exit_code = EXIT_DATA


class ParseError(FeatscanError):
    """A cell could not be parsed under its declared feature kind."""

    exit_code = EXIT_DATA


class MissingValueError(FeatscanError):
    """A missing cell was found under the Error missing-value policy."""

    exit_code = EXIT_DATA


class DegenerateColumnError(FeatscanError):
    """A column is empty where values are required."""

    exit_code = EXIT_DATA


class DegenerateOutcomeError(FeatscanError):
    """The outcome vector is constant, so no anomaly contrast exists."""

    exit_code = EXIT_DATA


class EmptySubsetError(FeatscanError):
    """A subset descriptor matches no rows."""

    exit_code = EXIT_DATA


class FullSubsetError(FeatscanError):
    """A subset descriptor excludes no rows."""

    exit_code = EXIT_DATA


class EmptyRecordsError(FeatscanError):
    """No value of a feature has any members under the conditioning."""

    exit_code = EXIT_DATA


class SingleClassOutcomeError(FeatscanError):
    """Classifier training needs both outcome classes present."""

    exit_code = EXIT_DATA


# --- numeric errors -------------------------------------------------------

class ConstantInputError(FeatscanError):
    """A statistic is undefined because an input has zero variance."""

    exit_code = EXIT_NUMERIC


class InsufficientRowsError(FeatscanError):
    """Too few rows for the requested regression."""

    exit_code = EXIT_NUMERIC


class DegenerateTableError(FeatscanError):
    """A contingency table collapsed below 2x2 after pruning."""

    exit_code = EXIT_NUMERIC


class AlphaOutOfRangeError(FeatscanError):
    """The global expectation must lie strictly between 0 and 1."""

    exit_code = EXIT_NUMERIC
