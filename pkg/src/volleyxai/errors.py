"""Exception hierarchy shared by every module.

The CLI maps each family to an exit code, so the grouping below matters.
"""


class VolleyXAIError(Exception):
    """Base class for all package errors."""


# -- configuration (exit 2) ---------------------------------------------------
class ConfigError(VolleyXAIError, ValueError):
    pass


class InvalidConfig(ConfigError):
    pass


class InvalidAlpha(ConfigError):
    pass


class InvalidM(ConfigError):
    pass


class InvalidGamma(ConfigError):
    pass


# -- data (exit 3) ------------------------------------------------------------
class DataError(VolleyXAIError, ValueError):
    pass


class MalformedRow(DataError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class InvariantViolation(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class NegativeInterval(DataError):
    pass


class EmptyDataset(DataError):
    pass


class NonFiniteInput(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptyInput(DataError):
    pass


class SingleClassLabels(DataError):
    pass


# -- training (exit 4) --------------------------------------------------------
class TrainingError(VolleyXAIError, RuntimeError):
    pass


class SingleClassData(TrainingError):
    pass


class WrongModelKind(TrainingError):
    pass


class SingularCovariance(TrainingError):
    pass


# -- explanation --------------------------------------------------------------
class ExplainError(VolleyXAIError, RuntimeError):
    pass


class BudgetExceeded(ExplainError):
    pass


class EmptyBackground(ExplainError):
    pass


class DegenerateSystem(ExplainError):
    pass


# -- lookup (exit 5) ----------------------------------------------------------
class LookupFailure(VolleyXAIError, LookupError):
    pass


class UnknownMatch(LookupFailure):
    pass


class MissingModel(LookupFailure):
    pass
