from typing import Optional


class WalkLabError(Exception):
    """Base exception for the walk laboratory."""
    pass


class InvalidCoinError(WalkLabError, ValueError):
    """A coin is not unitary or a decay value leaves [0, 1]."""
    pass


class InvalidParameterError(WalkLabError, ValueError):
    """A model parameter is outside its admissible range."""
    pass


class InvalidArgumentError(WalkLabError, ValueError):
    """An argument to an operation is malformed."""
    pass


class AlignmentError(WalkLabError, ValueError):
    """A truncation window does not cover whole sites."""
    pass


class InsufficientDataError(WalkLabError):
    """Too few materialized terms to estimate a tail quantity."""
    pass


class NotInJError(WalkLabError):
    """The relative-gap statistic of a subsequence is not finite."""
    def __init__(self, message: str, q: float):
        super().__init__(message)
        self.q = q


# Experiment config errors
class ExperimentConfigError(WalkLabError):
    """Base exception for experiment configuration errors."""
    pass


class LoadConfigError(ExperimentConfigError):
    """Errors related to loading an experiment configuration."""
    def __init__(self, message: str, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.original_exception = original_exception


class WriteConfigError(ExperimentConfigError):
    """Errors related to writing an experiment configuration."""
    def __init__(self, message: str, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.original_exception = original_exception


class SchemaError(ExperimentConfigError):
    """The configuration does not match the schema."""
    def __init__(self, message: str, key_path: str, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.key_path = key_path
        self.original_exception = original_exception


class CoinTableError(LoadConfigError):
    """A coin table CSV could not be read or is not unitary."""
    pass


class ArtifactWriteError(WalkLabError):
    """Errors while writing experiment outputs."""
    def __init__(self, message: str, original_exception: Optional[Exception] = None):
        super().__init__(message)
        self.original_exception = original_exception


class ValidationFailure(WalkLabError):
    """A named invariant check failed."""
    def __init__(self, check_name: str, seed: int, detail: str):
        super().__init__(f"{check_name} failed (seed={seed}): {detail}")
        self.check_name = check_name
        self.seed = seed
        self.detail = detail
