"""Exception types shared across the package."""


class FreeRiderError(Exception):
    pass


class ModelIncompleteError(FreeRiderError):
    """A reward model is missing an entry needed for evaluation."""


class InstanceTooLargeError(FreeRiderError):
    """The requested computation exceeds an enumeration or resource cap."""

    def __init__(self, message, estimated_cost=None):
        super().__init__(message)
        self.estimated_cost = estimated_cost


class ConfigError(FreeRiderError):
    """A config file could not be parsed; ``location`` names where."""

    def __init__(self, message, location=None):
        if location:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class NonConvergenceError(FreeRiderError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class DivergedTrainingError(FreeRiderError):
    pass


class UndefinedGapError(FreeRiderError):
    pass
