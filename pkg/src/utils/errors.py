from typing import Optional


class LpTailError(Exception):
    """Base class for every error this package raises on purpose"""


class InvalidParameterError(LpTailError, ValueError):
    pass


class EmbeddingError(LpTailError, RuntimeError):
    """Circulant embedding is not nonnegative-definite even at the maximal padding"""


class TruncationError(LpTailError, ValueError):
    def __init__(self, message: str, min_S: float):
        super().__init__(message)
        self.min_S = min_S


class InfeasibleTargetError(LpTailError, ValueError):
    def __init__(self, message: str, u: float, suggested_u: Optional[float]=None):
        super().__init__(message)
        self.u = u
        self.suggested_u = suggested_u


class UnresolvedConstantError(LpTailError, RuntimeError):
    def __init__(self, message: str, name: str, parameters: dict):
        super().__init__(message)
        self.name = name
        self.parameters = parameters


def error_to_dict(error: Exception) -> dict:
    result = {'error': str(error), 'type': type(error).__name__}

    for attr in ['min_S', 'u', 'suggested_u', 'name', 'parameters']:
        if hasattr(error, attr):
            result[attr] = getattr(error, attr)

    return result
