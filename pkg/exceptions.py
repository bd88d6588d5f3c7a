"""
Error types shared across the query evolution engine
"""
from typing import List, Optional


class GafError(Exception):
    """Base class for every error raised by the engine"""


class ConfigError(GafError, ValueError):
    """Configuration file or parameter values are invalid"""

    def __init__(self, errors: List[str], path: Optional[str] = None):
        self.errors = list(errors)
        self.path = path
        prefix = f"{path}: " if path else ""
        super().__init__(prefix + "; ".join(self.errors))


class LexiconError(GafError, ValueError):
    """Dictionary file is missing, malformed, or violates lexicon invariants"""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        self.path = path
        self.line = line
        location = ""
        if path:
            location = f"{path}:{line}: " if line else f"{path}: "
        super().__init__(location + message)


class EngineError(GafError):
    """Search engine failure"""

    retryable = False


class EngineTransportError(EngineError):
    """Engine could not be reached; the query may be retried"""

    retryable = True

    def __init__(self, query_text: str, reason: str):
        self.query_text = query_text
        self.reason = reason
        super().__init__(f"Engine transport failure for query '{query_text}': {reason}")


class EngineResponseError(EngineError):
    """Engine answered with something that is not a valid result list"""

    def __init__(self, message: str, query_text: Optional[str] = None):
        self.query_text = query_text
        super().__init__(message)


class StateError(GafError, ValueError):
    """State document cannot be read or does not describe a valid run"""

    def __init__(self, message: str, path: Optional[str] = None, where: Optional[str] = None):
        self.path = path
        self.where = where
        parts = [p for p in (path, where) if p]
        super().__init__(f"{' @ '.join(parts)}: {message}" if parts else message)
