from typing import Optional


# Custom exceptions
class MobilinkError(Exception):
    """Base exception for mobilink operations"""
    pass


class SchemaError(MobilinkError, ValueError):
    """Raised when an input file or record violates its declared schema"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.message = message
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class NotFoundError(MobilinkError, KeyError):
    """Raised when a user, location or node is not present"""

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the message readable
        return str(self.args[0]) if self.args else ""


class ParameterError(MobilinkError, ValueError):
    """Raised for invalid hyperparameters or operation arguments"""
    pass


class TrainingError(MobilinkError, RuntimeError):
    """Raised when SGD produces a non-finite update"""
    pass
