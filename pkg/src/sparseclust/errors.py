"""Exception hierarchy shared by all modules."""


class SparseClustError(Exception):
    pass


class InputError(SparseClustError, ValueError):
    """Malformed or out-of-range input."""


class DegenerateError(SparseClustError, ValueError):
    """Zero-volume sets, isolated vertices, too few distinct points."""


class ConvergenceError(SparseClustError, RuntimeError):
    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class ChainError(SparseClustError, RuntimeError):
    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class ConfigError(SparseClustError, ValueError):
    pass


class ParseError(SparseClustError, ValueError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line
