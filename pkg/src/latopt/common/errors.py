class LatoptError(Exception):
    """Base class of every error raised by latopt"""


class ConfigError(LatoptError):
    pass


class GeometryError(LatoptError):
    """Invalid cell spec, scaling vector or rotation"""


class EmptyShapeError(LatoptError):
    pass


class SolverError(LatoptError):
    """Linear solve failed or did not reach the residual tolerance

    Properties:
        residual (float): relative residual of the returned solution, if any
    """

    def __init__(self, message: str, residual: float = float('nan')):
        super(SolverError, self).__init__(message)
        self.residual = residual


class OptimizerError(LatoptError):
    pass


class ValidationError(LatoptError):
    pass


class FormatError(LatoptError):
    """Unreadable file, unknown kind or unsupported version"""
