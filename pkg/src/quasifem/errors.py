"""Exception hierarchy shared by all quasifem modules."""


class QuasiFEMError(Exception):
    """Base class for every error raised by this package."""


class InvalidMesh(QuasiFEMError):
    pass


class MeshFormatError(InvalidMesh):
    """Malformed mesh or field text; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedBC(QuasiFEMError):
    pass


class DegenerateElement(QuasiFEMError):
    pass


class RefinementOverflow(QuasiFEMError):
    pass


class CoefficientBoundsViolation(QuasiFEMError):
    pass


class LinearSolveFailure(QuasiFEMError):
    def __init__(self, message, residual, iterations):
        super().__init__(f"{message} (relative residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


class NonlinearSolveFailure(QuasiFEMError):
    """Picard iteration did not converge; the last iterate and report are attached."""

    def __init__(self, message, field=None, report=None):
        super().__init__(message)
        self.field = field
        self.report = report


class InvalidConstants(QuasiFEMError):
    pass


class MeshMismatch(QuasiFEMError):
    pass


class InapplicablePattern(QuasiFEMError):
    pass


class UnknownModel(QuasiFEMError, KeyError):
    pass


class UnknownProblem(QuasiFEMError, KeyError):
    pass


class ConfigError(QuasiFEMError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
