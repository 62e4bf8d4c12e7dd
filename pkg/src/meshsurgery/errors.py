"""Exception hierarchy shared by every module of the package."""


class MeshSurgeryError(Exception):
    """Base class for all errors raised by meshsurgery."""

    exit_code = 2


class FormatError(MeshSurgeryError):
    """A mesh, weights or pose file could not be parsed."""

    exit_code = 3

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ConsistencyError(MeshSurgeryError):
    """Data violates a structural invariant (bad index, bad delta, bad weights)."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class GeometryError(MeshSurgeryError):
    """A tool input is geometrically unusable (missed mesh, degenerate plane, ...)."""


class TearError(GeometryError):
    """Tear rejected, e.g. because it would run over an existing seam."""


class ParameterError(MeshSurgeryError):
    """A numeric parameter is outside its allowed range."""


class ScriptError(MeshSurgeryError):
    """An operation script is malformed or issues commands out of order."""

    exit_code = 1

    def __init__(self, message, ordinal=None):
        self.ordinal = ordinal
        if ordinal is not None:
            message = f"command #{ordinal}: {message}"
        super().__init__(message)
