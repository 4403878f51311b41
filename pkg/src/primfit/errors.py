"""Exception hierarchy shared by all primfit modules.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit codes (2 parse, 3 numerical, 4 I/O) without a lookup table.
"""


class PrimfitError(Exception):
    exit_code = 3


class ParseError(PrimfitError):
    exit_code = 2


class ScriptError(ParseError):
    """Session script is malformed or references artifacts out of order."""


class IOFailure(PrimfitError):
    exit_code = 4


class MissingImage(IOFailure):
    pass


# geometry / projection
class PointAtInfinity(PrimfitError):
    pass


class DegenerateCamera(PrimfitError):
    pass


# selection
class EmptyStroke(PrimfitError):
    pass


class AllPointsAtInfinity(PrimfitError):
    pass


# quadric fitting
class SingularSystem(PrimfitError):
    pass


class DegenerateQuadric(PrimfitError):
    pass


class NotAnEllipsoid(PrimfitError):
    pass


class EmptyAfterTrim(PrimfitError):
    pass


# curve fitting
class DegeneratePoints(PrimfitError):
    pass


class SingularBasis(PrimfitError):
    pass


class CurveTooShort(PrimfitError):
    pass


# meshing
class GridTooSmall(PrimfitError):
    pass


class EmptyAfterFilter(PrimfitError):
    pass


# service
class PortInUse(PrimfitError):
    exit_code = 4


class ReplayError(PrimfitError):
    """Wraps an error raised while executing a session script action."""

    def __init__(self, action_index, action_type, cause):
        super().__init__(f"action {action_index} ({action_type}): {cause}")
        self.action_index = action_index
        self.action_type = action_type
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 3)
