"""Exception types shared across the package."""


class BallspaceError(ValueError):
    """Base class; every validation failure the CLI maps to exit status 2."""


class InvalidAutomorphismCenter(BallspaceError):
    pass


class DivergentGreen(BallspaceError):
    pass


class UnsupportedDimension(BallspaceError):
    pass


class InvalidBias(BallspaceError):
    pass


class EmptyBudget(BallspaceError):
    pass


class BoundarySingularity(BallspaceError):
    pass


class InvalidGapSequence(BallspaceError):
    pass


class InvalidAtomicExponent(BallspaceError):
    pass


class DSLError(BallspaceError):
    """Malformed DSL payload; ``path`` locates the offending field."""

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
