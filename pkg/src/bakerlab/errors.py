"""Exception hierarchy shared by all bakerlab modules."""


class BakerLabError(Exception):
    """Base class; the CLI maps these to exit status 3."""


class ConfigError(BakerLabError):
    """Invalid experiment configuration (CLI exit status 2)."""


class UnknownMap(BakerLabError):
    pass


class InvalidParam(BakerLabError):
    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class PoleSignal(BakerLabError):
    """Raised when a point sits on (or within ``pole_eps`` of) a pole."""

    def __init__(self, distance, index=None):
        super().__init__(f"pole hit (distance {distance:.3g}, index {index})")
        self.distance = distance
        self.index = index


class OverflowSignal(BakerLabError):
    def __init__(self, index=None):
        super().__init__(f"value left the floating range at index {index}")
        self.index = index


class TruncationRangeError(BakerLabError):
    """Point too large for a truncated series to be trusted."""


class DomainViolation(BakerLabError):
    pass


class SegmentLeavesDomain(BakerLabError):
    pass


class OrbitLeftDomain(BakerLabError):
    def __init__(self, index, point=None):
        super().__init__(f"orbit left the model domain at index {index} ({point})")
        self.index = index
        self.point = point


class InteriorFixedPoint(BakerLabError):
    def __init__(self, point):
        super().__init__(f"interior fixed point at {point}")
        self.point = point


class NoConvergence(BakerLabError):
    pass


class RootSolveFailure(BakerLabError):
    def __init__(self, message, bracket=None):
        super().__init__(f"{message} (bracket {bracket})")
        self.bracket = bracket


class InsufficientData(BakerLabError):
    pass


class PreconditionViolated(BakerLabError):
    pass


class StuckWalk(BakerLabError):
    pass
