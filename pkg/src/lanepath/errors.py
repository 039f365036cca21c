"""Exception types raised across the package."""


class LanePathError(Exception):
    pass


class DimensionMismatch(LanePathError, ValueError):
    pass


class MissingCentroid(LanePathError):
    """A lane-line centroid is absent in the RoI band; the offset is unavailable."""

    def __init__(self, side):
        super().__init__(f"no {side} centroid in RoI band")
        self.side = side


class EmptyBatch(LanePathError, ValueError):
    pass


class NoLaneFound(LanePathError):
    def __init__(self, side, left=None, right=None):
        super().__init__(f"no lane cluster on the {side} side")
        self.side = side
        self.left = left
        self.right = right


class PointAtInfinity(LanePathError, ValueError):
    pass


class DegenerateCamera(LanePathError, ValueError):
    pass


class DegenerateConfiguration(LanePathError, ValueError):
    pass


class InsufficientData(LanePathError, ValueError):
    pass


class IllConditioned(LanePathError, ValueError):
    pass


class DegenerateInterval(LanePathError, ValueError):
    pass


class EmptyWindow(LanePathError, ValueError):
    pass


class NoAvailableFrames(LanePathError, ValueError):
    pass


class EmptyInput(LanePathError, ValueError):
    pass


class InconsistentGraph(LanePathError, ValueError):
    pass


class IndivisibleResolution(LanePathError, ValueError):
    pass


class NotCalibrated(LanePathError, ValueError):
    pass


class NoLaneModel(LanePathError, ValueError):
    pass


class InvalidSpec(LanePathError, ValueError):
    pass


class OffLane(LanePathError):
    def __init__(self, s, d):
        super().__init__(f"vehicle left the lane at s={s:.2f} m (d={d:.3f} m)")
        self.s = s
        self.d = d


class ConfigError(LanePathError):
    pass


class ParseError(ConfigError):
    def __init__(self, where, reason):
        super().__init__(f"{where}: {reason}")
        self.where = where
        self.reason = reason


class ValidationError(ConfigError):
    def __init__(self, key, reason):
        super().__init__(f"{key}: {reason}")
        self.key = key
        self.reason = reason
