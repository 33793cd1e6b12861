"""Exception types raised across the package."""


class MotionRefError(Exception):
    """Base class for all package errors."""


class InvalidBoxError(MotionRefError, ValueError):
    pass


class OutOfOrderError(MotionRefError, ValueError):
    """A frame index was not strictly greater than the last stored one."""


class UndefinedDescriptorError(MotionRefError, ValueError):
    """Not enough valid frames to evaluate a descriptor."""


class DegeneratePoolError(MotionRefError, ValueError):
    pass


class ShapeError(MotionRefError, ValueError):
    pass


class UndefinedMetricError(MotionRefError, ValueError):
    """Metric has no ground truth to normalise by."""


class ParseError(MotionRefError, ValueError):
    """Malformed input file. Message carries the path and line number."""


class ConfigError(MotionRefError, ValueError):
    pass
