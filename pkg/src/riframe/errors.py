"""Exception hierarchy shared by every riframe module."""


class RIFrameError(Exception):
    """Base class for all library errors."""


# linalg3
class NonSymmetric(RIFrameError, ValueError):
    pass


class NonFinite(RIFrameError, ValueError):
    pass


class NotRotation(RIFrameError, ValueError):
    pass


# cloud
class TooFewPoints(RIFrameError, ValueError):
    pass


class KTooLarge(RIFrameError, ValueError):
    pass


class BadSpec(RIFrameError, ValueError):
    pass


class ParseError(RIFrameError, ValueError):
    def __init__(self, message, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset


class MagicMismatch(ParseError):
    pass


class TruncatedFile(ParseError):
    pass


# frames
class DegenerateNeighborhood(RIFrameError, ValueError):
    def __init__(self, message, indices=None):
        super().__init__(message)
        self.indices = indices


class ZeroWeightSum(RIFrameError, ValueError):
    pass


class BarycenterCoincides(DegenerateNeighborhood):
    pass


class DegenerateCloud(RIFrameError, ValueError):
    pass


# autodiff / net
class ShapeMismatch(RIFrameError, ValueError):
    pass


class NonScalarLoss(RIFrameError, ValueError):
    pass


class GraphConsumed(RIFrameError, RuntimeError):
    """Raised when backward() is called twice on the same graph."""


class OddDimension(RIFrameError, ValueError):
    pass


class CheckpointMismatch(RIFrameError, ValueError):
    pass


# harness
class ConfigError(RIFrameError, ValueError):
    pass


class VerificationFailed(RIFrameError):
    def __init__(self, failing):
        super().__init__("verification failed: " + ", ".join(failing))
        self.failing = list(failing)


class DatasetMissing(RIFrameError, FileNotFoundError):
    pass


class NonFiniteLoss(RIFrameError, FloatingPointError):
    def __init__(self, epoch, step):
        super().__init__(f"non-finite loss at epoch {epoch}, step {step}")
        self.epoch = epoch
        self.step = step
