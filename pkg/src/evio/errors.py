"""Exception hierarchy shared across the pipeline."""


class EvioError(Exception):
    """Base class for all pipeline errors."""


# geometry
class AngleNearPi(EvioError):
    """Rotation angle within the guard band of pi; SE(3) log is ill-conditioned."""


class BehindCamera(EvioError):
    """Point has non-positive depth along the optical axis."""


class NonPositiveDepth(EvioError):
    """Backprojection requested with depth <= 0."""


# event_stream
class ParseError(EvioError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class NonMonotonicTimestamp(EvioError):
    def __init__(self, line_no: int, message: str = "timestamp decreases"):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class InvalidWindow(EvioError):
    """Packet overlap must be smaller than the window."""


class ImuGap(EvioError):
    """IMU stream does not cover the requested packet interval."""


# motion_compensation
class DegeneratePacket(EvioError):
    """Packet with zero time extent cannot be interpolated."""


class DimensionMismatch(EvioError):
    """Operands require identical image dimensions."""


# features
class BorderKeypoint(EvioError):
    """Keypoint too close to the image border for descriptor extraction."""


# depth_prior
class EmptyRoi(EvioError):
    """No valid depth pixels inside the region of interest."""


class DegenerateScale(EvioError):
    """Scale estimation has a vanishing normal term."""


# estimator
class DegenerateBaseline(EvioError):
    """Triangulation baseline below the minimum."""


class ParallelRays(EvioError):
    """Triangulation rays are parallel within tolerance."""


class InsufficientInliers(EvioError):
    """RANSAC failed to reach the minimum inlier count."""


class SingularNormalEquations(EvioError):
    """Gauss-Newton normal equations are singular even after damping."""


class TrackingLost(EvioError):
    """Per-frame pose estimation failed; pipeline re-initializes."""


# evaluation
class NoOverlap(EvioError):
    """Trajectories share no timestamps within the association window."""


class DegenerateGeometry(EvioError):
    """Point set too degenerate (collinear) for similarity alignment."""


# cli / config
class ConfigError(EvioError):
    """Malformed configuration file or unknown key."""
