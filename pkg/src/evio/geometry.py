"""SE(3) rigid-body math and the pinhole camera model.

Rotations are unit quaternions (w, x, y, z) canonicalized to w >= 0.
Poses map camera-frame points to the world frame.  Interpolation follows
the left geodesic exp(alpha * log(T1 * T0^-1)) * T0, which is exact at
both endpoints.  The camera model is pinhole with radial-tangential
distortion (k1, k2, p1, p2, k3); undistortion inverts the polynomial by
fixed-point iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AngleNearPi, BehindCamera, NonPositiveDepth

SMALL_ANGLE = 1e-8        # Taylor branch for exp/log sinc terms [rad]
NEAR_PI_GUARD = 1e-6      # log() refuses angles within this of pi [rad]

_UNDISTORT_ITERS = 20
_UNDISTORT_TOL = 1e-10


# ---------------------------------------------------------------------------
# quaternion kernels (vectorized, scalar-first convention w, x, y, z)
# ---------------------------------------------------------------------------

def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Unit-normalize and canonicalize to w >= 0.  Works on (..., 4)."""
    q = np.asarray(q, dtype=np.float64)
    n = np.linalg.norm(q, axis=-1, keepdims=True)
    q = q / n
    flip = q[..., :1] < 0.0
    return np.where(flip, -q, q)


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a * b on (..., 4) arrays (broadcasting)."""
    aw, ax, ay, az = (a[..., i] for i in range(4))
    bw, bx, by, bz = (b[..., i] for i in range(4))
    return np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vectors v (..., 3) by quaternions q (..., 4), broadcasting."""
    qv = q[..., 1:]
    w = q[..., :1]
    t = 2.0 * np.cross(qv, v)
    return v + w * t + np.cross(qv, t)


def quat_from_rotvec(phi: np.ndarray) -> np.ndarray:
    """exp map so(3) -> quaternion for (..., 3) rotation vectors."""
    phi = np.asarray(phi, dtype=np.float64)
    theta = np.linalg.norm(phi, axis=-1, keepdims=True)
    half = 0.5 * theta
    # sin(theta/2)/theta with a second-order Taylor branch near zero
    small = theta < SMALL_ANGLE
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(small, 0.5 - theta * theta / 48.0, np.sin(half) / np.where(theta == 0.0, 1.0, theta))
    w = np.cos(half)
    return np.concatenate([w, factor * phi], axis=-1)


def rotvec_from_quat(q: np.ndarray) -> np.ndarray:
    """log map quaternion -> so(3) for (..., 4); raises near angle pi."""
    q = np.asarray(q, dtype=np.float64)
    w = np.abs(q[..., 0])
    sign = np.where(q[..., 0] < 0.0, -1.0, 1.0)
    v = q[..., 1:] * sign[..., None]
    s = np.linalg.norm(v, axis=-1)
    theta = 2.0 * np.arctan2(s, w)
    if np.any(theta > math.pi - NEAR_PI_GUARD):
        raise AngleNearPi(f"rotation angle {np.max(theta):.9f} within guard of pi")
    small = s < 0.5 * SMALL_ANGLE
    wsafe = np.where(w == 0.0, 1.0, w)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(
            small,
            (2.0 / wsafe) * (1.0 - s * s / (3.0 * wsafe * wsafe)),
            theta / np.where(s == 0.0, 1.0, s),
        )
    return factor[..., None] * v


def _skew(v: np.ndarray) -> np.ndarray:
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------

def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Rotation:
    """Unit quaternion rotation, canonical w >= 0."""

    q: np.ndarray  # (4,) w, x, y, z

    @staticmethod
    def identity() -> "Rotation":
        return Rotation(_frozen(np.array([1.0, 0.0, 0.0, 0.0])))

    @staticmethod
    def from_quat(q) -> "Rotation":
        return Rotation(_frozen(quat_normalize(np.asarray(q, dtype=np.float64))))

    @staticmethod
    def from_rotvec(phi) -> "Rotation":
        return Rotation(_frozen(quat_normalize(quat_from_rotvec(np.asarray(phi, dtype=np.float64)))))

    @staticmethod
    def from_axis_angle(axis, angle: float) -> "Rotation":
        axis = np.asarray(axis, dtype=np.float64)
        axis = axis / np.linalg.norm(axis)
        return Rotation.from_rotvec(axis * angle)

    @staticmethod
    def from_matrix(m) -> "Rotation":
        m = np.asarray(m, dtype=np.float64)
        t = np.trace(m)
        if t > 0.0:
            r = math.sqrt(1.0 + t)
            w = 0.5 * r
            s = 0.5 / r
            q = np.array([w, (m[2, 1] - m[1, 2]) * s, (m[0, 2] - m[2, 0]) * s, (m[1, 0] - m[0, 1]) * s])
        else:
            i = int(np.argmax(np.diag(m)))
            j, k = (i + 1) % 3, (i + 2) % 3
            r = math.sqrt(1.0 + m[i, i] - m[j, j] - m[k, k])
            s = 0.5 / r
            q = np.empty(4)
            q[0] = (m[k, j] - m[j, k]) * s
            q[1 + i] = 0.5 * r
            q[1 + j] = (m[j, i] + m[i, j]) * s
            q[1 + k] = (m[k, i] + m[i, k]) * s
        return Rotation.from_quat(q)

    def as_matrix(self) -> np.ndarray:
        w, x, y, z = self.q
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def compose(self, other: "Rotation") -> "Rotation":
        return Rotation(_frozen(quat_normalize(quat_mul(self.q, other.q))))

    def __matmul__(self, other: "Rotation") -> "Rotation":
        return self.compose(other)

    def inverse(self) -> "Rotation":
        w, x, y, z = self.q
        return Rotation(_frozen(np.array([w, -x, -y, -z])))

    def apply(self, v) -> np.ndarray:
        return quat_rotate(self.q, np.asarray(v, dtype=np.float64))

    def rotvec(self) -> np.ndarray:
        return rotvec_from_quat(self.q)

    def angle(self) -> float:
        s = float(np.linalg.norm(self.q[1:]))
        return 2.0 * math.atan2(s, abs(float(self.q[0])))


@dataclass(frozen=True)
class Pose:
    """Rigid transform on SE(3): x_world = R x_cam + t."""

    rotation: Rotation = field(default_factory=Rotation.identity)
    translation: np.ndarray = field(default_factory=lambda: _frozen(np.zeros(3)))

    def __post_init__(self):
        object.__setattr__(self, "translation", _frozen(np.asarray(self.translation, dtype=np.float64)))

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_rt(rotation: Rotation, translation) -> "Pose":
        return Pose(rotation, np.asarray(translation, dtype=np.float64))

    def compose(self, other: "Pose") -> "Pose":
        r = self.rotation @ other.rotation
        t = self.rotation.apply(other.translation) + self.translation
        return Pose(r, t)

    def __matmul__(self, other: "Pose") -> "Pose":
        return self.compose(other)

    def inverse(self) -> "Pose":
        rinv = self.rotation.inverse()
        return Pose(rinv, -rinv.apply(self.translation))

    def apply(self, p) -> np.ndarray:
        return self.rotation.apply(p) + self.translation

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rotation.as_matrix()
        m[:3, 3] = self.translation
        return m


@dataclass(frozen=True)
class Twist:
    """se(3) tangent vector: rho translational [m], phi rotational [rad]."""

    rho: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", _frozen(np.asarray(self.rho, dtype=np.float64)))
        object.__setattr__(self, "phi", _frozen(np.asarray(self.phi, dtype=np.float64)))

    @staticmethod
    def zero() -> "Twist":
        return Twist(np.zeros(3), np.zeros(3))

    @staticmethod
    def from_vector(xi) -> "Twist":
        xi = np.asarray(xi, dtype=np.float64)
        return Twist(xi[:3], xi[3:])

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.rho, self.phi])

    def scaled(self, a: float) -> "Twist":
        return Twist(self.rho * a, self.phi * a)


# ---------------------------------------------------------------------------
# exp / log / interpolation
# ---------------------------------------------------------------------------

def _so3_left_jacobian(phi: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(phi))
    k = _skew(phi)
    if theta < SMALL_ANGLE:
        a = 0.5 - theta * theta / 24.0
        b = 1.0 / 6.0 - theta * theta / 120.0
    else:
        a = (1.0 - math.cos(theta)) / (theta * theta)
        b = (theta - math.sin(theta)) / (theta * theta * theta)
    return np.eye(3) + a * k + b * (k @ k)


def _so3_left_jacobian_inv(phi: np.ndarray) -> np.ndarray:
    theta = float(np.linalg.norm(phi))
    k = _skew(phi)
    if theta < SMALL_ANGLE:
        c = 1.0 / 12.0 + theta * theta / 720.0
    else:
        c = 1.0 / (theta * theta) - (1.0 + math.cos(theta)) / (2.0 * theta * math.sin(theta))
    return np.eye(3) - 0.5 * k + c * (k @ k)


def se3_exp(xi: Twist) -> Pose:
    """Closed-form exponential map se(3) -> SE(3)."""
    rot = Rotation.from_rotvec(xi.phi)
    t = _so3_left_jacobian(xi.phi) @ xi.rho
    return Pose(rot, t)


def se3_log(pose: Pose) -> Twist:
    """Logarithm map SE(3) -> se(3); raises AngleNearPi near angle pi."""
    phi = pose.rotation.rotvec()
    rho = _so3_left_jacobian_inv(phi) @ pose.translation
    return Twist(rho, phi)


def interpolate_pose(t0: Pose, t1: Pose, alpha: float) -> Pose:
    """Geodesic between two poses: exp(alpha * log(T1 T0^-1)) * T0."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    if alpha == 0.0:
        return t0
    xi = se3_log(t1 @ t0.inverse())
    return se3_exp(xi.scaled(alpha)) @ t0


# ---------------------------------------------------------------------------
# camera
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Camera:
    """Pinhole camera with radial-tangential distortion."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k3: float = 0.0

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point outside the sensor")

    @property
    def has_distortion(self) -> bool:
        return any(abs(v) > 0.0 for v in (self.k1, self.k2, self.p1, self.p2, self.k3))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def intrinsic_matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])

    # -- distortion on normalized image coordinates ------------------------

    def distort_normalized(self, x, y):
        r2 = x * x + y * y
        radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
        xy = x * y
        xd = x * radial + 2.0 * self.p1 * xy + self.p2 * (r2 + 2.0 * x * x)
        yd = y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * xy
        return xd, yd

    def undistort_normalized(self, xd, yd):
        """Fixed-point inversion of the distortion polynomial."""
        if not self.has_distortion:
            return xd, yd
        x, y = xd, yd
        for _ in range(_UNDISTORT_ITERS):
            r2 = x * x + y * y
            radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
            xy = x * y
            dx = 2.0 * self.p1 * xy + self.p2 * (r2 + 2.0 * x * x)
            dy = self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * xy
            x_new = (xd - dx) / radial
            y_new = (yd - dy) / radial
            step = np.max(np.abs(x_new - x)) + np.max(np.abs(y_new - y))
            x, y = x_new, y_new
            if step < _UNDISTORT_TOL:
                break
        return x, y

    # -- scalar API ---------------------------------------------------------

    def project(self, p) -> np.ndarray:
        """Project a camera-frame point to pixel coordinates."""
        p = np.asarray(p, dtype=np.float64)
        if p[2] <= 1e-6:
            raise BehindCamera(f"z = {p[2]:.3e}")
        x, y = p[0] / p[2], p[1] / p[2]
        xd, yd = self.distort_normalized(x, y)
        return np.array([self.fx * xd + self.cx, self.fy * yd + self.cy])

    def backproject(self, pixel, depth: float) -> np.ndarray:
        """Lift a pixel at the given z-depth to a camera-frame point."""
        if depth <= 0.0:
            raise NonPositiveDepth(f"depth = {depth}")
        pixel = np.asarray(pixel, dtype=np.float64)
        xd = (pixel[0] - self.cx) / self.fx
        yd = (pixel[1] - self.cy) / self.fy
        x, y = self.undistort_normalized(xd, yd)
        return np.array([x * depth, y * depth, depth])

    # -- vectorized API -----------------------------------------------------

    def project_points(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Project (N, 3) camera-frame points; returns ((N, 2) px, valid mask).

        Points behind the camera get a False mask entry instead of raising.
        """
        pts = np.asarray(pts, dtype=np.float64)
        z = pts[:, 2]
        valid = z > 1e-6
        zsafe = np.where(valid, z, 1.0)
        x = pts[:, 0] / zsafe
        y = pts[:, 1] / zsafe
        xd, yd = self.distort_normalized(x, y)
        px = np.stack([self.fx * xd + self.cx, self.fy * yd + self.cy], axis=1)
        return px, valid

    def backproject_pixels(self, px: np.ndarray, depth: np.ndarray) -> np.ndarray:
        """Lift (N, 2) pixels at (N,) z-depths to (N, 3) camera-frame points."""
        px = np.asarray(px, dtype=np.float64)
        depth = np.asarray(depth, dtype=np.float64)
        xd = (px[:, 0] - self.cx) / self.fx
        yd = (px[:, 1] - self.cy) / self.fy
        x, y = self.undistort_normalized(xd, yd)
        return np.stack([x * depth, y * depth, depth], axis=1)

    def project_jacobian(self, p: np.ndarray) -> np.ndarray:
        """Analytic 2x3 Jacobian of project() wrt the camera-frame point."""
        x3, y3, z = p
        inv_z = 1.0 / z
        x, y = x3 * inv_z, y3 * inv_z
        # d(x, y)/d(p):
        d_norm = np.array([[inv_z, 0.0, -x3 * inv_z * inv_z], [0.0, inv_z, -y3 * inv_z * inv_z]])
        r2 = x * x + y * y
        radial = 1.0 + r2 * (self.k1 + r2 * (self.k2 + r2 * self.k3))
        dradial_dr2 = self.k1 + 2.0 * self.k2 * r2 + 3.0 * self.k3 * r2 * r2
        # d(xd, yd)/d(x, y)
        dxd_dx = radial + x * dradial_dr2 * 2.0 * x + 2.0 * self.p1 * y + 6.0 * self.p2 * x
        dxd_dy = x * dradial_dr2 * 2.0 * y + 2.0 * self.p1 * x + 2.0 * self.p2 * y
        dyd_dx = y * dradial_dr2 * 2.0 * x + 2.0 * self.p1 * x + 2.0 * self.p2 * y
        dyd_dy = radial + y * dradial_dr2 * 2.0 * y + 6.0 * self.p1 * y + 2.0 * self.p2 * x
        d_dist = np.array([[dxd_dx, dxd_dy], [dyd_dx, dyd_dy]])
        k = np.array([[self.fx, 0.0], [0.0, self.fy]])
        return k @ d_dist @ d_norm


def load_calib(path, width: int, height: int) -> Camera:
    """Read `fx fy cx cy k1 k2 p1 p2 k3` from a single-line calib.txt."""
    with open(path, "r", encoding="ascii") as f:
        vals = [float(tok) for tok in f.read().split()]
    if len(vals) != 9:
        raise ValueError(f"calib file must hold 9 values, got {len(vals)}")
    fx, fy, cx, cy, k1, k2, p1, p2, k3 = vals
    return Camera(fx, fy, cx, cy, width, height, k1, k2, p1, p2, k3)


def save_calib(path, cam: Camera) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(
            f"{cam.fx:.9g} {cam.fy:.9g} {cam.cx:.9g} {cam.cy:.9g} "
            f"{cam.k1:.9g} {cam.k2:.9g} {cam.p1:.9g} {cam.p2:.9g} {cam.k3:.9g}\n"
        )
