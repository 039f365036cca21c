"""Planar homographies between camera-view pixels and the top-down ground plane.

Ground coordinates are ``(u, v)``: ``u`` metres forward of the camera's
ground point and ``v`` metres lateral, positive to the left. Pixel
coordinates are ``(x, y)`` with integer values at pixel centres.
"""
import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DegenerateCamera, DegenerateConfiguration, PointAtInfinity

_W_EPS = 1e-12


@dataclass(frozen=True)
class CameraModel:
    height: float = 1.2
    pitch: float = 0.04
    focal: float = 500.0
    cx: float = 320.0
    cy: float = 240.0

    def validate(self):
        if not self.height > 0:
            raise DegenerateCamera("camera height must be > 0")
        if not self.focal > 0:
            raise DegenerateCamera("focal length must be > 0")
        if not 0.0 < self.pitch < math.pi / 2:
            raise DegenerateCamera("pitch must lie in (0, pi/2); the horizon would enter the ground map")

    def horizon_row(self) -> float:
        return self.cy - self.focal * math.tan(self.pitch)

    def ground_to_camera(self) -> np.ndarray:
        """3x3 matrix taking ground ``(u, v, 1)`` to camera-frame ``(Xc, Yc, Zc)``."""
        s, c = math.sin(self.pitch), math.cos(self.pitch)
        h = self.height
        return np.array([[0.0, -1.0, 0.0], [-s, 0.0, h * c], [c, 0.0, h * s]])

    def intrinsics(self) -> np.ndarray:
        return np.array([[self.focal, 0.0, self.cx], [0.0, self.focal, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True, eq=False)
class Homography:
    """Projective map, stored normalised so that ``m[2, 2] == 1`` when possible."""

    m: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.m, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise DegenerateConfiguration("homography has non-finite entries")
        if abs(m[2, 2]) > 1e-15:
            m = m / m[2, 2]
        else:
            m = m / np.abs(m).max()
        if abs(np.linalg.det(m)) < 1e-300:
            raise DegenerateConfiguration("homography is singular")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))

    def __eq__(self, other):
        return isinstance(other, Homography) and np.array_equal(self.m, other.m)

    def __hash__(self):
        return hash(self.m.tobytes())


def identity() -> Homography:
    return Homography(np.eye(3))


def homography_from_camera(cam: CameraModel) -> Homography:
    """Image-to-ground homography (the perspective-mapping direction)."""
    cam.validate()
    ground_to_image = cam.intrinsics() @ cam.ground_to_camera()
    return Homography(np.linalg.inv(ground_to_image))


def apply(m: np.ndarray, pts):
    """Vectorised projective transform; returns ``(out, w)`` before validity checks."""
    p = np.asarray(pts, dtype=np.float64)
    x, y = p[..., 0], p[..., 1]
    w = m[2, 0] * x + m[2, 1] * y + m[2, 2]
    ox = m[0, 0] * x + m[0, 1] * y + m[0, 2]
    oy = m[1, 0] * x + m[1, 1] * y + m[1, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.stack([ox / w, oy / w], axis=-1)
    return out, w


def _single(m, p):
    out, w = apply(m, p)
    if abs(float(w)) <= _W_EPS * max(1.0, abs(p[0]), abs(p[1])):
        raise PointAtInfinity(f"point {tuple(p)} maps to infinity")
    return float(out[0]), float(out[1])


def pm(h: Homography, p):
    """Camera-view pixel -> top-down ground point ``(u, v)``."""
    return _single(h.m, p)


def ipm(h: Homography, q):
    """Top-down ground point ``(u, v)`` -> camera-view pixel."""
    return _single(np.linalg.inv(h.m), q)


def pm_many(h: Homography, pts):
    """Map an ``(n, 2)`` pixel array; also returns a finite-result flag.

    Pixels above the horizon map to finite points behind the camera
    (``u < 0``); callers that need visible ground filter on ``u`` themselves.
    """
    out, w = apply(h.m, pts)
    return out, np.abs(w) > _W_EPS


def ipm_many(h: Homography, pts):
    out, w = apply(np.linalg.inv(h.m), pts)
    return out, np.abs(w) > _W_EPS


def _hartley(pts):
    c = pts.mean(axis=0)
    d = np.sqrt(((pts - c) ** 2).sum(axis=1)).mean()
    s = math.sqrt(2) / d if d > 0 else 1.0
    return np.array([[s, 0, -s * c[0]], [0, s, -s * c[1]], [0, 0, 1.0]])


def _collinear(a, b, c, tol):
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    scale = max(np.ptp([a[0], b[0], c[0]]), np.ptp([a[1], b[1], c[1]]), 1e-300) ** 2
    return abs(area) <= tol * scale


def fit_homography(src, dst) -> Homography:
    """Normalised DLT estimate of the homography taking ``src`` onto ``dst``."""
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise DegenerateConfiguration("expected matching (n, 2) point arrays")
    n = src.shape[0]
    if n < 4:
        raise DegenerateConfiguration(f"need at least 4 correspondences, got {n}")
    if n == 4:
        for a, b, c in combinations(range(4), 3):
            if _collinear(src[a], src[b], src[c], 1e-12) or _collinear(dst[a], dst[b], dst[c], 1e-12):
                raise DegenerateConfiguration("three of the four points are collinear")
    ts, td = _hartley(src), _hartley(dst)
    s = (np.c_[src, np.ones(n)] @ ts.T)[:, :2]
    d = (np.c_[dst, np.ones(n)] @ td.T)[:, :2]
    a = np.zeros((2 * n, 9))
    for i in range(n):
        x, y = s[i]
        u, v = d[i]
        a[2 * i] = [-x, -y, -1, 0, 0, 0, u * x, u * y, u]
        a[2 * i + 1] = [0, 0, 0, -x, -y, -1, v * x, v * y, v]
    _, sv, vt = np.linalg.svd(a)
    if sv.size >= 8 and sv[7] <= 1e-10 * sv[0]:
        raise DegenerateConfiguration("correspondences do not determine a unique homography")
    hn = vt[-1].reshape(3, 3)
    return Homography(np.linalg.inv(td) @ hn @ ts)


# ---------------------------------------------------------------- calibration file


def load_calibration(path):
    """Read a calibration JSON file.

    Either ``{"camera": {"height": .., "pitch": .., "focal": .., "cx": .., "cy": ..}}``
    or ``{"matrix": [9 numbers, row-major, image -> ground]}``. Returns
    ``(homography, camera_or_None)``.
    """
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return calibration_from_dict(doc)


def calibration_from_dict(doc):
    if "matrix" in doc:
        vals = [float(v) for v in doc["matrix"]]
        if len(vals) != 9:
            raise DegenerateConfiguration("calibration matrix needs exactly 9 numbers")
        return Homography(np.array(vals).reshape(3, 3)), None
    if "camera" in doc:
        cam = CameraModel(**{k: float(v) for k, v in doc["camera"].items()})
        return homography_from_camera(cam), cam
    raise DegenerateConfiguration("calibration needs a 'camera' or 'matrix' entry")


def save_calibration(path, cam: CameraModel = None, h: Homography = None):
    if cam is not None:
        doc = {"camera": {"height": cam.height, "pitch": cam.pitch, "focal": cam.focal, "cx": cam.cx, "cy": cam.cy}}
    else:
        doc = {"matrix": [float(v) for v in h.m.ravel()]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def ground_scale(h: Homography, row: float, col: float = 320.0) -> float:
    """Lateral ground metres spanned by one pixel at ``(col, row)``."""
    (u0, v0) = pm(h, (col, row))
    (u1, v1) = pm(h, (col + 1.0, row))
    return math.hypot(u1 - u0, v1 - v0)
