"""Lane-line dots from binary masks and their DBSCAN grouping."""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoLaneFound
from .viewgeom import Homography, pm_many


@dataclass(frozen=True, eq=False)
class Dots:
    """Per-row run centroids: ``x`` sub-pixel column, ``y`` row, ``width`` run length."""

    x: np.ndarray
    y: np.ndarray
    width: np.ndarray

    def __len__(self):
        return int(self.x.shape[0])

    def xy(self) -> np.ndarray:
        return np.column_stack([self.x, self.y.astype(np.float64)])

    def take(self, idx) -> "Dots":
        return Dots(self.x[idx], self.y[idx], self.width[idx])

    @classmethod
    def from_points(cls, pts):
        p = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
        return cls(p[:, 0].copy(), np.rint(p[:, 1]).astype(np.int64), np.ones(len(p), np.int64))


def extract_dots(mask) -> Dots:
    b = np.ascontiguousarray(np.asarray(mask) != 0, dtype=np.uint8)
    xs, ys, ws = kernels.extract_runs(b)
    return Dots(xs, ys, ws)


@dataclass(frozen=True, eq=False)
class Clustering:
    labels: np.ndarray  # -1 marks noise
    n_clusters: int

    def members(self, cid) -> np.ndarray:
        return np.flatnonzero(self.labels == cid)


def dbscan(points, eps: float = 8.0, min_pts: int = 5) -> Clustering:
    """Density clustering on Euclidean ``(x, y)``.

    The neighbourhood is the closed ``eps`` ball and counts the point itself.
    Clusters are numbered in order of their lowest-index core point; a border
    point reachable from several clusters joins the lowest-numbered one.
    """
    if not eps > 0:
        raise ValueError("eps must be > 0")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    if isinstance(points, Dots):
        xs, ys = points.x.astype(np.float64), points.y.astype(np.float64)
    else:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        xs, ys = np.ascontiguousarray(p[:, 0]), np.ascontiguousarray(p[:, 1])
    if xs.size == 0:
        return Clustering(np.zeros(0, np.int64), 0)
    offsets, indices = kernels.neighbors(xs, ys, float(eps))
    labels = kernels.dbscan_labels(offsets, indices, int(min_pts))
    return Clustering(labels, int(labels.max()) + 1 if labels.size else 0)


def _side_candidates(clustering, dots, h, min_size, max_range):
    xy = dots.xy()
    ground, ok = pm_many(h, xy)
    out = []
    for cid in range(clustering.n_clusters):
        idx = clustering.members(cid)
        if idx.size < min_size:
            continue
        g = ground[idx]
        keep = ok[idx] & (g[:, 0] > 0) & (g[:, 0] <= max_range)
        if not keep.any():
            continue
        out.append((cid, float(g[keep, 1].mean()), g[keep]))
    return out


def assign_sides(clustering, dots, h: Homography, min_size=12, max_range=60.0):
    """Nearest cluster on each side of the vehicle, as ground-point arrays.

    Returns ``(left, right, left_id, right_id)``; a side without a
    candidate comes back as an empty ``(0, 2)`` array and id ``None``.
    """
    cands = _side_candidates(clustering, dots, h, min_size, max_range)
    left = [c for c in cands if c[1] > 0]
    right = [c for c in cands if c[1] < 0]
    empty = np.zeros((0, 2))
    lsel = min(left, key=lambda c: (abs(c[1]), c[0])) if left else None
    rsel = min(right, key=lambda c: (abs(c[1]), c[0])) if right else None
    return (
        lsel[2] if lsel else empty,
        rsel[2] if rsel else empty,
        lsel[0] if lsel else None,
        rsel[0] if rsel else None,
    )


def select_lane_clusters(clustering, dots, h: Homography, min_size=12, max_range=60.0):
    """Ego-lane line points ``(left, right)`` in ground coordinates.

    Raises ``NoLaneFound`` naming the empty side; the exception carries
    whatever the other side produced.
    """
    left, right, _, _ = assign_sides(clustering, dots, h, min_size, max_range)
    if left.shape[0] == 0:
        raise NoLaneFound("left", left, right)
    if right.shape[0] == 0:
        raise NoLaneFound("right", left, right)
    return left, right
