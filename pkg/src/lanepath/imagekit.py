"""Masks, RoI lateral-offset estimation, segmentation metrics and the loss.

Masks are plain numpy arrays indexed ``[row, col]`` (origin top-left, ``y``
down). Gray masks hold probabilities in ``[0, 1]``; binary masks hold
``uint8`` zeros and ones.
"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, EmptyBatch, MissingCentroid

WIDTH = 640
HEIGHT = 480
CENTER_X = 320
ROI_ROWS = (336, 344)
LEFT_COLS = (0, 320)
RIGHT_COLS = (321, 639)


def as_gray(data) -> np.ndarray:
    """Validate and return a float64 probability image."""
    m = np.asarray(data, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionMismatch(f"mask must be 2-D, got shape {m.shape}")
    if m.size and (m.min() < 0.0 or m.max() > 1.0):
        raise ValueError("gray mask values must lie in [0, 1]")
    return m


def binarize(mask, threshold: float = 0.5) -> np.ndarray:
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    return (np.asarray(mask) >= threshold).astype(np.uint8)


@dataclass(frozen=True)
class RoICentroids:
    x_left: Optional[float]
    x_right: Optional[float]
    n_left: int
    n_right: int


@dataclass(frozen=True)
class OffsetEstimate:
    delta0: float
    delta: float
    lane_width: float
    alpha: float


def roi_centroids(mask, n_min: int = 10, rows=ROI_ROWS) -> RoICentroids:
    m = np.asarray(mask)
    if m.shape != (HEIGHT, WIDTH):
        raise DimensionMismatch(f"expected {HEIGHT}x{WIDTH} mask, got {m.shape}")
    band = m[rows[0] : rows[1] + 1] != 0
    cols = np.arange(WIDTH, dtype=np.float64)

    def side(c0, c1):
        part = band[:, c0 : c1 + 1]
        n = int(part.sum())
        if n < max(n_min, 1):
            return None, n
        return float((part * cols[c0 : c1 + 1]).sum() / n), n

    xl, nl = side(*LEFT_COLS)
    xr, nr = side(*RIGHT_COLS)
    return RoICentroids(xl, xr, nl, nr)


def lateral_offset(c: RoICentroids, alpha: float = 0.6) -> OffsetEstimate:
    """Offset of the image centre from the lane centre, in pixels.

    Positive values mean the lane centre lies left of column 320, i.e. the
    vehicle sits right of the lane centre.
    """
    if c.x_left is None:
        raise MissingCentroid("left")
    if c.x_right is None:
        raise MissingCentroid("right")
    delta0 = CENTER_X - 0.5 * (c.x_left + c.x_right)
    return OffsetEstimate(delta0, alpha * delta0, c.x_right - c.x_left, alpha)


@dataclass(frozen=True)
class SegScores:
    tp: int
    tn: int
    fp: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float


def seg_metrics(pred, gt) -> SegScores:
    p = np.asarray(pred) != 0
    g = np.asarray(gt) != 0
    if p.shape != g.shape:
        raise DimensionMismatch(f"pred {p.shape} vs gt {g.shape}")
    tp = int(np.count_nonzero(p & g))
    tn = int(np.count_nonzero(~p & ~g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    total = tp + tn + fp + fn
    accuracy = (tp + tn) / total if total else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return SegScores(tp, tn, fp, fn, accuracy, precision, recall, f1)


_CLAMP = 1e-12


def weighted_ce(scores, labels) -> float:
    """Class-balanced binary cross entropy over logits.

    The positive term is weighted by the negative fraction and vice versa,
    so the rare lane class is not drowned by background pixels.
    """
    x = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if x.size == 0:
        raise EmptyBatch("weighted_ce needs at least one sample")
    if x.shape != y.shape:
        raise DimensionMismatch("scores and labels differ in length")
    pos = y == 1
    n_pos = int(pos.sum())
    n_neg = x.size - n_pos
    if n_pos == 0 or n_neg == 0:
        warnings.warn("degenerate batch: only one class present", RuntimeWarning)
    # sigma(x) via tanh avoids overflow in exp for large |x|
    sig = 0.5 * (1.0 + np.tanh(0.5 * x))
    sig = np.clip(sig, _CLAMP, 1.0 - _CLAMP)
    total = n_pos + n_neg
    loss = -(n_neg / total) * np.log(sig[pos]).sum()
    loss -= (n_pos / total) * np.log1p(-sig[~pos]).sum()
    return float(loss) + 0.0


# ------------------------------------------------------------------ PGM / PPM


def write_pgm(path, mask) -> None:
    """Write a gray mask as binary PGM (P5, maxval 255)."""
    m = np.asarray(mask, dtype=np.float64)
    q = np.clip(np.rint(m * 255.0), 0, 255).astype(np.uint8)
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(q.tobytes())


def _pgm_tokens(buf):
    tokens, pos = [], 2
    while len(tokens) < 3:
        while buf[pos : pos + 1].isspace():
            pos += 1
        if buf[pos : pos + 1] == b"#":
            pos = buf.index(b"\n", pos) + 1
            continue
        start = pos
        while not buf[pos : pos + 1].isspace():
            pos += 1
        tokens.append(int(buf[start:pos]))
    return tokens, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a P5 PGM; returns probabilities ``value / maxval``."""
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    (w, h, maxval), pos = _pgm_tokens(buf)
    if maxval > 255:
        raise ValueError(f"{path}: 16-bit PGM not supported")
    data = np.frombuffer(buf, dtype=np.uint8, count=w * h, offset=pos)
    return data.reshape(h, w).astype(np.float64) / float(maxval)


def write_ppm(path, rgb) -> None:
    img = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:2] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    (w, h, _), pos = _pgm_tokens(buf)
    return np.frombuffer(buf, dtype=np.uint8, count=w * h * 3, offset=pos).reshape(h, w, 3)
