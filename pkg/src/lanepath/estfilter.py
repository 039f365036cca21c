"""Temporal smoothing: mask averaging, windowed 1-D Kalman, block means."""
from collections import deque

import numpy as np

from .errors import DimensionMismatch, EmptyWindow

MASK_FRAMES = 5
KALMAN_WINDOW = 15
BLOCK = 11


class MaskBuffer:
    """FIFO of the last ``capacity`` gray masks."""

    def __init__(self, capacity=MASK_FRAMES):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.frames = deque(maxlen=capacity)

    def __len__(self):
        return len(self.frames)

    def push_and_average(self, mask) -> np.ndarray:
        m = np.asarray(mask, dtype=np.float64)
        if self.frames and self.frames[0].shape != m.shape:
            raise DimensionMismatch(f"mask {m.shape} does not match buffer {self.frames[0].shape}")
        self.frames.append(m)
        acc = np.zeros_like(m)
        for f in self.frames:
            acc += f
        return acc / len(self.frames)


def push_and_average(buf: MaskBuffer, mask) -> np.ndarray:
    return buf.push_and_average(mask)


class CurvatureWindow:
    def __init__(self, capacity=KALMAN_WINDOW):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.values = deque(maxlen=capacity)

    def push(self, kappa: float):
        self.values.append(float(kappa))

    def __len__(self):
        return len(self.values)


def kalman_estimate(window, q=1e-4, r=1e-2) -> float:
    """Random-walk scalar Kalman filter run over the window, oldest first.

    Starts from the first measurement with variance ``r`` and returns the
    final posterior mean.
    """
    values = list(window.values if isinstance(window, CurvatureWindow) else window)
    if not values:
        raise EmptyWindow("curvature window is empty")
    if q < 0 or not r > 0:
        raise ValueError("need q >= 0 and r > 0")
    x = values[0]
    p = r
    for z in values[1:]:
        p = p + q
        k = p / (p + r)
        x = x + k * (z - x)
        p = (1.0 - k) * p
    return x


def block_average(series, block=BLOCK):
    """Means of consecutive blocks; a trailing partial block is kept."""
    if block < 1:
        raise ValueError("block must be >= 1")
    s = np.asarray(series, dtype=np.float64)
    return [float(s[i : i + block].mean()) for i in range(0, s.size, block)]
