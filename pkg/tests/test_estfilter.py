import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanepath.errors import DimensionMismatch, EmptyWindow
from lanepath.estfilter import BLOCK, KALMAN_WINDOW, MASK_FRAMES, CurvatureWindow, MaskBuffer, block_average, kalman_estimate


def test_window_sizes():
    assert (MASK_FRAMES, KALMAN_WINDOW, BLOCK) == (5, 15, 11)


def test_mask_buffer_single_and_constant():
    m = np.random.default_rng(0).random((4, 5))
    buf = MaskBuffer()
    assert np.array_equal(buf.push_and_average(m), m)
    for _ in range(6):
        out = buf.push_and_average(m)
    assert len(buf) == 5
    assert np.allclose(out, m, atol=1e-15)


@pytest.mark.oracle
def test_mask_buffer_mean():
    buf = MaskBuffer()
    for v in (0.0, 0.2, 0.4, 0.6, 0.8):
        out = buf.push_and_average(np.full((2, 2), v))
    assert out[0, 0] == pytest.approx(0.4, abs=1e-15)


def test_mask_buffer_fifo_eviction():
    buf = MaskBuffer(2)
    buf.push_and_average(np.full((1, 1), 1.0))
    buf.push_and_average(np.full((1, 1), 0.0))
    assert buf.push_and_average(np.full((1, 1), 0.0))[0, 0] == 0.0


def test_mask_buffer_shape_mismatch():
    buf = MaskBuffer()
    buf.push_and_average(np.zeros((2, 2)))
    with pytest.raises(DimensionMismatch):
        buf.push_and_average(np.zeros((3, 2)))


def test_kalman_constant_and_single():
    assert kalman_estimate([0.004] * 15) == 0.004
    assert kalman_estimate([0.0123]) == 0.0123


@pytest.mark.oracle
def test_kalman_hand_recursion():
    assert kalman_estimate([0.0, 1.0], q=0.0, r=0.01) == 0.5


def test_kalman_empty_and_bad_noise():
    with pytest.raises(EmptyWindow):
        kalman_estimate(CurvatureWindow())
    with pytest.raises(ValueError):
        kalman_estimate([1.0], q=-1)
    with pytest.raises(ValueError):
        kalman_estimate([1.0], r=0)


def test_curvature_window_fifo():
    w = CurvatureWindow()
    for k in range(20):
        w.push(k)
    assert len(w) == 15 and list(w.values)[0] == 5.0


def test_block_average_examples():
    assert len(block_average(np.arange(22.0), 11)) == 2
    assert block_average([3.0] * 30, 11) == [3.0, 3.0, 3.0]
    assert block_average(range(1, 12), 11) == [6.0]
    assert block_average([1.0, 2.0, 3.0], 2) == [1.5, 3.0]


def test_block_average_rejects_zero_block():
    with pytest.raises(ValueError):
        block_average([1.0], 0)


# ------------------------------------------------------------------ properties

meas = st.lists(st.floats(-0.1, 0.1), min_size=1, max_size=15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_average_stays_in_unit_interval(seed, n):
    rng = np.random.default_rng(seed)
    buf = MaskBuffer()
    for _ in range(n):
        out = buf.push_and_average(rng.random((8, 8)))
        assert out.min() >= 0.0 and out.max() <= 1.0


@settings(max_examples=200, deadline=None)
@given(meas, st.floats(0, 1e-2), st.floats(1e-4, 1.0))
def test_kalman_within_measurement_range(z, q, r):
    x = kalman_estimate(z, q, r)
    assert min(z) - 1e-15 <= x <= max(z) + 1e-15


@settings(max_examples=200, deadline=None)
@given(meas, st.floats(-1, 1))
def test_kalman_shift_equivariant(z, c):
    a = kalman_estimate([v + c for v in z])
    b = kalman_estimate(z) + c
    assert a == pytest.approx(b, abs=1e-12)


def test_kalman_variance_decreases_without_process_noise():
    p, r = 0.01, 0.01
    seq = [p]
    for _ in range(14):
        k = p / (p + r)
        p = (1 - k) * p
        seq.append(p)
    assert all(b < a for a, b in zip(seq, seq[1:]))
    # the estimate equals the running mean when q = 0
    z = [0.3, -0.1, 0.2, 0.5]
    assert kalman_estimate(z, 0.0, 0.01) == pytest.approx(np.mean(z), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_block_average_preserves_mean(k, block, seed):
    s = np.random.default_rng(seed).normal(size=k * block)
    assert np.mean(block_average(s, block)) == pytest.approx(s.mean(), abs=1e-12)
