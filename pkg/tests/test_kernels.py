"""Both kernel backends must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanepath import _accel, kernels

pytestmark = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not importable")
seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.floats(0.01, 0.9))
def test_extract_runs_agree(seed, p):
    b = (np.random.default_rng(seed).random((48, 64)) < p).astype(np.uint8)
    for x, y in zip(kernels.extract_runs_numba(b), kernels.extract_runs_numpy(b)):
        assert np.array_equal(x, y)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(0, 300), st.floats(0.5, 20))
def test_neighbors_agree(seed, n, eps):
    rng = np.random.default_rng(seed)
    xs = np.round(rng.uniform(0, 100, n), 1)
    ys = rng.integers(0, 100, n).astype(np.float64)
    a = kernels.neighbors_numba(xs, ys, eps)
    b = kernels.neighbors_numpy(xs, ys, eps, chunk=37)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 250), st.floats(1, 12), st.integers(1, 8))
def test_dbscan_labels_agree(seed, n, eps, min_pts):
    rng = np.random.default_rng(seed)
    xs, ys = rng.uniform(0, 80, n), rng.uniform(0, 80, n)
    off, idx = kernels.neighbors_numba(xs, ys, eps)
    assert np.array_equal(kernels.dbscan_labels_numba(off, idx, min_pts), kernels.dbscan_labels_numpy(off, idx, min_pts))


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_fill_spans_agree(seed):
    rng = np.random.default_rng(seed)
    rows = rng.integers(-5, 50, 30)
    lo = rng.integers(-10, 70, 30)
    hi = lo + rng.integers(-3, 20, 30)
    a, b = np.zeros((48, 64)), np.zeros((48, 64))
    kernels.fill_spans_numba(a, rows, lo, hi, 1.0)
    kernels.fill_spans_numpy(b, rows, lo, hi, 1.0)
    assert np.array_equal(a, b)


def test_backend_flag_selects_numpy():
    code = "from lanepath import kernels, BACKEND; print(BACKEND, kernels.dbscan_labels.__name__)"
    env = dict(os.environ, LANEPATH_ACCEL="numpy")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    assert out.split() == ["numpy", "dbscan_labels_numpy"]
    env["LANEPATH_ACCEL"] = "numba"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout
    assert out.split()[0] == "numba"


def test_pipeline_identical_across_backends(tmp_path):
    code = (
        "from lanepath.cli import main\n"
        f"main(['replay', '--out', r'{tmp_path}/' + __import__('lanepath').BACKEND, '--eval.n_frames', '15',"
        " '--render.pixel_noise_sd', '0.1', '--render.dropout_rate', '0.2'])\n"
    )
    for backend in ("numba", "numpy"):
        env = dict(os.environ, LANEPATH_ACCEL=backend)
        subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, check=True)
    a = (tmp_path / "numba" / "frames.csv").read_bytes()
    b = (tmp_path / "numpy" / "frames.csv").read_bytes()
    assert a == b
