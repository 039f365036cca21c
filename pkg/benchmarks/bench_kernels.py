"""Numba loops against their numpy twins on realistic frame data.

    python benchmarks/bench_kernels.py [--repeat 20] [--frames 60]

The kernel table times both variants in this process. The end-to-end row
reruns a short static replay in a child process per backend, since the
backend is fixed at import time by ``LANEPATH_ACCEL``.
"""
import argparse
import os
import subprocess
import sys
import time
import timeit

import numpy as np

from lanepath import kernels
from lanepath.simworld import RenderOptions, VehicleState, benchmark_track_spec, build_track, render_mask
from lanepath.viewgeom import CameraModel


def sample_frame():
    track = build_track(benchmark_track_spec())
    veh = VehicleState(1700.0, 0.2, 0.01, 50 / 3.6)
    mask = render_mask(track, veh, CameraModel(), RenderOptions(pixel_noise_sd=0.05, seed=3), 0)
    return (mask >= 0.5).astype(np.uint8)


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def kernel_rows(repeat):
    binary = sample_frame()
    xs, ys, _ = kernels.extract_runs_numba(binary)
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)
    off, idx = kernels.neighbors_numba(xs, ys, 8.0)
    rng = np.random.default_rng(0)
    rows = rng.integers(0, 480, 400)
    lo = rng.integers(0, 600, 400)
    hi = lo + rng.integers(0, 40, 400)
    canvas = np.zeros((480, 640))

    cases = [
        ("extract_runs", lambda: kernels.extract_runs_numba(binary), lambda: kernels.extract_runs_numpy(binary)),
        ("neighbors", lambda: kernels.neighbors_numba(xs, ys, 8.0), lambda: kernels.neighbors_numpy(xs, ys, 8.0)),
        ("dbscan_labels", lambda: kernels.dbscan_labels_numba(off, idx, 5),
         lambda: kernels.dbscan_labels_numpy(off, idx, 5)),
        ("fill_spans", lambda: kernels.fill_spans_numba(canvas, rows, lo, hi, 1.0),
         lambda: kernels.fill_spans_numpy(canvas, rows, lo, hi, 1.0)),
    ]
    out = []
    for name, fast, slow in cases:
        fast()  # compile outside the timing
        t_nb, t_np = best_of(fast, repeat), best_of(slow, repeat)
        out.append((name, t_nb, t_np))
    return out, len(xs)


_CHILD = """
import time
from lanepath.cli import parse_config_dict
from lanepath.simworld import build_track, run_static
cfg = parse_config_dict({"eval": {"n_frames": %d}})
args = (build_track(cfg.track_spec()), cfg.camera(), cfg.render_options("static"), cfg.pipeline_config())
run_static(*args, 3, cfg.sim_options(), s0=1500.0)
t0 = time.perf_counter()
run_static(*args, %d, cfg.sim_options(), s0=1500.0)
print(time.perf_counter() - t0)
"""


def end_to_end(frames, backend):
    env = dict(os.environ, LANEPATH_ACCEL=backend)
    res = subprocess.run([sys.executable, "-c", _CHILD % (frames, frames)], env=env, check=True,
                         capture_output=True, text=True)
    return float(res.stdout.strip().splitlines()[-1]) / frames


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--frames", type=int, default=60)
    ap.add_argument("--skip-e2e", action="store_true", help="kernel table only")
    args = ap.parse_args(argv)

    rows, n_dots = kernel_rows(args.repeat)
    print(f"frame: {n_dots} dots, best of {args.repeat}")
    print(f"{'kernel':<16}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    for name, t_nb, t_np in rows:
        print(f"{name:<16}{t_nb * 1e3:>10.3f}{t_np * 1e3:>10.3f}{t_np / t_nb:>8.1f}x")
    if not args.skip_e2e:
        t0 = time.perf_counter()
        e_nb = end_to_end(args.frames, "numba")
        e_np = end_to_end(args.frames, "numpy")
        print(f"{'per frame':<16}{e_nb * 1e3:>10.3f}{e_np * 1e3:>10.3f}{e_np / e_nb:>8.1f}x"
              f"   ({args.frames} static frames, {time.perf_counter() - t0:.1f} s wall)")


if __name__ == "__main__":
    main()
