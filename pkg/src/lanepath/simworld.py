"""Synthetic track, mask renderer, Frenet-frame vehicle and closed-loop runs.

The track centreline is parameterised by arc length ``s``; curvature is
piecewise constant with optional linear ramps ("blends") at the start of
each segment. The host is a kinematic bicycle expressed in track
coordinates ``(s, d, psi)`` with ``d`` positive to the left.
"""
import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import InvalidSpec, OffLane
from .pipeline import FrameResult, PipelineConfig, Session
from .viewgeom import CameraModel, homography_from_camera, pm

MAX_ABS_CURVATURE = 0.07
WHEELBASE = 2.7
KMH = 1.0 / 3.6
INTEGRATION_STEP = 0.1


# ------------------------------------------------------------------ track


@dataclass(frozen=True)
class TrackSpec:
    """``segments`` holds ``(length, curvature)`` or ``(length, curvature, blend)``.

    ``blend`` is the length of the linear curvature ramp at the start of a
    segment, coming from the previous segment's curvature; the track-wide
    ``blend`` is used when a segment gives none.
    """

    segments: tuple
    blend: float = 0.0
    lane_width: float = 3.5

    @property
    def total_length(self):
        return float(sum(seg[0] for seg in self.segments))

    def validate(self):
        if not self.segments:
            raise InvalidSpec("track needs at least one segment")
        if not self.lane_width > 0:
            raise InvalidSpec("lane_width must be > 0")
        for i, seg in enumerate(self.segments):
            if len(seg) not in (2, 3):
                raise InvalidSpec(f"segment {i}: expected (length, curvature[, blend])")
            length, kappa = float(seg[0]), float(seg[1])
            blend = float(seg[2]) if len(seg) == 3 else self.blend
            if not length > 0:
                raise InvalidSpec(f"segment {i}: length must be > 0")
            if not abs(kappa) <= MAX_ABS_CURVATURE:
                raise InvalidSpec(f"segment {i}: |curvature| must be <= {MAX_ABS_CURVATURE}")
            if i > 0 and not 0 <= blend <= length:
                raise InvalidSpec(f"segment {i}: blend must lie in [0, length]")
        return self


def benchmark_track_spec() -> TrackSpec:
    """The 3919 m default profile shipped in ``data/benchmark_track.json``."""
    text = resources.files("lanepath").joinpath("data/benchmark_track.json").read_text(encoding="utf-8")
    return track_spec_from_dict(json.loads(text))


def track_spec_from_dict(d) -> TrackSpec:
    segs = tuple(tuple(float(x) for x in seg) for seg in d["segments"])
    return TrackSpec(segs, float(d.get("blend", 0.0)), float(d.get("lane_width", 3.5)))


def circle_track_spec(radius, length=None, lane_width=3.5) -> TrackSpec:
    length = 2 * math.pi * radius if length is None else length
    return TrackSpec(((length, 1.0 / radius),), 0.0, lane_width)


def _sinc(x):
    return np.sinc(x / np.pi)


class Track:
    def __init__(self, spec: TrackSpec):
        spec.validate()
        self.spec = spec
        self.lane_width = spec.lane_width
        pieces = []  # (s0, length, k0, k1)
        s, prev = 0.0, None
        for i, seg in enumerate(spec.segments):
            length, kappa = float(seg[0]), float(seg[1])
            blend = float(seg[2]) if len(seg) == 3 else spec.blend
            if i > 0 and blend > 0 and prev != kappa:
                pieces.append((s, blend, prev, kappa))
                if length - blend > 0:
                    pieces.append((s + blend, length - blend, kappa, kappa))
            else:
                pieces.append((s, length, kappa, kappa))
            s += length
            prev = kappa
        self.total_length = s
        # open-ended continuation past the end keeps rendering defined
        pieces.append((s, math.inf, prev, prev))
        self._s0 = np.array([p[0] for p in pieces])
        self._len = np.array([p[1] for p in pieces])
        self._k0 = np.array([p[2] for p in pieces])
        self._k1 = np.array([p[3] for p in pieces])
        self._ramp = self._k0 != self._k1
        n = len(pieces)
        self._th0 = np.zeros(n)
        self._x0 = np.zeros(n)
        self._y0 = np.zeros(n)
        self._grid = {}
        for i in range(n - 1):
            th_end = self._th0[i] + 0.5 * (self._k0[i] + self._k1[i]) * self._len[i]
            if self._ramp[i]:
                gs, gx, gy = self._integrate_ramp(i)
                self._grid[i] = (gs, gx, gy)
                x_end, y_end = gx[-1], gy[-1]
            else:
                x_end, y_end = self._arc(i, np.array([self._len[i]]))
                x_end, y_end = x_end[0], y_end[0]
            self._th0[i + 1] = th_end
            self._x0[i + 1] = x_end
            self._y0[i + 1] = y_end

    def _theta_local(self, i, t):
        return self._th0[i] + self._k0[i] * t + 0.5 * (self._k1[i] - self._k0[i]) * t * t / self._len[i]

    def _arc(self, i, t):
        th0, k = self._th0[i], self._k0[i]
        half = 0.5 * k * t
        chord = t * _sinc(half)
        return self._x0[i] + chord * np.cos(th0 + half), self._y0[i] + chord * np.sin(th0 + half)

    def _integrate_ramp(self, i):
        n = max(1, int(math.ceil(self._len[i] / INTEGRATION_STEP - 1e-9)))
        t = np.linspace(0.0, self._len[i], n + 1)
        th = self._theta_local(i, t)
        c, s = np.cos(th), np.sin(th)
        dt = t[1] - t[0]
        gx = self._x0[i] + np.concatenate([[0.0], np.cumsum(0.5 * (c[1:] + c[:-1]) * dt)])
        gy = self._y0[i] + np.concatenate([[0.0], np.cumsum(0.5 * (s[1:] + s[:-1]) * dt)])
        return t, gx, gy

    def _piece(self, s):
        return np.clip(np.searchsorted(self._s0, s, side="right") - 1, 0, len(self._s0) - 1)

    def curvature(self, s):
        s = np.asarray(s, dtype=np.float64)
        i = self._piece(s)
        t = s - self._s0[i]
        frac = np.where(self._ramp[i], np.clip(t / np.where(self._ramp[i], self._len[i], 1.0), 0, 1), 0.0)
        return self._k0[i] + (self._k1[i] - self._k0[i]) * frac

    def heading(self, s):
        s = np.asarray(s, dtype=np.float64)
        i = self._piece(s)
        t = s - self._s0[i]
        ramp_len = np.where(self._ramp[i], self._len[i], 1.0)
        return self._th0[i] + self._k0[i] * t + 0.5 * (self._k1[i] - self._k0[i]) * t * t / ramp_len

    def position(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=np.float64))
        i = self._piece(s)
        x = np.empty_like(s)
        y = np.empty_like(s)
        for pi in np.unique(i):
            sel = i == pi
            t = s[sel] - self._s0[pi]
            if not self._ramp[pi]:
                x[sel], y[sel] = self._arc(pi, t)
                continue
            gs, gx, gy = self._grid[pi]
            k = np.clip(np.searchsorted(gs, t, side="right") - 1, 0, len(gs) - 1)
            delta = t - gs[k]
            th_a = self._theta_local(pi, gs[k])
            th_b = self._theta_local(pi, t)
            half = 0.5 * (th_b - th_a)
            chord = delta * _sinc(half)
            x[sel] = gx[k] + chord * np.cos(th_a + half)
            y[sel] = gy[k] + chord * np.sin(th_a + half)
        return x, y

    def point(self, s, offset=0.0):
        """World point at arc length ``s`` shifted ``offset`` metres to the left."""
        x, y = self.position(s)
        th = self.heading(np.atleast_1d(s))
        return x - offset * np.sin(th), y + offset * np.cos(th)


def build_track(spec: TrackSpec) -> Track:
    return Track(spec)


# ------------------------------------------------------------------ rendering


@dataclass(frozen=True)
class Occluder:
    """Zeroes the rectangle ``(x, y, w, h)`` on frames ``start <= k < stop``."""

    start: int
    stop: int
    x: int
    y: int
    w: int
    h: int

    def active(self, frame):
        return self.start <= frame < self.stop


def periodic_occluders(n_frames, fraction=0.1, block=10, rect=(0, 330, 640, 21), phase=None):
    """Blocks of ``block`` occluded frames covering ``fraction`` of ``n_frames``."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    period = int(round(block / fraction))
    phase = period // 2 if phase is None else phase
    out = []
    for start in range(phase, n_frames, period):
        out.append(Occluder(start, min(start + block, n_frames), *rect))
    return tuple(out)


@dataclass(frozen=True)
class RenderOptions:
    line_width: float = 0.12
    pixel_noise_sd: float = 0.0
    dropout_rate: float = 0.0
    occluders: tuple = ()
    seed: int = 0
    max_ahead: float = 60.0
    sample_step: float = 0.25

    def validate(self):
        if not self.line_width > 0:
            raise ValueError("line_width", "must be > 0")
        if self.pixel_noise_sd < 0:
            raise ValueError("pixel_noise_sd", "must be >= 0")
        if not 0 <= self.dropout_rate <= 1:
            raise ValueError("dropout_rate", "must be in [0, 1]")
        return self


@dataclass(frozen=True)
class VehicleState:
    s: float
    d: float = 0.0
    psi: float = 0.0
    v: float = 50 * KMH


def _edge_pixels(track, veh, cam, offset, opts):
    s = veh.s + np.arange(-2.0, opts.max_ahead + 1e-9, opts.sample_step)
    wx, wy = track.point(s, offset)
    px, py = track.point(veh.s, veh.d)
    phi = float(track.heading(veh.s)) + veh.psi
    c, sn = math.cos(phi), math.sin(phi)
    du = (wx - px[0]) * c + (wy - py[0]) * sn
    dv = -(wx - px[0]) * sn + (wy - py[0]) * c
    # keep the stretch that is ahead of the camera and recedes monotonically
    ahead = np.flatnonzero(du > 1.0)
    if ahead.size == 0:
        return None
    start = ahead[0]
    grow = np.diff(du[start:]) > 0
    stop = start + 1 + (int(np.argmin(grow)) if not grow.all() else grow.size)
    g = cam.intrinsics() @ cam.ground_to_camera()
    hom = np.stack([du[start:stop], dv[start:stop], np.ones(stop - start)])
    img = g @ hom
    return img[0] / img[2], img[1] / img[2]


def _rasterize_line(mask, track, veh, cam, center, opts):
    a = _edge_pixels(track, veh, cam, center + 0.5 * opts.line_width, opts)
    b = _edge_pixels(track, veh, cam, center - 0.5 * opts.line_width, opts)
    if a is None or b is None or a[0].size < 2 or b[0].size < 2:
        return
    (xa, ya), (xb, yb) = a, b
    top = max(ya.min(), yb.min())
    bottom = min(ya.max(), yb.max())
    rows = np.arange(max(math.ceil(top), 0), min(math.floor(bottom), mask.shape[0] - 1) + 1)
    if rows.size == 0:
        return
    # y decreases with distance, so reverse for np.interp
    ea = np.interp(rows, ya[::-1], xa[::-1])
    eb = np.interp(rows, yb[::-1], xb[::-1])
    lo = np.ceil(np.minimum(ea, eb)).astype(np.int64)
    hi = np.floor(np.maximum(ea, eb)).astype(np.int64)
    thin = lo > hi
    mid = np.rint(0.5 * (ea + eb)).astype(np.int64)
    lo = np.where(thin, mid, lo)
    hi = np.where(thin, mid, hi)
    kernels.fill_spans(mask, rows.astype(np.int64), lo, hi, 1.0)


def render_mask(track: Track, vehicle: VehicleState, cam: CameraModel, opts: RenderOptions = RenderOptions(),
                frame_idx: int = 0) -> np.ndarray:
    """Synthetic lane-probability image as seen from ``vehicle``."""
    mask = np.zeros((480, 640), np.float64)
    half = 0.5 * track.lane_width
    for center in (half, -half):
        _rasterize_line(mask, track, vehicle, cam, center, opts)
    if opts.dropout_rate > 0 or opts.pixel_noise_sd > 0:
        rng = np.random.default_rng([opts.seed, frame_idx])
        if opts.dropout_rate > 0:
            line = mask > 0
            drop = rng.random(mask.shape) < opts.dropout_rate
            mask[line & drop] = 0.0
        if opts.pixel_noise_sd > 0:
            mask += rng.normal(0.0, opts.pixel_noise_sd, mask.shape)
            np.clip(mask, 0.0, 1.0, out=mask)
    for occ in opts.occluders:
        if occ.active(frame_idx):
            mask[max(occ.y, 0) : occ.y + occ.h, max(occ.x, 0) : occ.x + occ.w] = 0.0
    return mask


# ------------------------------------------------------------------ vehicle


def ground_truth(track: Track, vehicle: VehicleState, u_s: float = 5.0):
    """``(kappa_gt, delta_gt)``; ``delta_gt`` is positive when the host is right of centre."""
    return float(track.curvature(vehicle.s + u_s)), -vehicle.d


def step_vehicle(state: VehicleState, steering: float, dt: float, track: Track, wheelbase=WHEELBASE) -> VehicleState:
    """One forward-Euler step of the kinematic bicycle in track coordinates."""
    if not dt > 0:
        raise ValueError("dt must be > 0")
    k = float(track.curvature(state.s))
    s_dot = state.v * math.cos(state.psi) / (1.0 - state.d * k)
    d_dot = state.v * math.sin(state.psi)
    psi_dot = state.v * math.tan(steering) / wheelbase - k * s_dot
    nxt = VehicleState(state.s + s_dot * dt, state.d + d_dot * dt, state.psi + psi_dot * dt, state.v)
    if abs(nxt.d) >= track.lane_width:
        raise OffLane(nxt.s, nxt.d)
    return nxt


def controller(kappa_hat, delta_hat, v, wheelbase=WHEELBASE, k_d=0.8, limit=0.5) -> float:
    """Curvature feed-forward plus lateral-offset feedback.

    A positive offset (host right of the lane centre) steers left, i.e.
    positive steering.
    """
    if not v > 0:
        raise ValueError("speed must be > 0")
    steer = math.atan(wheelbase * kappa_hat) + math.atan(k_d * delta_hat / v)
    return max(-limit, min(limit, steer))


def oracle_offset(vehicle: VehicleState, lookahead: float) -> float:
    """Ground-truth offset read at a point ``lookahead`` metres along the heading."""
    return -(vehicle.d + lookahead * math.sin(vehicle.psi))


# ------------------------------------------------------------------ runs


@dataclass(frozen=True)
class SimOptions:
    speed_kmh: float = 50.0
    frame_rate: float = 20.0
    wheelbase: float = WHEELBASE
    k_d: float = 0.8
    steer_limit: float = 0.5
    perception: str = "pipeline"

    def validate(self):
        if not 0 < self.speed_kmh <= 70:
            raise ValueError("speed_kmh", "must be in (0, 70]")
        if not self.frame_rate > 0:
            raise ValueError("frame_rate", "must be > 0")
        if not self.wheelbase > 0:
            raise ValueError("wheelbase", "must be > 0")
        if self.perception not in ("pipeline", "oracle"):
            raise ValueError("perception", "must be 'pipeline' or 'oracle'")
        return self


@dataclass
class FrameRecord:
    result: FrameResult
    kappa_gt: float
    delta_gt: float
    s: float
    d: float
    psi: float


@dataclass
class RunResult:
    mode: str
    records: list = field(default_factory=list)
    outcome: str = "completed"
    message: str = ""

    @property
    def off_lane(self):
        return self.outcome == "off_lane"

    def max_abs_d(self):
        return max((abs(r.d) for r in self.records), default=0.0)


def run_static(track: Track, cam: CameraModel, opts: RenderOptions, cfg: PipelineConfig, n_frames: int,
               sim: SimOptions = SimOptions(), s0: float = 0.0, on_mask=None) -> RunResult:
    """Host glued to the centreline; every rendered frame goes through the pipeline."""
    sim.validate()
    session = Session(homography_from_camera(cam), cfg)
    step = sim.speed_kmh * KMH / sim.frame_rate
    out = RunResult("static")
    for k in range(n_frames):
        veh = VehicleState(s0 + k * step, 0.0, 0.0, sim.speed_kmh * KMH)
        mask = render_mask(track, veh, cam, opts, k)
        if on_mask is not None:
            on_mask(k, mask)
        res = session.process(mask)
        kgt, dgt = ground_truth(track, veh, cfg.u_s)
        out.records.append(FrameRecord(res, kgt, dgt, veh.s, veh.d, veh.psi))
    return out


def run_dynamic(track: Track, cam: CameraModel, opts: RenderOptions, cfg: PipelineConfig,
                duration: Optional[float] = None, sim: SimOptions = SimOptions(), on_mask=None) -> RunResult:
    """Closed loop: estimates steer the host, the host's motion changes the next frame.

    Ends at the track end, after ``duration`` seconds, or when the host
    leaves the lane (reported as ``outcome == "off_lane"``).
    """
    sim.validate()
    v = sim.speed_kmh * KMH
    dt = 1.0 / sim.frame_rate
    n_max = math.inf if duration is None else int(round(duration * sim.frame_rate))
    oracle = sim.perception == "oracle"
    session = None if oracle else Session(homography_from_camera(cam), cfg)
    lookahead = _roi_lookahead(cam, cfg)
    veh = VehicleState(0.0, 0.0, 0.0, v)
    out = RunResult("dynamic")
    held_delta = 0.0
    k = 0
    while k < n_max and veh.s < track.total_length:
        kgt, dgt = ground_truth(track, veh, cfg.u_s)
        if oracle:
            res = FrameResult(k, kgt, kgt, None, oracle_offset(veh, lookahead), True, True)
            kappa_in, delta_in = kgt, res.delta_m
        else:
            mask = render_mask(track, veh, cam, opts, k)
            if on_mask is not None:
                on_mask(k, mask)
            res = session.process(mask)
            kappa_in = res.kappa_hat if res.kappa_avail else 0.0
            if res.delta_avail:
                held_delta = res.delta_m
            delta_in = held_delta
        out.records.append(FrameRecord(res, kgt, dgt, veh.s, veh.d, veh.psi))
        steer = controller(kappa_in, delta_in, v, sim.wheelbase, sim.k_d, sim.steer_limit)
        try:
            veh = step_vehicle(veh, steer, dt, track, sim.wheelbase)
        except OffLane as exc:
            out.outcome = "off_lane"
            out.message = str(exc)
            break
        k += 1
    return out


def _roi_lookahead(cam: CameraModel, cfg: PipelineConfig) -> float:
    """Ground distance of the RoI row in front of the camera."""
    return pm(homography_from_camera(cam), (cam.cx, cfg.roi_row))[0]
