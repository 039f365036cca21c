"""Per-frame path prediction: mask -> lane model -> curvature and lateral offset."""
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from .clusterer import assign_sides, dbscan, extract_dots
from .errors import (
    IllConditioned,
    InsufficientData,
    MissingCentroid,
    NoLaneModel,
    NotCalibrated,
)
from .estfilter import CurvatureWindow, MaskBuffer, kalman_estimate
from .imagekit import binarize, lateral_offset, roi_centroids
from .lanefit import (
    LaneModel,
    Quadratic,
    RlsState,
    curvature,
    fit_parallel,
    middle_line,
    path_polynomial,
    world_curvature,
)
from .viewgeom import Homography, ground_scale, ipm_many

LANE_BLUE = (0, 0, 255)
PATH_GREEN = (0, 255, 0)


@dataclass(frozen=True)
class PipelineConfig:
    threshold: float = 0.5
    eps: float = 8.0
    min_pts: int = 5
    min_cluster_size: int = 12
    alpha: float = 0.6
    beta: float = 1.0
    u_s: float = 5.0
    u_f: float = 30.0
    forgetting: float = 0.9
    ridge: float = 1e-6
    kalman_q: float = 1e-4
    kalman_r: float = 1e-2
    n_min: int = 10
    anchored_path: bool = False
    curvature_formula: str = "standard"
    mask_frames: int = 5
    kalman_window: int = 15
    block: int = 11
    roi_row: float = 340.0
    temporal: bool = True
    render_overlay: bool = False

    def validate(self):
        """Raise ``ValueError`` naming the first field outside its domain."""
        checks = [
            ("threshold", 0.0 < self.threshold < 1.0, "must be in (0, 1)"),
            ("eps", self.eps > 0, "must be > 0"),
            ("min_pts", self.min_pts >= 1, "must be >= 1"),
            ("min_cluster_size", self.min_cluster_size >= 1, "must be >= 1"),
            ("alpha", math.isfinite(self.alpha), "must be finite"),
            ("beta", self.beta > 0, "must be > 0"),
            ("u_s", self.u_s >= 0, "must be >= 0"),
            ("u_f", self.u_f > self.u_s, "must exceed u_s"),
            ("forgetting", 0.0 < self.forgetting <= 1.0, "must be in (0, 1]"),
            ("ridge", self.ridge >= 0, "must be >= 0"),
            ("kalman_q", self.kalman_q >= 0, "must be >= 0"),
            ("kalman_r", self.kalman_r > 0, "must be > 0"),
            ("n_min", self.n_min >= 1, "must be >= 1"),
            ("curvature_formula", self.curvature_formula in ("standard", "unsquared"),
             "must be 'standard' or 'unsquared'"),
            ("mask_frames", self.mask_frames >= 1, "must be >= 1"),
            ("kalman_window", self.kalman_window >= 1, "must be >= 1"),
            ("block", self.block >= 1, "must be >= 1"),
            ("roi_row", 0 <= self.roi_row < 480, "must be a row inside the image"),
        ]
        for name, ok, reason in checks:
            if not ok:
                raise ValueError(name, reason)
        return self


@dataclass
class FrameResult:
    frame_idx: int
    kappa_raw: float
    kappa_hat: float
    delta_px: Optional[float]
    delta_m: Optional[float]
    kappa_avail: bool
    delta_avail: bool
    lane_model: Optional[LaneModel] = None
    path: Optional[Quadratic] = None
    fitted: bool = False
    overlay: Optional[np.ndarray] = field(default=None, repr=False)
    ops: dict = field(default_factory=dict, repr=False)


@dataclass
class SessionState:
    """Everything a driving session carries from one frame to the next."""

    masks: MaskBuffer
    window: CurvatureWindow
    rls: Optional[RlsState] = None
    model: Optional[LaneModel] = None
    frame_idx: int = 0
    meters_per_px: Optional[float] = None

    @classmethod
    def fresh(cls, cfg: PipelineConfig):
        return cls(MaskBuffer(cfg.mask_frames), CurvatureWindow(cfg.kalman_window))


def _in_window(pts, lo, hi):
    return pts[(pts[:, 0] >= lo) & (pts[:, 0] <= hi)]


def process_frame(mask, h: Homography, cfg: PipelineConfig, state: SessionState) -> FrameResult:
    """Run one frame through the whole chain and update ``state`` in place.

    Per-frame perception failures never raise; they show up as cleared
    availability flags. Curvature falls back to the last lane model when
    this frame cannot be fitted.
    """
    if h is None:
        raise NotCalibrated("process_frame needs a homography")
    if state.meters_per_px is None:
        state.meters_per_px = ground_scale(h, cfg.roi_row)
    idx = state.frame_idx
    state.frame_idx += 1

    if cfg.temporal:
        avg = state.masks.push_and_average(mask)
    else:
        avg = np.asarray(mask, dtype=np.float64)
    binary = binarize(avg, cfg.threshold)
    dots = extract_dots(binary)
    clustering = dbscan(dots, cfg.eps, cfg.min_pts)
    left, right, _, _ = assign_sides(clustering, dots, h, cfg.min_cluster_size)
    left = _in_window(left, cfg.u_s, cfg.u_f)
    right = _in_window(right, cfg.u_s, cfg.u_f)
    ops = {
        "foreground": int(binary.sum()),
        "dots": len(dots),
        "clusters": clustering.n_clusters,
    }

    prior = state.rls if cfg.temporal else None
    model, fitted = None, False
    try:
        model, rls = fit_parallel(left, right, prior, cfg.forgetting, cfg.ridge)
        if model.c_left > model.c_right:
            fitted = True
            state.model = model
            if cfg.temporal:
                state.rls = rls
        else:
            model = None
    except (InsufficientData, IllConditioned):
        model = None
    if model is None and cfg.temporal:
        model = state.model

    kappa_raw = kappa_hat = math.nan
    path = None
    if model is not None:
        path = path_polynomial(middle_line(model), cfg.u_s, cfg.u_f, cfg.anchored_path)
        kappa_raw = world_curvature(curvature(path, cfg.u_s, cfg.curvature_formula), cfg.beta)
        if cfg.temporal:
            state.window.push(kappa_raw)
            kappa_hat = kalman_estimate(state.window, cfg.kalman_q, cfg.kalman_r)
        else:
            kappa_hat = kappa_raw

    delta_px = delta_m = None
    try:
        est = lateral_offset(roi_centroids(binary, cfg.n_min), cfg.alpha)
        delta_px = est.delta
        delta_m = est.delta * state.meters_per_px
    except MissingCentroid:
        pass

    result = FrameResult(
        frame_idx=idx,
        kappa_raw=kappa_raw,
        kappa_hat=kappa_hat,
        delta_px=delta_px,
        delta_m=delta_m,
        kappa_avail=model is not None,
        delta_avail=delta_m is not None,
        lane_model=model,
        path=path,
        fitted=fitted,
        ops=ops,
    )
    if cfg.render_overlay and model is not None:
        result.overlay = render_overlay(result, h, cfg, base=avg)
    return result


class Session:
    """Convenience wrapper holding the homography, config and state."""

    def __init__(self, h: Homography, cfg: PipelineConfig = None):
        if h is None:
            raise NotCalibrated("a session needs a homography")
        self.h = h
        self.cfg = (cfg or PipelineConfig()).validate()
        self.state = SessionState.fresh(self.cfg)

    def process(self, mask) -> FrameResult:
        return process_frame(mask, self.h, self.cfg, self.state)


# ------------------------------------------------------------------ overlay


def overlay_curves(result: FrameResult, h: Homography, cfg: PipelineConfig = PipelineConfig(), step=0.5):
    """Pixel polylines for the fitted lines and the path, keyed by name."""
    if result.lane_model is None:
        raise NoLaneModel("frame has no lane model to draw")
    m = result.lane_model
    path = result.path or path_polynomial(middle_line(m), cfg.u_s, cfg.u_f, cfg.anchored_path)
    u = np.arange(cfg.u_s, cfg.u_f + 0.5 * step, step)
    out = {}
    for name, f in (("left", m.left()), ("right", m.right()), ("path", path)):
        px, ok = ipm_many(h, np.column_stack([u, f(u)]))
        out[name] = px[ok]
    return out


def _draw_polyline(img, pts, color):
    hgt, wid = img.shape[:2]
    if len(pts) == 0:
        return
    segs = [pts[:1]]
    for p, q in zip(pts[:-1], pts[1:]):
        n = int(max(abs(q[0] - p[0]), abs(q[1] - p[1]))) + 1
        t = np.linspace(0.0, 1.0, n + 1)[1:, None]
        segs.append(p + t * (q - p))
    allp = np.rint(np.concatenate(segs)).astype(np.int64)
    ok = (allp[:, 0] >= 0) & (allp[:, 0] < wid) & (allp[:, 1] >= 0) & (allp[:, 1] < hgt)
    allp = allp[ok]
    img[allp[:, 1], allp[:, 0]] = color


def render_overlay(result: FrameResult, h: Homography, cfg: PipelineConfig = PipelineConfig(), base=None):
    """RGB camera-view image with lane lines in blue and the driving path in green."""
    curves = overlay_curves(result, h, cfg)
    img = np.zeros((480, 640, 3), np.uint8)
    if base is not None:
        g = np.clip(np.rint(np.asarray(base) * 255.0), 0, 255).astype(np.uint8)
        img[...] = g[..., None]
    _draw_polyline(img, curves["left"], LANE_BLUE)
    _draw_polyline(img, curves["right"], LANE_BLUE)
    _draw_polyline(img, curves["path"], PATH_GREEN)
    return img


def config_from_dict(d: dict) -> PipelineConfig:
    names = {f.name for f in fields(PipelineConfig)}
    return replace(PipelineConfig(), **{k: v for k, v in d.items() if k in names})
