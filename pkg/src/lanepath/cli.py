"""``lanepath`` command line: config handling and the five subcommands.

The config file is JSON with optional sections ``pipeline``, ``cluster``,
``camera``, ``track``, ``render``, ``sim``, ``eval`` and ``arch``. Any key
can be overridden from the command line with ``--section.key value``.
"""
import argparse
import copy
import csv
import glob
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace


from . import evalkit, netarch
from .errors import ConfigError, LanePathError, ParseError, ValidationError
from .imagekit import read_pgm, write_pgm, write_ppm
from .pipeline import PipelineConfig, Session, render_overlay
from .simworld import (
    MAX_ABS_CURVATURE,
    FrameRecord,
    RenderOptions,
    SimOptions,
    TrackSpec,
    benchmark_track_spec,
    build_track,
    circle_track_spec,
    periodic_occluders,
    run_dynamic,
    run_static,
)
from .viewgeom import CameraModel, homography_from_camera, load_calibration

log = logging.getLogger("lanepath")

EXIT_OK, EXIT_RUN_FAILURE, EXIT_CONFIG = 0, 1, 2


# ------------------------------------------------------------------ schema


def _pos(v):
    return None if v > 0 else "must be > 0"


def _nonneg(v):
    return None if v >= 0 else "must be >= 0"


def _unit_open(v):
    return None if 0 < v < 1 else "must be in (0, 1)"


def _unit_closed(v):
    return None if 0 <= v <= 1 else "must be in [0, 1]"


def _finite(v):
    return None if math.isfinite(v) else "must be finite"


def _one_of(*opts):
    def check(v):
        return None if v in opts else "must be one of " + ", ".join(repr(o) for o in opts)
    return check


def _at_least_one(v):
    return None if v >= 1 else "must be >= 1"


def _pitch(v):
    return None if 0 < v < math.pi / 2 else "must be in (0, pi/2)"


def _row(v):
    return None if 0 <= v < 480 else "must be a row inside the 480-row image"


def _speed(v):
    return None if 0 < v <= 70 else "must be in (0, 70]"


def _hw(v):
    if not (isinstance(v, list) and len(v) == 2 and all(isinstance(x, int) and not isinstance(x, bool) for x in v)):
        return "must be [width, height] integers"
    return None if all(x > 0 and x % 16 == 0 for x in v) else "sides must be positive multiples of 16"


def _rect(v):
    if not (isinstance(v, list) and len(v) == 4 and all(isinstance(x, int) and not isinstance(x, bool) for x in v)):
        return "must be [x, y, w, h] integers"
    return None if v[2] > 0 and v[3] > 0 else "width and height must be > 0"


def _optional_pos(v):
    return None if v is None or v > 0 else "must be > 0 or null"


def _segments(v):
    if v is None:
        return None
    if not isinstance(v, list) or not v:
        return "must be a non-empty list of [length, curvature(, blend)]"
    for i, seg in enumerate(v):
        if not isinstance(seg, list) or len(seg) not in (2, 3):
            return f"entry {i} must be [length, curvature] or [length, curvature, blend]"
        if not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in seg):
            return f"entry {i} must hold numbers"
    return None


# key -> (default, type, check); type "float" accepts ints
SCHEMA = {
    "pipeline": {
        "threshold": (0.5, "float", _unit_open),
        "alpha": (0.6, "float", _finite),
        "beta": (1.0, "float", _pos),
        "u_s": (5.0, "float", _nonneg),
        "u_f": (30.0, "float", _pos),
        "forgetting": (0.9, "float", lambda v: None if 0 < v <= 1 else "must be in (0, 1]"),
        "ridge": (1e-6, "float", _nonneg),
        "kalman_q": (1e-4, "float", _nonneg),
        "kalman_r": (1e-2, "float", _pos),
        "n_min": (10, "int", _at_least_one),
        "anchored_path": (False, "bool", None),
        "curvature_formula": ("standard", "str", _one_of("standard", "unsquared")),
        "mask_frames": (5, "int", _at_least_one),
        "kalman_window": (15, "int", _at_least_one),
        "block": (11, "int", _at_least_one),
        "roi_row": (340.0, "float", _row),
        "temporal": (True, "bool", None),
    },
    "cluster": {
        "eps": (8.0, "float", _pos),
        "min_pts": (5, "int", _at_least_one),
        "min_size": (12, "int", _at_least_one),
    },
    "camera": {
        "height": (1.2, "float", _pos),
        "pitch": (0.04, "float", _pitch),
        "focal": (500.0, "float", _pos),
        "cx": (320.0, "float", _finite),
        "cy": (240.0, "float", _finite),
        "calibration": (None, "path", None),
    },
    "track": {
        "preset": ("benchmark", "str", _one_of("benchmark", "circle", "custom")),
        "radius": (100.0, "float", _pos),
        "length": (None, "optfloat", _optional_pos),
        "segments": (None, "any", _segments),
        "blend": (0.0, "float", _nonneg),
        "lane_width": (3.5, "float", _pos),
    },
    "render": {
        "line_width": (0.12, "float", _pos),
        "pixel_noise_sd": (0.0, "float", _nonneg),
        "dropout_rate": (0.0, "float", _unit_closed),
        "occlusion_fraction": (0.0, "float", _unit_closed),
        "occlusion_block": (10, "int", _at_least_one),
        "occlusion_rect": ([0, 330, 640, 21], "any", _rect),
        "max_ahead": (60.0, "float", _pos),
        "sample_step": (0.25, "float", _pos),
    },
    "sim": {
        "speed_kmh": (50.0, "float", _speed),
        "frame_rate": (20.0, "float", _pos),
        "wheelbase": (2.7, "float", _pos),
        "k_d": (0.8, "float", _finite),
        "steer_limit": (0.5, "float", _pos),
        "perception": ("pipeline", "str", _one_of("pipeline", "oracle")),
        "duration": (None, "optfloat", _optional_pos),
    },
    "eval": {
        "n_frames": (200, "int", _at_least_one),
        "seed": (0, "int", None),
        "kappa_source": ("filtered", "str", _one_of("filtered", "raw")),
        "overlay_every": (0, "int", _nonneg),
        "dump_masks": (False, "bool", None),
    },
    "arch": {
        "input_hw": (list(netarch.DOCUMENTED_HW), "any", _hw),
        "upconv": ("strided", "str", _one_of("strided", "per_output")),
    },
}

_PIPELINE_FIELDS = {"min_size": "min_cluster_size"}


def _coerce(path, value, kind):
    bad = ValidationError(path, f"expected {kind.replace('opt', 'optional ')}, got {type(value).__name__}")
    if kind in ("float", "optfloat"):
        if value is None and kind == "optfloat":
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise bad
        return float(value)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise bad
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise bad
        return value
    if kind == "path":
        if value is not None and not isinstance(value, str):
            raise bad
        return value
    return copy.deepcopy(value)


@dataclass
class RunConfig:
    """Validated, fully defaulted configuration; ``values[section][key]``."""

    values: dict

    def __getitem__(self, section):
        return self.values[section]

    def to_dict(self) -> dict:
        return copy.deepcopy(self.values)

    def pipeline_config(self) -> PipelineConfig:
        p, c = self.values["pipeline"], self.values["cluster"]
        kw = dict(p)
        kw.update({_PIPELINE_FIELDS.get(k, k): v for k, v in c.items()})
        return PipelineConfig(**kw)

    def camera(self) -> CameraModel:
        c = self.values["camera"]
        return CameraModel(c["height"], c["pitch"], c["focal"], c["cx"], c["cy"])

    def homography(self):
        path = self.values["camera"]["calibration"]
        if path:
            return load_calibration(path)[0]
        return homography_from_camera(self.camera())

    def track_spec(self) -> TrackSpec:
        t = self.values["track"]
        if t["preset"] == "benchmark":
            return benchmark_track_spec()
        if t["preset"] == "circle":
            return circle_track_spec(t["radius"], t["length"], t["lane_width"])
        segs = tuple(tuple(float(x) for x in s) for s in t["segments"])
        return TrackSpec(segs, t["blend"], t["lane_width"])

    def sim_options(self) -> SimOptions:
        s = self.values["sim"]
        return SimOptions(s["speed_kmh"], s["frame_rate"], s["wheelbase"], s["k_d"], s["steer_limit"],
                          s["perception"])

    def expected_frames(self, mode) -> int:
        if mode == "static":
            return self.values["eval"]["n_frames"]
        s = self.values["sim"]
        if s["duration"] is not None:
            return int(round(s["duration"] * s["frame_rate"]))
        step = s["speed_kmh"] / 3.6 / s["frame_rate"]
        return int(math.ceil(self.track_spec().total_length / step)) + 1

    def render_options(self, mode) -> RenderOptions:
        r = self.values["render"]
        occ = ()
        if r["occlusion_fraction"] > 0:
            occ = periodic_occluders(self.expected_frames(mode), r["occlusion_fraction"], r["occlusion_block"],
                                     tuple(r["occlusion_rect"]))
        return RenderOptions(r["line_width"], r["pixel_noise_sd"], r["dropout_rate"], occ,
                             self.values["eval"]["seed"], r["max_ahead"], r["sample_step"])


def parse_config_dict(doc) -> RunConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ParseError("config", "top level must be an object")
    values = {}
    for section, keys in SCHEMA.items():
        given = doc.get(section, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            raise ValidationError(section, "must be an object")
        for k in given:
            if k not in keys:
                raise ValidationError(f"{section}.{k}", "unknown key")
        sec = {}
        for k, (default, kind, check) in keys.items():
            path = f"{section}.{k}"
            v = _coerce(path, given[k], kind) if k in given else copy.deepcopy(default)
            if check is not None and v is not None:
                reason = check(v)
                if reason:
                    raise ValidationError(path, reason)
            sec[k] = v
        values[section] = sec
    for section in doc:
        if section not in SCHEMA:
            raise ValidationError(section, "unknown section")
    cfg = RunConfig(values)
    _cross_validate(cfg)
    return cfg


def _cross_validate(cfg: RunConfig):
    p = cfg["pipeline"]
    if not p["u_f"] > p["u_s"]:
        raise ValidationError("pipeline.u_f", "must exceed pipeline.u_s")
    t = cfg["track"]
    if t["preset"] == "custom" and t["segments"] is None:
        raise ValidationError("track.segments", "required when track.preset is 'custom'")
    if t["preset"] == "circle" and 1.0 / t["radius"] > MAX_ABS_CURVATURE:
        raise ValidationError("track.radius", f"curvature 1/radius must be <= {MAX_ABS_CURVATURE}")
    if t["preset"] == "custom":
        try:
            cfg.track_spec().validate()
        except ValueError as exc:
            raise ValidationError("track.segments", str(exc)) from None
    try:
        cfg.pipeline_config().validate()
    except ValueError as exc:
        name, reason = exc.args if len(exc.args) == 2 else ("?", str(exc))
        section = "cluster" if name in ("eps", "min_pts", "min_cluster_size") else "pipeline"
        key = "min_size" if name == "min_cluster_size" else name
        raise ValidationError(f"{section}.{key}", reason) from None


def parse_config(path) -> RunConfig:
    if path is None:
        return parse_config_dict({})
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(str(path), exc.strerror or str(exc)) from None
    if not text.strip():
        return parse_config_dict({})
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}", exc.msg) from None
    return parse_config_dict(doc)


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def apply_overrides(doc: dict, overrides) -> dict:
    """``overrides`` holds ``("section.key", raw_text)`` pairs; values parse as JSON when they can."""
    doc = copy.deepcopy(doc or {})
    for dotted, raw in overrides:
        parts = dotted.split(".")
        if len(parts) != 2 or not all(parts):
            raise ParseError(f"--{dotted}", "flag must look like --section.key")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        section = doc.setdefault(parts[0], {})
        if not isinstance(section, dict):
            raise ValidationError(parts[0], "must be an object")
        section[parts[1]] = value
    return doc


def _split_overrides(extra):
    pairs, i = [], 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or "." not in tok:
            raise ParseError(tok, "unrecognised argument")
        key = tok[2:]
        if "=" in key:
            key, raw = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ParseError(tok, "missing value")
            raw = extra[i + 1]
            i += 2
        pairs.append((key, raw))
    return pairs


def load_config(path, overrides=()) -> RunConfig:
    base = {}
    if path is not None:
        base = json.loads(emit_config(parse_config(path)))
    return parse_config_dict(apply_overrides(base, overrides))


# ------------------------------------------------------------------ runs


def _write_config(out, cfg):
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "config.json"), "w", encoding="utf-8") as fh:
        fh.write(emit_config(cfg))


class _Capture:
    """Mask hook: optional PGM dump plus a copy of every overlay frame."""

    def __init__(self, out, dump, every):
        self.dir = os.path.join(out, "masks") if dump else None
        self.every = every
        self.kept = {}
        if self.dir:
            os.makedirs(self.dir, exist_ok=True)

    def __call__(self, k, mask):
        if self.dir:
            write_pgm(os.path.join(self.dir, f"frame_{k:06d}.pgm"), mask)
        if self.every and k % self.every == 0:
            self.kept[k] = mask.copy()


def _finish(out, cfg, records, mode, capture, h, extra, partial):
    pcfg = cfg.pipeline_config()
    table = evalkit.frame_table(records)
    report = evalkit.evaluate_table(table, mode, cfg["eval"]["kappa_source"]) if records else None
    paths = evalkit.export_report(out, report, table, pcfg.block, partial, extra)
    if capture is not None and capture.dir:
        with open(os.path.join(capture.dir, "truth.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["frame_idx", "kappa_gt", "delta_gt"])
            for r in records:
                w.writerow([r.result.frame_idx, repr(float(r.kappa_gt)), repr(float(r.delta_gt))])
    if capture is not None and capture.kept:
        odir = os.path.join(out, "overlays")
        os.makedirs(odir, exist_ok=True)
        by_idx = {r.result.frame_idx: r.result for r in records}
        for k, mask in sorted(capture.kept.items()):
            res = by_idx.get(k)
            if res is not None and res.lane_model is not None:
                write_ppm(os.path.join(odir, f"frame_{k:06d}.ppm"), render_overlay(res, h, pcfg, base=mask))
    return report, paths


def run_simulate(cfg: RunConfig, out) -> int:
    _write_config(out, cfg)
    pcfg = cfg.pipeline_config()
    track = build_track(cfg.track_spec())
    cam = cfg.camera()
    ev = cfg["eval"]
    capture = _Capture(out, ev["dump_masks"], ev["overlay_every"])
    t0 = time.perf_counter()
    res = run_dynamic(track, cam, cfg.render_options("dynamic"), pcfg, cfg["sim"]["duration"],
                      cfg.sim_options(), on_mask=capture)
    log.info("simulate: %d frames in %.1f s", len(res.records), time.perf_counter() - t0)
    extra = {
        "outcome": res.outcome,
        "message": res.message,
        "track_length_m": track.total_length,
        "s_end_m": res.records[-1].s if res.records else 0.0,
        "max_abs_d_m": res.max_abs_d(),
    }
    report, _ = _finish(out, cfg, res.records, "dynamic", capture, homography_from_camera(cam), extra,
                        partial=res.off_lane)
    if res.off_lane:
        print(f"simulate: OFF LANE - {res.message}; partial results in {out}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    _print_report(report)
    return EXIT_OK


def _print_report(report):
    if report is None:
        return
    for k, v in report.to_dict().items():
        print(f"{k}: {v}")


def _read_truth(path):
    truth = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            truth[int(row["frame_idx"])] = (float(row["kappa_gt"]), float(row["delta_gt"]))
    return truth


def run_replay(cfg: RunConfig, out, masks_dir=None) -> int:
    _write_config(out, cfg)
    pcfg = cfg.pipeline_config()
    ev = cfg["eval"]
    capture = None
    if masks_dir:
        files = sorted(glob.glob(os.path.join(masks_dir, "frame_*.pgm")))
        if not files:
            print(f"replay: no frame_*.pgm files in {masks_dir}", file=sys.stderr)
            return EXIT_RUN_FAILURE
        tpath = os.path.join(masks_dir, "truth.csv")
        truth = _read_truth(tpath) if os.path.exists(tpath) else {}
        h = cfg.homography()
        session = Session(h, pcfg)
        records = []
        kept = {}
        for k, f in enumerate(files):
            mask = read_pgm(f)
            res = session.process(mask)
            idx = int(os.path.basename(f)[6:-4])
            kgt, dgt = truth.get(idx, (math.nan, math.nan))
            records.append(FrameRecord(res, kgt, dgt, math.nan, math.nan, math.nan))
            if ev["overlay_every"] and k % ev["overlay_every"] == 0:
                kept[k] = mask
        capture = _Capture(out, False, ev["overlay_every"])
        capture.kept = kept
        extra = {"source": os.path.abspath(masks_dir)}
    else:
        track = build_track(cfg.track_spec())
        cam = cfg.camera()
        h = homography_from_camera(cam)
        capture = _Capture(out, ev["dump_masks"], ev["overlay_every"])
        res = run_static(track, cam, cfg.render_options("static"), pcfg, ev["n_frames"], cfg.sim_options(),
                         on_mask=capture)
        records = res.records
        extra = {"source": "render"}
    report, _ = _finish(out, cfg, records, "static", capture, h, extra, partial=False)
    _print_report(report)
    return EXIT_OK


def run_fit(cfg: RunConfig, out, mask_path) -> int:
    _write_config(out, cfg)
    pcfg = cfg.pipeline_config()
    h = cfg.homography()
    mask = read_pgm(mask_path)
    single = replace(pcfg, temporal=False)
    res = Session(h, single).process(mask)
    doc = {
        "mask": os.path.abspath(mask_path),
        "kappa": None if not res.kappa_avail else res.kappa_hat,
        "delta_px": res.delta_px,
        "delta_m": res.delta_m,
        "kappa_avail": res.kappa_avail,
        "delta_avail": res.delta_avail,
        "lane_model": None,
        "path": None,
        "ops": res.ops,
    }
    if res.lane_model is not None:
        m = res.lane_model
        doc["lane_model"] = {"a": m.a, "b": m.b, "c_left": m.c_left, "c_right": m.c_right,
                             "n_points_used": m.n_points_used, "residual_rms": m.residual_rms}
        doc["path"] = {"a": res.path.a, "b": res.path.b, "c": res.path.c}
        odir = os.path.join(out, "overlays")
        os.makedirs(odir, exist_ok=True)
        write_ppm(os.path.join(odir, "fit_overlay.ppm"), render_overlay(res, h, single, base=mask))
    with open(os.path.join(out, "fit_result.json"), "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(doc, indent=2, sort_keys=True))
    if res.lane_model is None:
        print("fit: no lane model could be fitted to this mask", file=sys.stderr)
        return EXIT_RUN_FAILURE
    return EXIT_OK


def run_analyze_arch(cfg: RunConfig, out, sweep=False) -> int:
    _write_config(out, cfg)
    hw = tuple(cfg["arch"]["input_hw"])
    upconv = cfg["arch"]["upconv"]
    t0 = time.perf_counter()
    netarch.count_macs(netarch.unet_graph(), hw, upconv).write_csv(os.path.join(out, "arch_unet.csv"))
    netarch.count_macs(netarch.dsunet_graph(), hw, upconv).write_csv(os.path.join(out, "arch_dsunet.csv"))
    summ = netarch.summary(hw, upconv)
    with open(os.path.join(out, "arch_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summ, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if sweep:
        rows = netarch.resolution_sweep(upconv=upconv)
        with open(os.path.join(out, "arch_sweep.csv"), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["width", "height", "unet_macs", "dsunet_macs", "unet_err", "dsunet_err", "worst"])
            for r in rows:
                w.writerow([r["w"], r["h"]] + ["" if r[c] is None else repr(float(r[c]))
                                               for c in ("unet_macs", "dsunet_macs", "unet_err", "dsunet_err", "worst")])
    print(f"input {hw[0]}x{hw[1]} (upconv: {upconv})")
    print(f"UNet   params {summ['unet_params'] / 1e6:8.3f} M   MACs {summ['unet_macs'] / 1e9:7.2f} B   "
          f"conv layers {summ['unet_conv_layers']}")
    print(f"DSUNet params {summ['dsunet_params'] / 1e6:8.3f} M   MACs {summ['dsunet_macs'] / 1e9:7.2f} B   "
          f"conv layers {summ['dsunet_conv_layers']}")
    print(f"ratios params {summ['param_ratio']:.3f}x   MACs {summ['mac_ratio']:.3f}x")
    log.info("analyze-arch took %.3f s", time.perf_counter() - t0)
    return EXIT_OK


def run_export_plots(cfg: RunConfig, out, frames_path) -> int:
    t = evalkit.read_frames_csv(frames_path)
    os.makedirs(out, exist_ok=True)
    rows = evalkit.blocked_series(t, cfg["pipeline"]["block"])
    dest = os.path.join(out, "series_blocked.csv")
    evalkit.write_blocked_csv(dest, rows)
    print(f"{len(rows)} blocks written to {dest}")
    return EXIT_OK


# ------------------------------------------------------------------ sweep


def _sweep_grid(specs):
    axes = []
    for spec in specs:
        if "=" not in spec:
            raise ParseError(f"--sweep {spec}", "expected section.key=v1,v2,...")
        key, vals = spec.split("=", 1)
        axes.append([(key, v) for v in vals.split(",") if v != ""])
    return list(itertools.product(*axes))


def run_sweep(doc, specs, out, workers) -> int:
    grid = _sweep_grid(specs)
    cfgs = []
    for combo in grid:
        cfgs.append((combo, parse_config_dict(apply_overrides(doc, combo))))

    def one(i_combo):
        i, (combo, cfg) = i_combo
        tag = "_".join(f"{k.split('.')[-1]}={v}" for k, v in combo)
        sub = os.path.join(out, f"sweep_{i:03d}_{tag}")
        code = run_simulate(cfg, sub)
        return combo, sub, code

    with ThreadPoolExecutor(max_workers=workers or os.cpu_count() or 1) as pool:
        results = list(pool.map(one, enumerate(cfgs)))
    with open(os.path.join(out, "sweep_summary.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "overrides", "exit_code", "outcome", "kappa_dmae", "delta_dmae", "delta_avail_pct"])
        for combo, sub, code in results:
            s = evalkit.read_summary(os.path.join(sub, "run_summary.json"))
            w.writerow([os.path.basename(sub), " ".join(f"{k}={v}" for k, v in combo), code, s.get("outcome"),
                        s.get("kappa_dmae"), s.get("delta_dmae"), s.get("delta_avail_pct")])
    return max((code for _, _, code in results), default=EXIT_OK)


# ------------------------------------------------------------------ entry


def _setup_logging():
    name = os.environ.get("LANEPATH_LOG", "WARNING").strip().upper()
    level = int(name) if name.isdigit() else logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def build_parser():
    ap = argparse.ArgumentParser(prog="lanepath", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--out", default="./out", help="output directory (default ./out)")
        p.add_argument("--print-config", action="store_true", help="print the effective config and exit")

    p = sub.add_parser("simulate", help="closed-loop run on a synthetic track")
    common(p)
    p.add_argument("--sweep", action="append", default=[], metavar="KEY=V1,V2",
                   help="run the cartesian grid of these overrides in parallel")
    p.add_argument("--workers", type=int, default=0, help="threads for --sweep (default: CPU count)")
    p = sub.add_parser("replay", help="static evaluation over recorded or rendered masks")
    common(p)
    p.add_argument("--masks", help="directory of frame_%%06d.pgm files (optional truth.csv)")
    p = sub.add_parser("fit", help="run the pipeline on one mask and draw the overlay")
    common(p)
    p.add_argument("--mask", required=True, help="PGM mask file")
    p.add_argument("--calibration", help="calibration JSON (overrides the camera section)")
    p = sub.add_parser("analyze-arch", help="parameter and MAC counts for UNet and DSUNet")
    common(p)
    p.add_argument("--input-hw", help="input resolution WxH")
    p.add_argument("--sweep", action="store_true", help="also write the resolution sweep")
    p = sub.add_parser("export-plots", help="block-averaged series from a frames.csv")
    common(p)
    p.add_argument("--frames", help="frames.csv to read (default OUT/frames.csv)")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    try:
        overrides = _split_overrides(extra)
        if getattr(args, "input_hw", None):
            try:
                w, h = (int(x) for x in args.input_hw.lower().split("x"))
            except ValueError:
                raise ValidationError("arch.input_hw", "expected WxH, e.g. 288x288") from None
            overrides.append(("arch.input_hw", json.dumps([w, h])))
        if getattr(args, "calibration", None):
            overrides.append(("camera.calibration", json.dumps(args.calibration)))
        base = {}
        if args.config:
            base = json.loads(emit_config(parse_config(args.config)))
        doc = apply_overrides(base, overrides)
        cfg = parse_config_dict(doc)
        if args.command == "simulate" and args.sweep:
            for key, raw in _sweep_grid(args.sweep)[0]:
                parse_config_dict(apply_overrides(doc, [(key, raw)]))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(emit_config(cfg))
        return EXIT_OK
    try:
        if args.command == "simulate":
            if args.sweep:
                return run_sweep(doc, args.sweep, args.out, args.workers)
            return run_simulate(cfg, args.out)
        if args.command == "replay":
            return run_replay(cfg, args.out, args.masks)
        if args.command == "fit":
            return run_fit(cfg, args.out, args.mask)
        if args.command == "analyze-arch":
            return run_analyze_arch(cfg, args.out, args.sweep)
        if args.command == "export-plots":
            return run_export_plots(cfg, args.out, args.frames or os.path.join(args.out, "frames.csv"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LanePathError, OSError, ValueError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUN_FAILURE
    parser.error(f"unknown command {args.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
