"""Error and availability metrics over a run, and their file exports."""
import csv
import json
import math
import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import EmptyInput, NoAvailableFrames

FRAME_COLUMNS = (
    "frame_idx", "kappa_hat", "kappa_gt", "delta_m", "delta_gt", "delta_avail",
    "kappa_raw", "kappa_avail", "s", "d", "psi",
)
BLOCK_COLUMNS = ("block", "first_frame", "n", "partial", "kappa_hat", "kappa_gt", "delta_m", "delta_gt")


def mae(estimates, truths, avail) -> float:
    """Mean absolute error over frames flagged available."""
    est = np.asarray(estimates, dtype=np.float64)
    tru = np.asarray(truths, dtype=np.float64)
    ok = np.asarray(avail, dtype=bool)
    if not (est.shape == tru.shape == ok.shape):
        raise ValueError("estimates, truths and avail must have equal lengths")
    if not ok.any():
        raise NoAvailableFrames("no available frames to average over")
    return float(np.mean(np.abs(est[ok] - tru[ok])))


def avail_pct(avail) -> float:
    ok = np.asarray(avail, dtype=bool)
    if ok.size == 0:
        raise EmptyInput("availability list is empty")
    return 100.0 * float(ok.sum()) / ok.size


@dataclass
class EvalReport:
    mode: str
    n_frames: int
    kappa_mae: Optional[float]
    delta_mae: Optional[float]
    kappa_avail_pct: float
    delta_avail_pct: float
    kappa_source: str = "filtered"

    @property
    def prefix(self):
        return "s" if self.mode == "static" else "d"

    def to_dict(self) -> dict:
        p = self.prefix
        return {
            "mode": self.mode,
            "n_frames": self.n_frames,
            f"kappa_{p}mae": self.kappa_mae,
            f"delta_{p}mae": self.delta_mae,
            "kappa_avail_pct": self.kappa_avail_pct,
            "delta_avail_pct": self.delta_avail_pct,
            "kappa_source": self.kappa_source,
        }

    @classmethod
    def from_dict(cls, d) -> "EvalReport":
        p = "s" if d["mode"] == "static" else "d"
        return cls(d["mode"], int(d["n_frames"]), d[f"kappa_{p}mae"], d[f"delta_{p}mae"],
                   d["kappa_avail_pct"], d["delta_avail_pct"], d.get("kappa_source", "filtered"))


# ------------------------------------------------------------------ frame table


def frame_table(records) -> dict:
    """Column arrays from simulator records; unavailable estimates are NaN."""
    n = len(records)
    t = {c: np.full(n, np.nan) for c in FRAME_COLUMNS}
    for i, rec in enumerate(records):
        r = rec.result
        t["frame_idx"][i] = r.frame_idx
        t["kappa_hat"][i] = r.kappa_hat if r.kappa_avail else math.nan
        t["kappa_raw"][i] = r.kappa_raw if r.kappa_avail else math.nan
        t["kappa_gt"][i] = rec.kappa_gt
        t["delta_m"][i] = r.delta_m if r.delta_avail else math.nan
        t["delta_gt"][i] = rec.delta_gt
        t["delta_avail"][i] = float(r.delta_avail)
        t["kappa_avail"][i] = float(r.kappa_avail)
        t["s"][i], t["d"][i], t["psi"][i] = rec.s, rec.d, rec.psi
    return t


def _maybe_mae(est, truth, avail):
    try:
        return mae(est, truth, avail)
    except NoAvailableFrames:
        return None


def evaluate_table(t: dict, mode: str, kappa_source: str = "filtered") -> EvalReport:
    if mode not in ("static", "dynamic"):
        raise ValueError(f"mode must be 'static' or 'dynamic', got {mode!r}")
    if kappa_source not in ("filtered", "raw"):
        raise ValueError(f"kappa_source must be 'filtered' or 'raw', got {kappa_source!r}")
    n = len(t["frame_idx"])
    if n == 0:
        raise EmptyInput("run has no frames")
    k_ok = t["kappa_avail"] > 0
    d_ok = t["delta_avail"] > 0
    k_est = t["kappa_hat"] if kappa_source == "filtered" else t["kappa_raw"]
    return EvalReport(
        mode=mode,
        n_frames=n,
        # frames without ground truth (replayed masks) count for availability only
        kappa_mae=_maybe_mae(k_est, t["kappa_gt"], k_ok & np.isfinite(t["kappa_gt"])),
        delta_mae=_maybe_mae(t["delta_m"], t["delta_gt"], d_ok & np.isfinite(t["delta_gt"])),
        kappa_avail_pct=avail_pct(k_ok),
        delta_avail_pct=avail_pct(d_ok),
        kappa_source=kappa_source,
    )


def evaluate(records, mode: str, kappa_source: str = "filtered") -> EvalReport:
    return evaluate_table(frame_table(records), mode, kappa_source)


# ------------------------------------------------------------------ files


def _fmt(v):
    if isinstance(v, float) and math.isnan(v):
        return ""
    return repr(float(v))


def write_frames_csv(path, t: dict):
    n = len(t["frame_idx"])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRAME_COLUMNS)
        for i in range(n):
            row = []
            for c in FRAME_COLUMNS:
                v = float(t[c][i])
                if c in ("frame_idx", "delta_avail", "kappa_avail"):
                    row.append(str(int(v)))
                else:
                    row.append(_fmt(v))
            w.writerow(row)


def read_frames_csv(path) -> dict:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in FRAME_COLUMNS[:6] if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        rows = list(reader)
    cols = [c for c in FRAME_COLUMNS if c in reader.fieldnames]
    t = {c: np.array([float(r[c]) if r[c] != "" else math.nan for r in rows]) for c in cols}
    if "kappa_avail" not in t:
        t["kappa_avail"] = np.isfinite(t["kappa_hat"]).astype(np.float64)
    if "kappa_raw" not in t:
        t["kappa_raw"] = t["kappa_hat"].copy()
    return t


def blocked_series(t: dict, block: int = 11) -> list:
    """Block means for plotting; unavailable frames are skipped inside a block."""
    if block < 1:
        raise ValueError("block must be >= 1")
    n = len(t["frame_idx"])
    out = []
    for b, start in enumerate(range(0, n, block)):
        sl = slice(start, min(start + block, n))
        row = {"block": b, "first_frame": int(t["frame_idx"][start]), "n": sl.stop - sl.start,
               "partial": int(sl.stop - sl.start < block)}
        for c in BLOCK_COLUMNS[4:]:
            vals = t[c][sl]
            vals = vals[np.isfinite(vals)]
            row[c] = float(vals.mean()) if vals.size else math.nan
        out.append(row)
    return out


def write_blocked_csv(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BLOCK_COLUMNS)
        for r in rows:
            w.writerow([r["block"], r["first_frame"], r["n"], r["partial"]] + [_fmt(r[c]) for c in BLOCK_COLUMNS[4:]])


def write_summary(path, report: Optional[EvalReport], partial: bool = False, extra: Optional[dict] = None):
    doc = {"partial": bool(partial)}
    if report is not None:
        doc.update(report.to_dict())
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_summary(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def export_report(out_dir, report: Optional[EvalReport], table: dict, block: int = 11,
                  partial: bool = False, extra: Optional[dict] = None) -> dict:
    """Write ``run_summary.json``, ``frames.csv`` and ``series_blocked.csv``; returns their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "summary": os.path.join(out_dir, "run_summary.json"),
        "frames": os.path.join(out_dir, "frames.csv"),
        "blocked": os.path.join(out_dir, "series_blocked.csv"),
    }
    write_frames_csv(paths["frames"], table)
    write_blocked_csv(paths["blocked"], blocked_series(table, block))
    write_summary(paths["summary"], report, partial, extra)
    return paths


def comparison_table(reports: dict) -> str:
    """Rows for curvature and offset, one ``MAE / Avail`` column per named config."""
    names = list(reports)
    if not names:
        raise EmptyInput("no reports to compare")
    mode = {r.mode for r in reports.values()}
    label = "sMAE" if mode == {"static"} else "dMAE" if mode == {"dynamic"} else "MAE"

    def cell(v, pct, digits):
        m = "-" if v is None else f"{v:.{digits}f}"
        return f"{m} / {pct:.2f}"

    header = [f"{label} / Avail(%)"] + names
    rows = [
        ["kappa (1/m)"] + [cell(reports[n].kappa_mae, reports[n].kappa_avail_pct, 6) for n in names],
        ["delta (m)"] + [cell(reports[n].delta_mae, reports[n].delta_avail_pct, 4) for n in names],
    ]
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = []
    for r in [header] + rows:
        lines.append(" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    lines.insert(1, "-+-".join("-" * w for w in widths))
    return "\n".join(lines)
