import csv
import json
import os
import subprocess
import sys

import pytest

from lanepath import cli
from lanepath.errors import ParseError, ValidationError
from lanepath.imagekit import read_ppm


def run(*argv):
    return cli.main([str(a) for a in argv])


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


# ------------------------------------------------------------------ config


def test_defaults_table():
    cfg = cli.parse_config_dict({})
    p = cfg.pipeline_config()
    table = {
        "alpha": 0.6, "kalman_q": 1e-4, "kalman_r": 1e-2, "mask_frames": 5, "kalman_window": 15,
        "block": 11, "threshold": 0.5, "eps": 8.0, "min_pts": 5, "forgetting": 0.9, "u_s": 5.0, "u_f": 30.0,
    }
    for name, want in table.items():
        assert getattr(p, name) == want, name


def test_empty_file_is_all_defaults(tmp_path):
    f = tmp_path / "c.json"
    f.write_text("")
    assert cli.parse_config(f) == cli.parse_config_dict({})
    assert cli.parse_config(write_json(tmp_path / "d.json", {})) == cli.parse_config_dict({})


def test_alpha_is_a_gain():
    assert cli.parse_config_dict({"pipeline": {"alpha": 1.5}}).pipeline_config().alpha == 1.5


def test_negative_eps_rejected():
    with pytest.raises(ValidationError) as exc:
        cli.parse_config_dict({"cluster": {"eps": -1}})
    assert (exc.value.key, exc.value.reason) == ("cluster.eps", "must be > 0")


@pytest.mark.parametrize("doc,key", [
    ({"pipeline": {"nope": 1}}, "pipeline.nope"),
    ({"bogus": {}}, "bogus"),
    ({"pipeline": {"mask_frames": 2.5}}, "pipeline.mask_frames"),
    ({"pipeline": {"u_s": 40.0}}, "pipeline.u_f"),
    ({"render": {"dropout_rate": 2}}, "render.dropout_rate"),
    ({"sim": {"speed_kmh": 0}}, "sim.speed_kmh"),
    ({"track": {"preset": "custom"}}, "track.segments"),
    ({"track": {"preset": "custom", "segments": [[10, 0.5]]}}, "track.segments"),
    ({"arch": {"input_hw": [160, 120]}}, "arch.input_hw"),
])
def test_validation_names_key(doc, key):
    with pytest.raises(ValidationError) as exc:
        cli.parse_config_dict(doc)
    assert exc.value.key == key


def test_parse_error_has_location(tmp_path):
    f = tmp_path / "bad.json"
    f.write_text('{\n  "pipeline": {"alpha": }\n}')
    with pytest.raises(ParseError) as exc:
        cli.parse_config(f)
    assert f"{f}:2:" in str(exc.value)


def test_round_trip(tmp_path):
    doc = {"pipeline": {"alpha": 0.7, "anchored_path": True}, "cluster": {"eps": 6},
           "track": {"preset": "custom", "segments": [[100, 0.0], [200, 0.01, 40]]},
           "render": {"dropout_rate": 0.1}, "arch": {"input_hw": [256, 256]}}
    cfg = cli.parse_config_dict(doc)
    f = tmp_path / "eff.json"
    f.write_text(cli.emit_config(cfg))
    back = cli.parse_config(f)
    assert back == cfg
    assert cli.emit_config(back) == cli.emit_config(cfg)


def test_overrides():
    doc = cli.apply_overrides({"cluster": {"eps": 4}}, [("cluster.eps", "6.5"), ("track.preset", "circle"),
                                                        ("pipeline.temporal", "false")])
    cfg = cli.parse_config_dict(doc)
    assert cfg["cluster"]["eps"] == 6.5 and cfg["track"]["preset"] == "circle"
    assert cfg["pipeline"]["temporal"] is False
    assert cli._split_overrides(["--a.b", "1", "--c.d=x"]) == [("a.b", "1"), ("c.d", "x")]
    with pytest.raises(ParseError):
        cli._split_overrides(["--a.b"])
    with pytest.raises(ParseError):
        cli.apply_overrides({}, [("nodot", "1")])


def test_print_config(capsys):
    assert run("replay", "--print-config", "--cluster.eps", "7") == 0
    assert json.loads(capsys.readouterr().out)["cluster"]["eps"] == 7.0


# ------------------------------------------------------------------ commands


def test_config_error_exit_code(tmp_path, capsys):
    assert run("replay", "--out", tmp_path, "--cluster.eps", "-1") == 2
    assert "cluster.eps" in capsys.readouterr().err
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run("analyze-arch", "--out", tmp_path, "--config", bad) == 2
    assert run("analyze-arch", "--out", tmp_path, "--input-hw", "160x120") == 2


def test_analyze_arch(tmp_path, capsys):
    assert run("analyze-arch", "--out", tmp_path, "--sweep") == 0
    assert "UNet" in capsys.readouterr().out
    summ = json.loads((tmp_path / "arch_summary.json").read_text())
    assert summ["unet_params"] == 31_042_434 and summ["dsunet_params"] == 6_013_121
    for name in ("arch_unet.csv", "arch_dsunet.csv", "arch_sweep.csv"):
        assert (tmp_path / name).stat().st_size > 0


def test_replay_masks_dir(tmp_path):
    rec = tmp_path / "rec"
    assert run("replay", "--out", rec, "--eval.n_frames", "100", "--eval.dump_masks", "true",
               "--track.preset", "circle", "--track.radius", "200") == 0
    masks = rec / "masks"
    assert len(list(masks.glob("frame_*.pgm"))) == 100
    assert (masks / "truth.csv").exists()
    out = tmp_path / "replayed"
    assert run("replay", "--out", out, "--masks", masks, "--eval.overlay_every", "25") == 0
    with open(out / "frames.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 100
    summ = json.loads((out / "run_summary.json").read_text())
    assert summ["partial"] is False
    assert summ["kappa_smae"] is not None and summ["delta_smae"] is not None
    # PGM storage quantises to 8 bits, so the replay only approximates the direct run
    direct = json.loads((rec / "run_summary.json").read_text())
    assert summ["kappa_smae"] == pytest.approx(direct["kappa_smae"], abs=5e-4)
    assert len(list((out / "overlays").glob("*.ppm"))) == 4
    assert (out / "series_blocked.csv").exists()


def test_replay_empty_dir(tmp_path):
    (tmp_path / "m").mkdir()
    assert run("replay", "--out", tmp_path / "o", "--masks", tmp_path / "m") == 1


def test_fit_and_overlay(tmp_path):
    rec = tmp_path / "rec"
    assert run("replay", "--out", rec, "--eval.n_frames", "1", "--eval.dump_masks", "true") == 0
    out = tmp_path / "fit"
    assert run("fit", "--out", out, "--mask", rec / "masks" / "frame_000000.pgm") == 0
    doc = json.loads((out / "fit_result.json").read_text())
    assert doc["kappa_avail"] and doc["lane_model"]["c_left"] > 0 > doc["lane_model"]["c_right"]
    img = read_ppm(out / "overlays" / "fit_overlay.ppm")
    assert img.shape == (480, 640, 3)


def test_fit_on_blank_mask(tmp_path):
    from lanepath.imagekit import write_pgm
    import numpy as np

    write_pgm(tmp_path / "blank.pgm", np.zeros((480, 640)))
    assert run("fit", "--out", tmp_path / "o", "--mask", tmp_path / "blank.pgm") == 1
    assert json.loads((tmp_path / "o" / "fit_result.json").read_text())["lane_model"] is None


def test_fit_with_calibration_file(tmp_path):
    from lanepath.viewgeom import CameraModel, homography_from_camera, save_calibration

    cal = tmp_path / "cal.json"
    save_calibration(cal, h=homography_from_camera(CameraModel()))
    rec = tmp_path / "rec"
    run("replay", "--out", rec, "--eval.n_frames", "1", "--eval.dump_masks", "true")
    assert run("fit", "--out", tmp_path / "o", "--mask", rec / "masks" / "frame_000000.pgm",
               "--calibration", cal) == 0


def test_export_plots(tmp_path):
    assert run("replay", "--out", tmp_path, "--eval.n_frames", "33") == 0
    os.remove(tmp_path / "series_blocked.csv")
    assert run("export-plots", "--out", tmp_path) == 0
    with open(tmp_path / "series_blocked.csv", newline="") as fh:
        assert len(list(csv.DictReader(fh))) == 3


def test_simulate_short(tmp_path):
    assert run("simulate", "--out", tmp_path, "--sim.duration", "2") == 0
    summ = json.loads((tmp_path / "run_summary.json").read_text())
    assert summ["outcome"] == "completed" and summ["partial"] is False
    assert summ["n_frames"] == 40
    assert json.loads((tmp_path / "config.json").read_text())["sim"]["duration"] == 2.0


def test_simulate_off_lane(tmp_path, capsys):
    # positive feedback on the offset drives the host out of the lane
    assert run("simulate", "--out", tmp_path, "--sim.k_d", "-8", "--sim.duration", "30") == 1
    assert "OFF LANE" in capsys.readouterr().err
    summ = json.loads((tmp_path / "run_summary.json").read_text())
    assert summ["partial"] is True and summ["outcome"] == "off_lane"
    with open(tmp_path / "frames.csv", newline="") as fh:
        n = len(list(csv.DictReader(fh)))
    assert 0 < n < 600


def test_simulate_sweep(tmp_path):
    assert run("simulate", "--out", tmp_path, "--sim.duration", "1", "--sim.perception", "oracle",
               "--sweep", "sim.speed_kmh=30,60", "--workers", "2") == 0
    with open(tmp_path / "sweep_summary.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["exit_code"] for r in rows] == ["0", "0"]


def test_log_env(tmp_path):
    env = dict(os.environ, LANEPATH_LOG="INFO")
    p = subprocess.run([sys.executable, "-m", "lanepath.cli", "analyze-arch", "--out", str(tmp_path)],
                       env=env, capture_output=True, text=True)
    assert p.returncode == 0
    assert "INFO lanepath" in p.stderr
    env["LANEPATH_LOG"] = "ERROR"
    p = subprocess.run([sys.executable, "-m", "lanepath.cli", "analyze-arch", "--out", str(tmp_path)],
                       env=env, capture_output=True, text=True)
    assert "INFO" not in p.stderr
