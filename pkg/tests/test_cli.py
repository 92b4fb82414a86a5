"""End-to-end command runs against files on disk."""

import json

import numpy as np
import pytest

from seglep.cli import main
from seglep.engine import EngineConfig
from seglep.raster import (RasterImage, SemanticMap, read_category_map,
                           read_label_map, read_ucm, write_image,
                           write_label_map, write_semantic_map)

from conftest import rand_image, rand_semmap, voronoi_labels
from seglep.raster import LabelMap


@pytest.fixture
def scene(tmp_path):
    """A small image + semantic map written to disk, ready for the CLI."""
    rng = np.random.default_rng(99)
    img = rand_image(rng, 6, 5)
    write_image(img, tmp_path / "img.ppm")
    write_semantic_map(rand_semmap(rng, 6, 5), tmp_path / "map.semmap")
    return tmp_path


def segment_args(scene, out, extra=()):
    return ["segment", "--image", str(scene / "img.ppm"),
            "--semmap", str(scene / "map.semmap"),
            "--out-dir", str(out), *extra]


# --- segment ----------------------------------------------------------------

def test_segment_writes_labels_and_summary(scene, capsys):
    out = scene / "out"
    assert main(segment_args(scene, out, ["--lambda", "0.4"])) == 0
    got = read_label_map(out / "labels.pgm")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["width"] == 6 and summary["height"] == 5
    assert summary["regions"] == got.n_regions
    assert summary["lambda"] == 0.4
    assert summary["events"] + summary["regions"] == 30
    assert sum(summary["group_sizes"].values()) >= got.n_regions
    assert "regions ->" in capsys.readouterr().out


def test_segment_lambda_zero_keeps_pixels(scene):
    out = scene / "out0"
    assert main(segment_args(scene, out, ["--lambda", "0"])) == 0
    got = read_label_map(out / "labels.pgm")
    assert got.n_regions == 30
    assert np.array_equal(np.sort(got.labels.ravel()), np.arange(30))


def test_segment_optional_outputs(scene):
    out = scene / "outs"
    args = segment_args(scene, out, ["--lambda", "0.5", "--emit-semantic",
                                     "--emit-overlay"])
    assert main(args) == 0
    ids, cats = read_category_map(out / "semantic.pgm")
    assert ids.shape == (5, 6)
    assert "background" in cats
    assert (out / "overlay.ppm").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["outputs"] == ["labels.pgm", "semantic.pgm", "overlay.ppm"]


def test_segment_missing_image_exits_two(scene, capsys):
    args = segment_args(scene, scene / "x")
    args[2] = str(scene / "absent.ppm")
    assert main(args) == 2
    assert "error:" in capsys.readouterr().err


def test_segment_missing_required_flag_exits_two(scene):
    with pytest.raises(SystemExit) as exc:
        main(["segment", "--image", str(scene / "img.ppm")])
    assert exc.value.code == 2


def test_segment_honors_config_file(scene):
    cfg_path = scene / "cfg.json"
    cfg_path.write_text(json.dumps(
        EngineConfig(stop_threshold=0.0).to_dict()))
    out = scene / "cfgout"
    assert main(segment_args(scene, out, ["--config", str(cfg_path)])) == 0
    assert read_label_map(out / "labels.pgm").n_regions == 30


def test_segment_rejects_bad_config(scene, capsys):
    cfg_path = scene / "bad.json"
    data = EngineConfig().to_dict()
    data["edge_load"] = 0.0
    cfg_path.write_text(json.dumps(data))
    out = scene / "badout"
    args = segment_args(scene, out) + ["--config", str(cfg_path)]
    assert main(args) == 2


def test_segment_deterministic_bytes(scene):
    a, b = scene / "da", scene / "db"
    for out in (a, b):
        assert main(segment_args(scene, out, ["--lambda", "0.4"])) == 0
    assert (a / "labels.pgm").read_bytes() == (b / "labels.pgm").read_bytes()
    strip = lambda p: {k: v for k, v in
                       json.loads(p.read_text()).items() if k != "timings"}
    assert strip(a / "summary.json") == strip(b / "summary.json")


# --- hierarchy --------------------------------------------------------------

def test_hierarchy_outputs(scene):
    out = scene / "h"
    args = ["hierarchy", "--image", str(scene / "img.ppm"),
            "--semmap", str(scene / "map.semmap"),
            "--levels", "3", "--out-dir", str(out)]
    assert main(args) == 0

    index = json.loads((out / "index.json").read_text())
    assert len(index["maps"]) == len(index["thresholds"]) <= 3
    assert index["thresholds"] == sorted(index["thresholds"])

    maps = [read_label_map(out / m) for m in index["maps"]]
    for fine, coarse in zip(maps, maps[1:]):
        assert fine.n_regions >= coarse.n_regions
        joint = {}
        for f, c in zip(fine.labels.ravel(), coarse.labels.ravel()):
            assert joint.setdefault(int(f), int(c)) == int(c)

    events = [json.loads(line)
              for line in (out / "events.jsonl").read_text().splitlines()]
    assert len(events) == 30 - 1
    stars = [e["lambda_star"] for e in events]
    assert stars == sorted(stars)

    ucm = read_ucm(out / "ucm.conmap")
    assert ucm.shape == (11, 13)


def test_hierarchy_deterministic(scene):
    outs = []
    for name in ("h1", "h2"):
        out = scene / name
        assert main(["hierarchy", "--image", str(scene / "img.ppm"),
                     "--semmap", str(scene / "map.semmap"),
                     "--levels", "5", "--out-dir", str(out)]) == 0
        outs.append(out)
    a, b = outs
    for rel in json.loads((a / "index.json").read_text())["maps"] + [
            "events.jsonl", "ucm.conmap", "index.json"]:
        assert (a / rel).read_bytes() == (b / rel).read_bytes()


# --- eval -------------------------------------------------------------------

def write_gt(dirpath, name, labels):
    write_label_map(LabelMap(labels.shape[1], labels.shape[0], labels),
                    dirpath / name)


def test_eval_perfect_prediction(scene, capsys):
    rng = np.random.default_rng(4)
    labels = voronoi_labels(rng, 6, 5, 3)
    write_gt(scene, "pred.pgm", labels)
    write_gt(scene, "gt.pgm", labels)
    out = scene / "ev"
    assert main(["eval", "--pred", str(scene / "pred.pgm"),
                 "--gt", str(scene / "gt.pgm"), "--out-dir", str(out)]) == 0

    results = json.loads((out / "results.json").read_text())
    assert results["summary"]["covering"]["ods"] == 1.0
    assert results["summary"]["pri"]["ods"] == 1.0
    assert results["summary"]["voi"]["ods"] == pytest.approx(0.0, abs=1e-12)
    assert results["summary"]["boundary_f"]["ods"] == 1.0
    assert results["metadata"]["voi_log_base"] == 2

    rows = (out / "results.csv").read_text().splitlines()
    assert rows[0] == "image,threshold,covering,pri,voi,boundary_p,boundary_r,boundary_f"
    assert len(rows) == 2
    assert (out / "sweep.png").stat().st_size > 0


def test_eval_sweep_index_and_manifest(scene):
    # Build a real sweep via the hierarchy command, then score it.
    hout = scene / "hs"
    assert main(["hierarchy", "--image", str(scene / "img.ppm"),
                 "--semmap", str(scene / "map.semmap"),
                 "--levels", "4", "--out-dir", str(hout)]) == 0
    rng = np.random.default_rng(8)
    gt_dir = scene / "gts"
    gt_dir.mkdir()
    write_gt(gt_dir, "a.pgm", voronoi_labels(rng, 6, 5, 3))
    write_gt(gt_dir, "b.pgm", voronoi_labels(rng, 6, 5, 4))

    manifest = scene / "eval.json"
    manifest.write_text(json.dumps(
        [{"pred": "hs/index.json", "gt_dir": "gts"}]))
    out = scene / "evs"
    assert main(["eval", "--manifest", str(manifest),
                 "--out-dir", str(out)]) == 0

    results = json.loads((out / "results.json").read_text())
    n_levels = len(json.loads((hout / "index.json").read_text())["maps"])
    image = results["images"][0]
    assert len(image["thresholds"]) == n_levels
    for column in ("covering", "pri", "voi", "boundary_f"):
        assert len(image["scores"][column]) == n_levels
    rows = (out / "results.csv").read_text().splitlines()
    assert len(rows) == 1 + n_levels


def test_eval_ragged_grids_exit_two(scene, capsys):
    for name, levels in (("s1", 3), ("s2", 5)):
        assert main(["hierarchy", "--image", str(scene / "img.ppm"),
                     "--semmap", str(scene / "map.semmap"),
                     "--levels", str(levels),
                     "--out-dir", str(scene / name)]) == 0
    grids = [json.loads((scene / n / "index.json").read_text())["thresholds"]
             for n in ("s1", "s2")]
    if grids[0] == grids[1]:
        pytest.skip("quantile grids collapsed to the same set")
    rng = np.random.default_rng(8)
    write_gt(scene, "g.pgm", voronoi_labels(rng, 6, 5, 3))
    manifest = scene / "ragged.json"
    manifest.write_text(json.dumps([
        {"pred": "s1/index.json", "gt": ["g.pgm"]},
        {"pred": "s2/index.json", "gt": ["g.pgm"]}]))
    assert main(["eval", "--manifest", str(manifest),
                 "--out-dir", str(scene / "evr")]) == 2
    assert "error:" in capsys.readouterr().err


def test_eval_without_gt_exits_two(scene, capsys):
    rng = np.random.default_rng(4)
    write_gt(scene, "p.pgm", voronoi_labels(rng, 6, 5, 3))
    assert main(["eval", "--pred", str(scene / "p.pgm"),
                 "--out-dir", str(scene / "eo")]) == 2


# --- calibrate --------------------------------------------------------------

def calibration_setup(scene):
    rng = np.random.default_rng(14)
    gt = voronoi_labels(rng, 6, 5, 2)
    write_gt(scene, "train_gt.pgm", gt)
    manifest = scene / "train.json"
    manifest.write_text(json.dumps([
        {"image": "img.ppm", "semmap": "map.semmap", "gt": ["train_gt.pgm"]}]))
    space = scene / "space.json"
    space.write_text(json.dumps({"semantic_weight": [0.0, 1.0]}))
    return manifest, space


def test_calibrate_emits_reusable_config(scene, capsys):
    manifest, space = calibration_setup(scene)
    out = scene / "cal"
    assert main(["calibrate", "--manifest", str(manifest),
                 "--space", str(space), "--sweep-points", "9",
                 "--out-dir", str(out)]) == 0

    cfg = EngineConfig.from_dict(
        json.loads((out / "config.json").read_text()))
    summary = json.loads((out / "summary.json").read_text())
    assert summary["objective"] == "covering"
    assert 0.0 <= summary["score"] <= 1.0

    rows = (out / "trace.csv").read_text().splitlines()
    assert rows[0] == "step,objective"
    assert len(rows) == summary["steps"] + 1
    values = [float(r.split(",")[1]) for r in rows[1:]]
    assert values == sorted(values)
    assert values[-1] == pytest.approx(summary["score"])
    assert (out / "trace.png").stat().st_size > 0

    # The emitted config must reproduce its reported objective.
    from seglep.calibrate import TrainItem, _objective_value
    from seglep.pipeline import prepare
    from seglep.raster import load_image, load_semantic_map
    item = TrainItem(prepare(load_image(scene / "img.ppm"),
                             load_semantic_map(scene / "map.semmap")),
                     [read_label_map(scene / "train_gt.pgm")])
    again = _objective_value([item], cfg, "covering", 9)
    assert again == pytest.approx(summary["score"], abs=1e-12)


def test_calibrate_empty_manifest_exits_two(scene, capsys):
    manifest = scene / "none.json"
    manifest.write_text("[]")
    assert main(["calibrate", "--manifest", str(manifest),
                 "--out-dir", str(scene / "cal2")]) == 2
    assert "error:" in capsys.readouterr().err


def test_calibrate_rejects_unknown_objective(scene):
    manifest, _ = calibration_setup(scene)
    with pytest.raises(SystemExit):
        main(["calibrate", "--manifest", str(manifest),
              "--objective", "accuracy", "--out-dir", str(scene / "cal3")])
