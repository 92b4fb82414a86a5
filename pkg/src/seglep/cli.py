"""Command-line frontend: segment, hierarchy, eval, calibrate.

Exit codes: 0 success, 2 usage or input errors, 1 anything else.  Data
files carry no timestamps; wall-clock timings appear only inside the
"timings" object of summary JSON, so identical invocations yield
byte-identical data outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .calibrate import (DEFAULT_SWEEP_POINTS, OBJECTIVES, TrainItem,
                        grid_search)
from .engine import EngineConfig
from .errors import RaggedSweep, SeglepError
from .hierarchy import boundary_mask, build_ucm, extract_semantic, threshold
from .metrics import (ScoreSweep, boundary_f, covering, default_tolerance,
                      ods_ois, pri, voi)
from .pipeline import (full_hierarchy, prepare, quantile_levels, run_engine)
from .raster import (load_contour_map, load_image, load_semantic_map,
                     read_label_map, write_category_map, write_label_map,
                     write_overlay, write_ucm)
from .report import sweep_figure, trace_figure
from .util import worker_count

DEFAULT_SPACE = {
    "color_weight": [0.0, 0.5, 1.0, 2.0],
    "texture_weight": [0.0, 0.5, 1.0, 2.0],
    "semantic_weight": [0.0, 0.5, 1.0, 2.0],
    "regularity_weight": [0.0, 0.5, 1.0, 2.0],
}


# --- shared plumbing --------------------------------------------------------

def _load_config(path: str | None) -> EngineConfig:
    if path is None:
        return EngineConfig()
    cfg = EngineConfig.from_dict(json.loads(Path(path).read_text()))
    cfg.validate()
    return cfg


def _load_inputs(args):
    img = load_image(args.image)
    semmap = load_semantic_map(args.semmap)
    contour = load_contour_map(args.contour) if args.contour else None
    return img, semmap, contour


def _json_number(value: float):
    return None if math.isinf(value) else value


def _write_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --- segment ----------------------------------------------------------------

def cmd_segment(args) -> int:
    t0 = time.perf_counter()
    img, semmap, contour = _load_inputs(args)
    cfg = _load_config(args.config)
    if args.stop_threshold is not None:
        cfg = replace(cfg, stop_threshold=args.stop_threshold)
        cfg.validate()
    out = _out_dir(args)

    t1 = time.perf_counter()
    bundle = prepare(img, semmap, contour)
    t2 = time.perf_counter()
    result = run_engine(bundle, cfg)
    t3 = time.perf_counter()

    outputs = ["labels.pgm"]
    write_label_map(result.label_map, out / "labels.pgm")
    if args.emit_semantic:
        sem = extract_semantic(result.label_map, bundle.costs)
        write_category_map(sem.category_ids, sem.categories,
                           out / "semantic.pgm")
        outputs.append("semantic.pgm")
    if args.emit_overlay:
        write_overlay(img, result.label_map, out / "overlay.ppm")
        outputs.append("overlay.ppm")
    t4 = time.perf_counter()

    names = bundle.costs.categories
    summary = {
        "width": img.width,
        "height": img.height,
        "regions": result.label_map.n_regions,
        "lambda": _json_number(cfg.stop_threshold),
        "events": len(result.events),
        "raw_order_violations": result.state.raw_order_violations,
        "group_sizes": {names[lab]: len(members)
                        for lab, members in result.groups.items()},
        "outputs": outputs,
        "timings": {"load_s": t1 - t0, "cues_s": t2 - t1,
                    "merge_s": t3 - t2, "write_s": t4 - t3},
    }
    _write_json(summary, out / "summary.json")
    print(f"{result.label_map.n_regions} regions -> {out}")
    return 0


# --- hierarchy --------------------------------------------------------------

def cmd_hierarchy(args) -> int:
    t0 = time.perf_counter()
    img, semmap, contour = _load_inputs(args)
    cfg = _load_config(args.config)
    out = _out_dir(args)

    t1 = time.perf_counter()
    bundle = prepare(img, semmap, contour)
    t2 = time.perf_counter()
    result, h = full_hierarchy(bundle, cfg)
    t3 = time.perf_counter()

    with open(out / "events.jsonl", "w") as fh:
        for event in result.events:
            fh.write(json.dumps(event.to_json_obj(), sort_keys=True) + "\n")
    write_ucm(build_ucm(h), out / "ucm.conmap")

    grid = quantile_levels(h.levels(), args.levels)
    width = max(2, len(str(max(grid.size - 1, 0))))
    maps = []
    for i, level in enumerate(grid):
        name = f"level_{i:0{width}d}.pgm"
        write_label_map(threshold(h, float(level)), out / name)
        maps.append(name)
    t4 = time.perf_counter()

    index = {
        "width": img.width,
        "height": img.height,
        "thresholds": [float(v) for v in grid],
        "maps": maps,
        "ucm": "ucm.conmap",
        "events": "events.jsonl",
    }
    _write_json(index, out / "index.json")
    _write_json({"timings": {"load_s": t1 - t0, "cues_s": t2 - t1,
                             "merge_s": t3 - t2, "write_s": t4 - t3}},
                out / "summary.json")
    print(f"{len(maps)} levels -> {out}")
    return 0


# --- eval -------------------------------------------------------------------

def _gt_paths(paths: list[str] | None, gt_dir: str | None,
              base: Path) -> list[Path]:
    found: list[Path] = [base / p for p in paths or []]
    if gt_dir:
        found.extend(sorted((base / gt_dir).glob("*.pgm")))
    if not found:
        raise SeglepError("no ground-truth maps given")
    return found


def _eval_items(args) -> list[dict]:
    if args.manifest:
        base = Path(args.manifest).resolve().parent
        entries = json.loads(Path(args.manifest).read_text())
        return [{"pred": base / e["pred"],
                 "gts": _gt_paths(e.get("gt"), e.get("gt_dir"), base)}
                for e in entries]
    if not args.pred:
        raise SeglepError("either --manifest or --pred is required")
    return [{"pred": Path(args.pred),
             "gts": _gt_paths(args.gt, args.gt_dir, Path("."))}]


def _load_sweep(pred: Path) -> tuple[np.ndarray, list[Path]]:
    """A prediction is a sweep index (JSON) or one label map (PGM)."""
    if pred.suffix == ".json":
        index = json.loads(pred.read_text())
        return (np.asarray(index["thresholds"], dtype=np.float64),
                [pred.parent / m for m in index["maps"]])
    return np.array([0.0]), [pred]


METRIC_COLUMNS = ("covering", "pri", "voi",
                  "boundary_p", "boundary_r", "boundary_f")


def _score_item(item: dict) -> dict:
    thresholds, map_paths = _load_sweep(item["pred"])
    gts = [read_label_map(p) for p in item["gts"]]
    first = gts[0]
    tol = default_tolerance(first.width, first.height)
    gt_masks = [boundary_mask(g.labels) for g in gts]
    rows = {name: [] for name in METRIC_COLUMNS}
    for path in map_paths:
        pred = read_label_map(path)
        rows["covering"].append(float(np.mean([covering(pred, g)
                                               for g in gts])))
        rows["pri"].append(pri(pred, gts))
        rows["voi"].append(float(np.mean([voi(pred, g) for g in gts])))
        p, r, f = boundary_f(boundary_mask(pred.labels), gt_masks, tol)
        rows["boundary_p"].append(p)
        rows["boundary_r"].append(r)
        rows["boundary_f"].append(f)
    return {"pred": str(item["pred"]), "thresholds": thresholds,
            "scores": rows}


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    items = _eval_items(args)
    out = _out_dir(args)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        scored = list(pool.map(_score_item, items))

    grid = scored[0]["thresholds"]
    for entry in scored[1:]:
        if not np.array_equal(entry["thresholds"], grid):
            raise RaggedSweep(
                f"threshold grid of {entry['pred']} differs from "
                f"{scored[0]['pred']}")

    summary = {}
    directions = {"covering": "max", "pri": "max", "voi": "min",
                  "boundary_f": "max"}
    for name, better in directions.items():
        sweep = ScoreSweep(grid, np.array([e["scores"][name]
                                           for e in scored]))
        ods, at, ois = ods_ois(sweep, better)
        summary[name] = {"ods": ods, "ods_threshold": at, "ois": ois}

    results = {
        "metadata": {
            "voi_log_base": 2,
            "covering_direction": "ground truth covered by prediction",
            "boundary_tol_fraction": 0.0075,
        },
        "images": [{"pred": e["pred"],
                    "thresholds": [float(t) for t in e["thresholds"]],
                    "scores": e["scores"]} for e in scored],
        "summary": summary,
        "timings": {"total_s": time.perf_counter() - t0},
    }
    _write_json(results, out / "results.json")

    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("image", "threshold") + METRIC_COLUMNS)
        for e in scored:
            for i, t in enumerate(e["thresholds"]):
                writer.writerow([e["pred"], float(t)]
                                + [e["scores"][m][i] for m in METRIC_COLUMNS])

    curves = {name: np.mean([e["scores"][name] for e in scored], axis=0)
              for name in directions}
    sweep_figure(grid, curves, out / "sweep.png")
    print(f"{len(scored)} image(s) -> {out}")
    return 0


# --- calibrate --------------------------------------------------------------

def _train_items(manifest: str) -> list[TrainItem]:
    base = Path(manifest).resolve().parent
    entries = json.loads(Path(manifest).read_text())
    items = []
    for e in entries:
        img = load_image(base / e["image"])
        semmap = load_semantic_map(base / e["semmap"])
        contour = (load_contour_map(base / e["contour"])
                   if e.get("contour") else None)
        gts = [read_label_map(p)
               for p in _gt_paths(e.get("gt"), e.get("gt_dir"), base)]
        items.append(TrainItem(prepare(img, semmap, contour), gts))
    return items


def cmd_calibrate(args) -> int:
    t0 = time.perf_counter()
    items = _train_items(args.manifest)
    space = (json.loads(Path(args.space).read_text())
             if args.space else DEFAULT_SPACE)
    base_cfg = _load_config(args.config)
    out = _out_dir(args)

    result = grid_search(items, space, objective=args.objective,
                         base=base_cfg, sweep_points=args.sweep_points)
    t1 = time.perf_counter()

    _write_json(result.config.to_dict(), out / "config.json")
    with open(out / "trace.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("step", "objective"))
        for i, value in enumerate(result.trace):
            writer.writerow((i, value))
    trace_figure(result.trace, out / "trace.png")
    _write_json({"objective": args.objective, "score": result.score,
                 "steps": len(result.trace),
                 "timings": {"total_s": t1 - t0}},
                out / "summary.json")
    print(f"{args.objective}={result.score:.6f} -> {out}")
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seglep",
        description="Hierarchical image segmentation driven by color, "
                    "texture, contour and semantic cues.")
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="segment one image at a threshold")
    seg.add_argument("--image", required=True, help="PPM color image")
    seg.add_argument("--semmap", required=True,
                     help="SEMMAP01 probability map (JSON sidecar beside it)")
    seg.add_argument("--contour", help="CONMAP01 or PGM contour strengths")
    seg.add_argument("--config", help="engine config JSON")
    seg.add_argument("--lambda", dest="stop_threshold", type=float,
                     help="stop threshold (default: from config)")
    seg.add_argument("--out-dir", default=".", help="output directory")
    seg.add_argument("--emit-semantic", action="store_true",
                     help="also write the per-region category map")
    seg.add_argument("--emit-overlay", action="store_true",
                     help="also write the image with boundaries painted")
    seg.set_defaults(func=cmd_segment)

    hier = sub.add_parser("hierarchy",
                          help="merge to one region, export UCM and sweep")
    hier.add_argument("--image", required=True)
    hier.add_argument("--semmap", required=True)
    hier.add_argument("--contour")
    hier.add_argument("--config")
    hier.add_argument("--levels", type=int, default=DEFAULT_SWEEP_POINTS,
                      help="number of sweep thresholds (quantiles)")
    hier.add_argument("--out-dir", default=".")
    hier.set_defaults(func=cmd_hierarchy)

    ev = sub.add_parser("eval", help="score predictions against annotations")
    ev.add_argument("--manifest",
                    help="JSON list of {pred, gt|gt_dir}; paths relative "
                         "to the manifest")
    ev.add_argument("--pred", help="sweep index JSON or one label map PGM")
    ev.add_argument("--gt", action="append",
                    help="annotator label map (repeatable)")
    ev.add_argument("--gt-dir", help="directory of annotator label maps")
    ev.add_argument("--out-dir", default=".")
    ev.set_defaults(func=cmd_eval)

    cal = sub.add_parser("calibrate", help="fit engine weights on a train set")
    cal.add_argument("--manifest", required=True,
                     help="JSON list of {image, semmap, contour?, gt|gt_dir}")
    cal.add_argument("--space", help="JSON of parameter grids")
    cal.add_argument("--objective", default="covering",
                     choices=sorted(OBJECTIVES))
    cal.add_argument("--config", help="base engine config JSON")
    cal.add_argument("--sweep-points", type=int, default=DEFAULT_SWEEP_POINTS)
    cal.add_argument("--out-dir", default=".")
    cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SeglepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        print(f"error: {exc!r}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last resort
        print(f"internal error: {exc!r}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
