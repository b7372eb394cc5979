"""Command-line interface.

Exit codes: 0 success, 1 input error (unreadable or malformed inputs, bad
arguments), 2 stage failure (a pipeline stage could not produce a result).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import evaluation, model as M, pipeline as P
from .candidates import Candidate, NoTissueError, candidates_to_array
from .imgcore import (AnnotationError, AnnotationSet, ImageReadError, load_annotations, load_patch,
                      save_annotations, save_patch, save_plane)
from .synth import SynthConfig, TooDenseError, generate
from .texture import column_names, extract_features, manifest

log = logging.getLogger("rnaseg")

EXIT_OK, EXIT_INPUT, EXIT_STAGE = 0, 1, 2
IMAGE_SUFFIXES = (".png", ".tif", ".tiff")


class InputError(Exception):
    pass


class StageError(Exception):
    pass


# --- CSV helpers -------------------------------------------------------------

def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    f = float(v)
    return str(int(f)) if f.is_integer() and abs(f) < 2 ** 53 else repr(f)


def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_num(v) if not isinstance(v, str) else v for v in r])


def read_table(path, required=()) -> tuple[list[str], list[list[str]]]:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from e
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    for col in required:
        if col not in header:
            raise InputError(f"{path}: missing column {col!r}")
    body = [r for r in rows[1:] if r]
    for k, r in enumerate(body, 2):
        if len(r) != len(header):
            raise InputError(f"{path}: line {k} has {len(r)} fields, expected {len(header)}")
    return header, body


def _floats(path, header, body, cols) -> np.ndarray:
    idx = [header.index(c) for c in cols]
    try:
        return np.array([[float(r[i]) for i in idx] for r in body], dtype=np.float64).reshape(-1, len(cols))
    except ValueError as e:
        raise InputError(f"{path}: {e}") from e


def write_candidates(path, cands) -> None:
    write_rows(path, ["x", "y", "intensity", "radius"],
               ((c.x, c.y, c.intensity, c.radius) for c in cands))


def read_candidates(path) -> list[Candidate]:
    """Missing intensity/radius columns default to 0."""
    header, body = read_table(path, ("x", "y"))
    cols = [c for c in ("x", "y", "intensity", "radius") if c in header]
    arr = _floats(path, header, body, cols)
    out = []
    for row in arr:
        vals = dict(zip(cols, row))
        if not (vals["x"].is_integer() and vals["y"].is_integer()):
            raise InputError(f"{path}: candidate coordinates must be integers")
        inten = int(vals.get("intensity", 0))
        radius = int(vals.get("radius", 0))
        out.append(Candidate(int(vals["x"]), int(vals["y"]), inten, radius))
    return out


def write_features(path, cands, X, feature_set) -> None:
    xy = candidates_to_array(cands)[:, :2] if len(cands) else np.zeros((0, 2))
    write_rows(path, ["x", "y"] + column_names(feature_set),
               (list(map(int, p)) + [float(v) for v in row] for p, row in zip(xy, X)))


def read_features(path):
    """``(xy, X, column names)`` from a features CSV."""
    header, body = read_table(path, ("x", "y"))
    if header[:2] != ["x", "y"]:
        raise InputError(f"{path}: first columns must be x,y")
    data = _floats(path, header, body, header)
    if not np.all(np.isfinite(data)):
        raise InputError(f"{path}: non-finite feature values")
    return data[:, :2], data[:, 2:], header[2:]


def feature_set_of(columns) -> str:
    for name in ("reduced", "full"):
        if list(columns) == column_names(name):
            return name
    return "custom"


def write_detections(path, dets) -> None:
    write_rows(path, ["x", "y", "area", "peak"], ((d.x, d.y, d.area, d.peak) for d in dets))


def read_points(path) -> np.ndarray:
    header, body = read_table(path, ("x", "y"))
    return _floats(path, header, body, ("x", "y"))


# --- loading with error mapping ------------------------------------------------

def _patch(path) -> np.ndarray:
    try:
        return load_patch(path)
    except (ImageReadError, OSError) as e:
        raise InputError(str(e)) from e


def _truth(path, shape=None) -> AnnotationSet:
    try:
        return load_annotations(path, shape)
    except (AnnotationError, OSError) as e:
        raise InputError(str(e)) from e


def _model(path) -> M.LinearModel:
    try:
        return M.load_model(path)
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from e
    except (M.ModelFormatError, ValueError, KeyError) as e:
        raise InputError(f"{path}: malformed model ({e})") from e


def _config(args) -> P.PipelineConfig:
    try:
        cfg = P.load_config(args.config) if getattr(args, "config", None) else P.PipelineConfig()
        over = {}
        for attr, field_name in (("set", "feature_set"), ("gray", "gray_threshold"),
                                 ("area", "area_threshold"), ("radius", "match_radius")):
            v = getattr(args, attr, None)
            if v is not None:
                over[field_name] = v
        if getattr(args, "optimal", False):
            over["optimal_matching"] = True
        if getattr(args, "C", None) is not None:
            over["train"] = dataclasses.replace(cfg.train, C=args.C)
        return dataclasses.replace(cfg, **over) if over else cfg
    except OSError as e:
        raise InputError(f"{args.config}: {e.strerror or e}") from e
    except ValueError as e:
        raise InputError(f"config: {e}") from e


def _check_model(model: M.LinearModel, cfg: P.PipelineConfig) -> None:
    if model.feature_set != cfg.feature_set:
        raise InputError(f"model uses the {model.feature_set!r} feature set but the "
                         f"pipeline is configured for {cfg.feature_set!r}")


# --- subcommands ---------------------------------------------------------------

def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(seed=args.seed, dots=args.dots, side=args.side)
    except ValueError as e:
        raise InputError(str(e)) from e
    img, truth = generate(cfg)
    save_patch(args.out, img)
    save_annotations(args.truth, truth)
    log.info("wrote %s (%d dots)", args.out, len(truth))
    return EXIT_OK


def cmd_candidates(args) -> int:
    cfg = _config(args)
    planes = P.split_planes(_patch(args.inp), cfg)
    cands, mask = P.find_candidates(planes, cfg)
    write_candidates(args.out, cands)
    if args.dump_mask:
        save_plane(args.dump_mask, mask.data)
    log.info("%d candidates, threshold %d", len(cands), mask.thresh)
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = _config(args)
    img = _patch(args.inp)
    planes = P.split_planes(img, cfg)
    if args.candidates:
        cands = read_candidates(args.candidates)
    else:
        cands, _ = P.find_candidates(planes, cfg)
    h, w = planes.gray.shape
    if any(not (0 <= c.x < w and 0 <= c.y < h) for c in cands):
        raise InputError("candidate outside the image")
    t0 = time.perf_counter()
    X = extract_features(planes.channels, cands, cfg.feature_set)
    log.info("%s features for %d candidates in %.3f s", cfg.feature_set, len(cands),
             time.perf_counter() - t0)
    write_features(args.out, cands, X, cfg.feature_set)
    if args.labels:
        if not args.truth:
            raise InputError("--labels needs --truth")
        truth = _truth(args.truth, (h, w))
        labels = M.label_candidates(cands, truth, cfg.label_radius)
        write_rows(args.labels, ["x", "y", "label"],
                   ((c.x, c.y, int(v)) for c, v in zip(cands, labels)))
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    xy, X, cols = read_features(args.features)
    header, body = read_table(args.labels, ("x", "y", "label"))
    lab = _floats(args.labels, header, body, ("x", "y", "label"))
    if len(lab) != len(X) or not np.array_equal(lab[:, :2], xy):
        raise InputError("labels do not line up with feature rows")
    if not np.all(np.isin(lab[:, 2], (0, 1))):
        raise InputError("labels must be 0 or 1")
    fs = feature_set_of(cols)
    specs = manifest(fs) if fs != "custom" else ()
    try:
        model = M.fit(X, lab[:, 2].astype(int), cfg.train, specs, fs)
    except M.SingleClassError as e:
        raise StageError(str(e)) from e
    except ValueError as e:
        raise InputError(str(e)) from e
    M.save_model(args.out, model)
    log.info("trained on %d rows (%d positive), %d solver steps", len(X),
             int(lab[:, 2].sum()), model.iterations)
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _model(args.model)
    xy, X, cols = read_features(args.features)
    if model.specs and list(cols) != [s.column for s in model.specs]:
        raise InputError("feature columns do not match the model manifest")
    if X.shape[1] != model.n_features:
        raise InputError(f"model expects {model.n_features} features, got {X.shape[1]}")
    scores = model.predict_score(X) if len(X) else np.zeros(0)
    write_rows(args.out, ["x", "y", "score"], ((*p, s) for p, s in zip(xy, scores)))
    return EXIT_OK


def cmd_analyze(args) -> int:
    model = _model(args.model)
    rows = M.weight_breakdown(model)
    M.write_breakdown(args.out, rows)
    for (family, feature), share in sorted(M.feature_shares(rows).items(), key=lambda kv: -kv[1]):
        print(f"{family:>10} {feature:<40} {100 * share:6.2f}%")
    return EXIT_OK


def cmd_segment(args) -> int:
    cfg = _config(args)
    model = _model(args.model)
    _check_model(model, cfg)
    img = _patch(args.inp)
    res = P.process_patch(img, model, cfg)
    write_detections(args.out, res.detections)
    if args.dump_map:
        save_plane(args.dump_map, res.seg_map)
    log.info("%d detections from %d candidates", len(res.detections), len(res.candidates))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if not args.radius > 0:
        raise InputError("--radius must be positive")
    dets = read_points(args.detections)
    truth = _truth(args.truth)
    r = evaluation.match(dets, truth, args.radius, args.optimal)
    print(f"tp={r.tp} fp={r.fp} fn={r.fn} precision={r.precision:.6f} "
          f"recall={r.recall:.6f} f1={r.f1:.6f}")
    return EXIT_OK


def _patch_pairs(directory) -> list[tuple[Path, Path]]:
    d = Path(directory)
    if not d.is_dir():
        raise InputError(f"{d}: not a directory")
    pairs = []
    for img in sorted(p for p in d.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES):
        truth = img.with_suffix(".csv")
        if not truth.exists():
            raise InputError(f"{img}: no ground truth file {truth.name}")
        pairs.append((img, truth))
    if not pairs:
        raise InputError(f"{d}: no patches found")
    return pairs


def cmd_sweep(args) -> int:
    cfg = _config(args)
    model = _model(args.model)
    _check_model(model, cfg)
    pairs = _patch_pairs(args.patches)
    images = [_patch(i) for i, _ in pairs]
    truths = [_truth(t, img.shape[:2]) for (_, t), img in zip(pairs, images)]
    rows = P.sweep_patches(images, truths, model, cfg)
    evaluation.write_surface(args.out, rows)
    best = evaluation.best_row(rows)
    print(f"best f1={best['f1']:.6f} at gray={best['gray']} area={best['area']}")
    return EXIT_OK


def _run_one(img_path: Path, truth_path, model, cfg, outdir: Path, dumps) -> dict:
    img = _patch(img_path)
    truth = _truth(truth_path, img.shape[:2]) if truth_path else None
    res = P.process_patch(img, model, cfg, truth)
    stem = img_path.stem
    write_detections(outdir / f"{stem}_detections.csv", res.detections)
    if dumps.get("candidates"):
        write_candidates(outdir / f"{stem}_candidates.csv", res.candidates)
    if dumps.get("features"):
        write_features(outdir / f"{stem}_features.csv", res.candidates, res.features, cfg.feature_set)
    if dumps.get("map"):
        save_plane(outdir / f"{stem}_map.png", res.seg_map)
    if dumps.get("mask"):
        save_plane(outdir / f"{stem}_mask.png", res.mask.data)
    row = {"patch": stem, "candidates": len(res.candidates), "detections": len(res.detections)}
    if res.match is not None:
        m = res.match
        row.update(tp=m.tp, fp=m.fp, fn=m.fn, precision=m.precision, recall=m.recall, f1=m.f1)
    for k, v in res.timings.items():
        log.info("%s: %s %.3f s", stem, k, v)
    return row


def cmd_run(args) -> int:
    cfg = _config(args)
    model = _model(args.model)
    _check_model(model, cfg)
    patches = [Path(p) for p in args.patches]
    for p in patches:
        if not p.is_file():
            raise InputError(f"{p}: no such file")
    truths = {}
    if args.truth_dir:
        for p in patches:
            t = Path(args.truth_dir) / f"{p.stem}.csv"
            if not t.is_file():
                raise InputError(f"{t}: no such file")
            truths[p] = t
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    dumps = {"candidates": args.dump_candidates, "features": args.dump_features,
             "map": args.dump_map, "mask": args.dump_mask}

    def job(p):
        try:
            return _run_one(p, truths.get(p), model, cfg, outdir, dumps), None
        except (InputError, NoTissueError, ValueError) as e:
            log.error("%s: %s", p, e)
            return None, e

    with ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        results = list(pool.map(job, patches))
    rows = [r for r, _ in results if r is not None]
    fields = ["patch", "candidates", "detections"]
    if truths:
        fields += ["tp", "fp", "fn", "precision", "recall", "f1"]
        tot = evaluation.combine(
            [evaluation.MatchResult([], r["tp"], r["fp"], r["fn"]) for r in rows])
        print(f"pooled: tp={tot.tp} fp={tot.fp} fn={tot.fn} precision={tot.precision:.6f} "
              f"recall={tot.recall:.6f} f1={tot.f1:.6f}")
    write_rows(outdir / "summary.csv", fields, ([r[f] for f in fields] for r in rows))
    return EXIT_OK if all(e is None for _, e in results) else EXIT_STAGE


# --- parser --------------------------------------------------------------------

def _common(p, feature_set=False):
    p.add_argument("--config", help="flat key = value pipeline config")
    if feature_set:
        p.add_argument("--set", choices=["full", "reduced"], default=None,
                       help="feature set (default from config: reduced)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rnaseg", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="render a synthetic patch and its ground truth")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dots", type=int, default=80)
    p.add_argument("--side", type=int, default=480)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("candidates", help="select candidate pixels")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-mask")
    _common(p)
    p.set_defaults(func=cmd_candidates)

    p = sub.add_parser("extract-features", help="texture features per candidate")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--candidates", help="candidates CSV (default: select them)")
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="ground truth CSV, used with --labels")
    p.add_argument("--labels", help="write x,y,label for the candidates")
    _common(p, feature_set=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="fit the linear SVM")
    p.add_argument("--features", required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--C", type=float, default=None)
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score feature rows")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("analyze", help="coefficient weight breakdown")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("segment", help="detections for one patch")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--gray", type=int, default=None)
    p.add_argument("--area", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-map")
    _common(p, feature_set=True)
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("evaluate", help="match detections to ground truth")
    p.add_argument("--detections", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--radius", type=float, default=evaluation.MATCH_RADIUS)
    p.add_argument("--optimal", action="store_true", help="maximum-cardinality matching")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="F1 surface over gray and area thresholds")
    p.add_argument("--model", required=True)
    p.add_argument("--patches", required=True, help="directory of NAME.png + NAME.csv pairs")
    p.add_argument("--out", required=True)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--optimal", action="store_true")
    _common(p, feature_set=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("run", help="full pipeline over several patches")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--truth-dir", help="directory with NAME.csv ground truth per patch")
    p.add_argument("--gray", type=int, default=None)
    p.add_argument("--area", type=int, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--optimal", action="store_true")
    p.add_argument("--threads", type=int, default=1, help="patch-level worker threads")
    for what in ("candidates", "features", "map", "mask"):
        p.add_argument(f"--dump-{what}", action="store_true", help=f"write per-patch {what}")
    p.add_argument("patches", nargs="+")
    _common(p, feature_set=True)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except InputError as e:
        log.error("%s", e)
        return EXIT_INPUT
    except (StageError, NoTissueError, TooDenseError, M.SingleClassError) as e:
        log.error("%s", e)
        return EXIT_STAGE
    except ValueError as e:
        log.error("%s", e)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
