"""Command-line front end: preprocess, extract, train, experiment, synth."""

import argparse
import json
import logging
import sys
import warnings
from dataclasses import asdict, fields, replace
from pathlib import Path

import numpy as np

from .descriptors import GROUPS, fit_scaler, get_group, read_dataset, write_dataset
from .errors import DegenerateImageWarning, MammotexError, MissingImage
from .experiment import EPOCH_CAP, R_TOLERANCE, SplitSpec, extract_corpus, run_study
from .glcm import GlcmConfig
from .manifest import ManifestEntry, read_manifest, read_roi_sidecar, write_manifest
from .mlp import LayerSizes, TrainConfig, train
from .pgm_io import read_pgm, write_pgm
from .preprocess import ClaheParams, preprocess
from .synthetic import generate_synthetic_corpus

log = logging.getLogger("mammotex")

SECTIONS = {"glcm": GlcmConfig, "train": TrainConfig, "split": SplitSpec, "clahe": ClaheParams}
EXTRA_KEYS = {"selection": {"epoch_cap", "r_tolerance"}, "paths": {"input_dir", "manifest", "output_dir"}}


class ConfigError(MammotexError, ValueError):
    pass


def load_config(path) -> dict:
    """Read a JSON config; unknown sections or keys are rejected."""
    raw = json.loads(Path(path).read_text()) if path else {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    allowed = set(SECTIONS) | set(EXTRA_KEYS)
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    cfg = {}
    for name, cls in SECTIONS.items():
        section = raw.get(name, {})
        valid = {f.name for f in fields(cls)}
        bad = set(section) - valid
        if bad:
            raise ConfigError(f"unknown keys in '{name}': {sorted(bad)}")
        cfg[name] = cls(**section)
    for name, valid in EXTRA_KEYS.items():
        section = raw.get(name, {})
        bad = set(section) - valid
        if bad:
            raise ConfigError(f"unknown keys in '{name}': {sorted(bad)}")
        cfg[name] = dict(section)
    return cfg


def _override(obj, **kwargs):
    kwargs = {k: v for k, v in kwargs.items() if v is not None}
    return replace(obj, **kwargs) if kwargs else obj


def resolve_config(args) -> dict:
    cfg = load_config(getattr(args, "config", None))
    g = lambda name: getattr(args, name, None)
    cfg["glcm"] = _override(cfg["glcm"], levels=g("levels"), variant=g("variant"),
                            symmetric=False if g("asymmetric") else None)
    cfg["train"] = _override(cfg["train"], learning_rate=g("learning_rate"), momentum=g("momentum"),
                             error_goal=g("error_goal"), max_epochs=g("max_epochs"), seed=g("seed"))
    cfg["split"] = _override(cfg["split"], train_fraction=g("train_fraction"), seed=g("split_seed"),
                             stratified=False if g("no_stratify") else None)
    tiles = g("tiles")
    cfg["clahe"] = _override(cfg["clahe"], clip_limit=g("clip_limit"),
                             tiles_x=tiles[0] if tiles else None, tiles_y=tiles[1] if tiles else None)
    sel = cfg["selection"]
    sel["epoch_cap"] = g("epoch_cap") if g("epoch_cap") is not None else sel.get("epoch_cap", EPOCH_CAP)
    sel["r_tolerance"] = g("r_tolerance") if g("r_tolerance") is not None else sel.get("r_tolerance", R_TOLERANCE)
    return cfg


def _collect_inputs(paths):
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.iterdir() if q.suffix.lower() in (".pgm", ".pnm"))
        else:
            out.append(p)
    return out


def cmd_preprocess(args) -> int:
    cfg = resolve_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rois = read_roi_sidecar(args.roi) if args.roi else {}
    if args.manifest:
        entries = read_manifest(args.manifest, args.image_dir)
    else:
        entries = [ManifestEntry(p, None) for p in _collect_inputs(args.inputs)]
    failed = 0
    done = []
    for e in entries:
        roi = rois.get(e.path.name, e.roi)
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegenerateImageWarning)
                result = preprocess(read_pgm(e.path), roi, tuple(args.size), cfg["clahe"])
            for w in caught:
                log.warning("%s: %s", e.path, w.message)
            write_pgm(out / e.path.name, result)
            done.append(ManifestEntry(out / e.path.name, e.label))
            log.info("preprocessed %s -> %s", e.path, out / e.path.name)
        except (MammotexError, OSError) as exc:
            failed += 1
            log.error("%s: %s: %s", e.path, type(exc).__name__, exc)
    if args.manifest:
        write_manifest(out / "manifest.csv", done)
    return 1 if failed else 0


def cmd_extract(args) -> int:
    cfg = resolve_config(args)
    entries = read_manifest(args.manifest, args.image_dir)
    missing = [e for e in entries if not e.path.exists()]
    for e in missing:
        log.error("%s", MissingImage(f"missing image {e.path}"))
    present = [e for e in entries if e.path.exists()]
    per_image, failures = extract_corpus(present, cfg["glcm"], args.jobs)
    groups = GROUPS if args.group == "all" else (get_group(args.group),)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if per_image:
        for g in groups:
            path = out / f"group{g.id}_{g.name}.csv"
            write_dataset([img[g.id] for img in per_image], path)
            log.info("wrote %s (%d rows, %d features)", path, len(per_image), g.dimension)
    return 1 if (missing or failures or not per_image) else 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    rows = read_dataset(args.dataset)
    unlabeled = [r.source_id for r in rows if r.label is None]
    if unlabeled:
        raise MammotexError(f"rows without labels: {unlabeled[:5]}")
    scaler = fit_scaler(rows)
    X = scaler.transform(np.vstack([r.values for r in rows]))
    t = np.array([r.target for r in rows])
    X_te = t_te = None
    if args.test:
        test_rows = read_dataset(args.test)
        X_te = scaler.transform(np.vstack([r.values for r in test_rows]))
        t_te = np.array([r.target for r in test_rows])
    sizes = LayerSizes.for_rule(X.shape[1], args.rule)
    model, outcome = train(X, t, sizes, cfg["train"], scaler, X_te, t_te)
    model.save(args.model)
    print(f"architecture={sizes.input}-{sizes.hidden}-{sizes.output} hidden={sizes.hidden} "
          f"epochs={outcome.epochs_used} mse={outcome.final_mse:.6g} r_train={outcome.regression_train:.6f} "
          f"r_test={outcome.regression_test:.6f} converged={str(outcome.converged).lower()}")
    return 0


def cmd_experiment(args) -> int:
    cfg = resolve_config(args)
    sel = cfg["selection"]
    report = run_study(args.manifest, cfg["glcm"], cfg["train"], cfg["split"], args.image_dir,
                       sel["epoch_cap"], sel["r_tolerance"], args.jobs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report.to_csv())
    (out / "report.txt").write_text(report.to_text())
    resolved = {name: asdict(cfg[name]) for name in SECTIONS}
    resolved["selection"] = sel
    (out / "config.json").write_text(json.dumps(resolved, indent=2, sort_keys=True) + "\n")
    if not args.no_figures:
        from .plotting import render_report_figures
        render_report_figures(report, out)
    sys.stdout.write(report.to_text())
    return 1 if report.failures else 0


def cmd_synth(args) -> int:
    manifest = generate_synthetic_corpus(args.n, args.size, args.seed, args.out)
    log.info("wrote %d images and %s", args.n, manifest)
    return 0


def _add_glcm_flags(p):
    p.add_argument("--levels", type=int, help="GLCM gray levels after quantization (default 256)")
    p.add_argument("--variant", choices=("canonical", "as_printed"))
    p.add_argument("--asymmetric", action="store_true", help="do not add the GLCM transpose")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-image work")


def _add_train_flags(p):
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--momentum", type=float)
    p.add_argument("--error-goal", type=float)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--seed", type=int, help="weight initialization seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mammotex", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="crop, resize, remove background, median filter, CLAHE")
    p.add_argument("inputs", nargs="*", help="PGM files or directories")
    p.add_argument("--manifest", help="manifest CSV (filename,label[,x,y,w,h]) instead of inputs")
    p.add_argument("--image-dir")
    p.add_argument("--roi", help="RoI sidecar CSV: filename,x,y,w,h")
    p.add_argument("--size", type=int, nargs=2, default=(400, 400), metavar=("W", "H"))
    p.add_argument("--tiles", type=int, nargs=2, metavar=("TX", "TY"))
    p.add_argument("--clip-limit", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("extract", help="write descriptor-group dataset CSVs")
    p.add_argument("manifest")
    p.add_argument("--group", default="all", help="group id 1-9 or 'all'")
    p.add_argument("--image-dir")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    _add_glcm_flags(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", help="train one MLP on a dataset CSV")
    p.add_argument("dataset")
    p.add_argument("--rule", type=int, choices=(1, 2), default=1, help="hidden-layer sizing rule")
    p.add_argument("--test", help="held-out dataset CSV for r_test")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--config")
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("experiment", help="run the 9 groups x 2 architectures study")
    p.add_argument("manifest")
    p.add_argument("--image-dir")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.add_argument("--train-fraction", type=float)
    p.add_argument("--split-seed", type=int)
    p.add_argument("--no-stratify", action="store_true")
    p.add_argument("--epoch-cap", type=int)
    p.add_argument("--r-tolerance", type=float)
    p.add_argument("--no-figures", action="store_true")
    _add_glcm_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("synth", help="generate a labeled synthetic texture corpus")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (MammotexError, OSError, ValueError, KeyError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
