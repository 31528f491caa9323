"""The descriptor-selection study: 9 groups x 2 hidden-layer rules, trained and ranked."""

import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .descriptors import GROUPS, extract_all, fit_scaler, format_float
from .errors import IncompleteReport, MammotexError, TooFewSamples
from .glcm import GlcmConfig
from .manifest import read_manifest
from .mlp import LayerSizes, TrainConfig, TrainOutcome, train
from .pgm_io import read_pgm

log = logging.getLogger(__name__)

ARCHITECTURES = {"MLP-1": 1, "MLP-2": 2}
EPOCH_CAP = 1000
R_TOLERANCE = 1e-3
CSV_COLUMNS = ("group", "arch", "input", "hidden", "epochs", "mse", "r_train", "r_test", "converged", "selected")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    stratified: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")


def split_indices(labels, spec: SplitSpec = SplitSpec()):
    """Return sorted (train_idx, test_idx) for a seeded, optionally stratified split.

    The training set always holds round(train_fraction * n) items; stratified
    splits hand out per-class remainders by largest fractional part.
    """
    labels = list(labels)
    n = len(labels)
    n_train = int(math.floor(spec.train_fraction * n + 0.5))
    if n < 2 or n_train < 1 or n_train >= n:
        raise TooFewSamples(f"cannot split {n} rows with train_fraction {spec.train_fraction}")
    rng = np.random.default_rng(spec.seed)
    if not spec.stratified:
        order = rng.permutation(n)
        return sorted(order[:n_train].tolist()), sorted(order[n_train:].tolist())

    classes = sorted(set(labels), key=str)
    members = {c: [i for i, lab in enumerate(labels) if lab == c] for c in classes}
    for c, idx in members.items():
        if len(idx) < 2:
            raise TooFewSamples(f"class {c!r} has {len(idx)} rows; stratified split needs >= 2")
    ideal = {c: spec.train_fraction * len(members[c]) for c in classes}
    quota = {c: int(math.floor(ideal[c])) for c in classes}
    leftover = n_train - sum(quota.values())
    for c in sorted(classes, key=lambda c: (-(ideal[c] - quota[c]), str(c)))[:max(leftover, 0)]:
        quota[c] += 1
    for c in classes:
        # each class keeps at least one row on both sides
        quota[c] = min(max(quota[c], 1), len(members[c]) - 1)
    train_idx, test_idx = [], []
    for c in classes:
        perm = rng.permutation(members[c])
        train_idx += perm[:quota[c]].tolist()
        test_idx += perm[quota[c]:].tolist()
    return sorted(train_idx), sorted(test_idx)


def split(rows, spec: SplitSpec = SplitSpec()):
    rows = list(rows)
    tr, te = split_indices([r.label for r in rows], spec)
    return [rows[i] for i in tr], [rows[i] for i in te]


@dataclass
class GroupResult:
    group_id: int
    architecture: str
    sizes: LayerSizes
    outcome: TrainOutcome | None = None
    error: str | None = None


@dataclass
class ExperimentReport:
    results: list
    config: dict
    epoch_cap: int = EPOCH_CAP
    r_tolerance: float = R_TOLERANCE
    selected: tuple = ()
    failures: list = field(default_factory=list)

    def result(self, group_id, architecture):
        for r in self.results:
            if r.group_id == group_id and r.architecture == architecture:
                return r
        raise IncompleteReport(f"no result for group {group_id} {architecture}")

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_COLUMNS) + "\n")
        for r in self.results:
            o = r.outcome
            cells = [r.group_id, r.architecture, r.sizes.input, r.sizes.hidden]
            if o is None:
                cells += ["", "nan", "nan", "nan", "false"]
            else:
                cells += [o.epochs_used, format_float(o.final_mse), format_float(o.regression_train),
                          format_float(o.regression_test), str(o.converged).lower()]
            cells.append(str(r.group_id in self.selected).lower())
            buf.write(",".join(str(c) for c in cells) + "\n")
        return buf.getvalue()

    def to_text(self) -> str:
        lines = ["Descriptor selection report", ""]
        lines += [f"config: {json.dumps(self.config, sort_keys=True)}",
                  f"selection: r_train >= 1 - {self.r_tolerance:g} and epochs < {self.epoch_cap} "
                  f"and converged, for both MLP-1 and MLP-2", ""]
        head = f"{'grp':>3}  {'name':<28}  {'arch':<5}  {'M-N-O':<8}  {'epochs':>6}  {'mse':>10}  " \
               f"{'r_train':>8}  {'r_test':>8}  conv  sel"
        lines += [head, "-" * len(head)]
        names = {g.id: g.name for g in GROUPS}
        for r in self.results:
            o = r.outcome
            arch = f"{r.sizes.input}-{r.sizes.hidden}-{r.sizes.output}"
            sel = "*" if r.group_id in self.selected else ""
            if o is None:
                lines.append(f"{r.group_id:>3}  {names[r.group_id]:<28}  {r.architecture:<5}  {arch:<8}  "
                             f"FAILED: {r.error}")
                continue
            lines.append(f"{r.group_id:>3}  {names[r.group_id]:<28}  {r.architecture:<5}  {arch:<8}  "
                         f"{o.epochs_used:>6}  {o.final_mse:>10.3e}  {o.regression_train:>8.5f}  "
                         f"{o.regression_test:>8.5f}  {'yes' if o.converged else 'no':<4}  {sel}")
        lines += ["", "selected groups: " + (", ".join(f"{g} ({names[g]})" for g in self.selected) or "none")]
        for f in self.failures:
            lines.append(f"failure: {f}")
        return "\n".join(lines) + "\n"


def select_best(report: ExperimentReport, epoch_cap: int = EPOCH_CAP, r_tolerance: float = R_TOLERANCE):
    """Group ids whose MLP-1 and MLP-2 runs both converge with R ~ 1 in fewer than ``epoch_cap`` epochs."""
    selected = []
    for g in GROUPS:
        ok = True
        for arch in ARCHITECTURES:
            o = report.result(g.id, arch).outcome
            if o is None or not (o.converged and o.epochs_used < epoch_cap
                                 and o.regression_train >= 1.0 - r_tolerance):
                ok = False
        if ok:
            selected.append(g.id)
    return tuple(selected)


def _extract_entry(args):
    entry, glcm_config = args
    image = read_pgm(entry.path)
    return extract_all(image, glcm_config, entry.label, entry.source_id)


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def extract_corpus(entries, glcm_config: GlcmConfig = GlcmConfig(), jobs: int = 1):
    """Extract all groups for every manifest entry, in manifest order.

    Returns ``(per_image, failures)``; unreadable or constant images are skipped
    and described in ``failures``.
    """
    per_image, failures = [], []
    results = _map(_safe_extract, [(e, glcm_config) for e in entries], jobs)
    for entry, res in zip(entries, results):
        if isinstance(res, str):
            log.error("%s: %s", entry.source_id, res)
            failures.append(f"{entry.source_id}: {res}")
        else:
            per_image.append(res)
    return per_image, failures


def _safe_extract(args):
    try:
        return _extract_entry(args)
    except (MammotexError, OSError) as exc:
        return f"{type(exc).__name__}: {exc}"


def _train_one(args):
    gid, arch, X_tr, t_tr, X_te, t_te, train_config, scaler = args
    sizes = LayerSizes.for_rule(X_tr.shape[1], ARCHITECTURES[arch])
    try:
        _, outcome = train(X_tr, t_tr, sizes, train_config, scaler, X_te, t_te)
        return GroupResult(gid, arch, sizes, outcome)
    except (MammotexError, FloatingPointError) as exc:
        return GroupResult(gid, arch, sizes, None, f"{type(exc).__name__}: {exc}")


def run_study_on_vectors(per_image, train_config: TrainConfig = TrainConfig(),
                         split_spec: SplitSpec = SplitSpec(), config_echo=None, failures=(),
                         epoch_cap=EPOCH_CAP, r_tolerance=R_TOLERANCE, jobs=1) -> ExperimentReport:
    """Run the 18 trainings on already-extracted per-image group vectors."""
    labels = [img[1].label for img in per_image]
    tr_idx, te_idx = split_indices(labels, split_spec)
    tasks = []
    for g in GROUPS:
        rows = [img[g.id] for img in per_image]
        train_rows = [rows[i] for i in tr_idx]
        test_rows = [rows[i] for i in te_idx]
        scaler = fit_scaler(train_rows)
        X_tr = scaler.transform(np.vstack([r.values for r in train_rows]))
        X_te = scaler.transform(np.vstack([r.values for r in test_rows]))
        t_tr = np.array([r.target for r in train_rows])
        t_te = np.array([r.target for r in test_rows])
        for arch in ARCHITECTURES:
            tasks.append((g.id, arch, X_tr, t_tr, X_te, t_te, train_config, scaler))
    results = _map(_train_one, tasks, jobs)
    for r in results:
        if r.error:
            log.error("group %d %s failed: %s", r.group_id, r.architecture, r.error)
    echo = dict(config_echo or {})
    echo.setdefault("train", asdict(train_config))
    echo.setdefault("split", asdict(split_spec))
    echo["n_train"], echo["n_test"] = len(tr_idx), len(te_idx)
    report = ExperimentReport(results, echo, epoch_cap, r_tolerance,
                              failures=list(failures) + [f"group {r.group_id} {r.architecture}: {r.error}"
                                                         for r in results if r.error])
    report.selected = select_best(report, epoch_cap, r_tolerance)
    return report


def run_study(manifest, glcm_config: GlcmConfig = GlcmConfig(), train_config: TrainConfig = TrainConfig(),
              split_spec: SplitSpec = SplitSpec(), image_dir=None, epoch_cap=EPOCH_CAP,
              r_tolerance=R_TOLERANCE, jobs=1) -> ExperimentReport:
    entries = read_manifest(manifest, image_dir) if not isinstance(manifest, list) else manifest
    per_image, failures = extract_corpus(entries, glcm_config, jobs)
    echo = {"glcm": asdict(glcm_config), "train": asdict(train_config), "split": asdict(split_spec),
            "epoch_cap": epoch_cap, "r_tolerance": r_tolerance, "n_images": len(entries)}
    return run_study_on_vectors(per_image, train_config, split_spec, echo, failures,
                                epoch_cap, r_tolerance, jobs)
