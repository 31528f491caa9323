"""The nine descriptor groups, dataset CSV I/O and bipolar input scaling."""

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (DegenerateTexture, DimensionMismatch, EmptyDataset, InconsistentWidth,
                     MalformedRow, MixedGroups, UnknownLabel)
from .first_order import first_order_features, histogram
from .glcm import DIRECTIONS, GlcmConfig, directional_feature_set, mean_over_directions
from .image import GrayImage

log = logging.getLogger(__name__)

LABELS = ("benign", "malignant")
SCALE_CLAMP = 1.5


@dataclass(frozen=True)
class DescriptorGroup:
    id: int
    name: str
    dimension: int


GROUPS = (
    DescriptorGroup(1, "first_order", 5),
    DescriptorGroup(2, "second_order_mean", 6),
    DescriptorGroup(3, "second_order_combination", 24),
    DescriptorGroup(4, "second_order_0", 6),
    DescriptorGroup(5, "second_order_45", 6),
    DescriptorGroup(6, "second_order_90", 6),
    DescriptorGroup(7, "second_order_135", 6),
    DescriptorGroup(8, "first_and_second_mean", 11),
    DescriptorGroup(9, "first_and_second_combination", 29),
)
GROUPS_BY_ID = {g.id: g for g in GROUPS}


def get_group(key) -> DescriptorGroup:
    """Look a group up by id (int or digit string) or by name."""
    if isinstance(key, DescriptorGroup):
        return key
    if isinstance(key, str) and not key.isdigit():
        for g in GROUPS:
            if g.name == key:
                return g
        raise KeyError(f"unknown descriptor group {key!r}")
    try:
        return GROUPS_BY_ID[int(key)]
    except KeyError:
        raise KeyError(f"descriptor group id must be 1..9, got {key!r}") from None


def parse_label(text: str) -> str:
    label = text.strip().lower()
    if label not in LABELS:
        raise UnknownLabel(f"unknown label {text!r}; expected one of {LABELS}")
    return label


@dataclass(eq=False)
class DescriptorVector:
    group: DescriptorGroup | None
    values: np.ndarray
    label: str | None = None
    source_id: str = ""
    # names of components replaced by 0 because they were undefined
    flags: tuple = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.group is not None and self.values.shape != (self.group.dimension,):
            raise DimensionMismatch(
                f"group {self.group.id} expects {self.group.dimension} values, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise MalformedRow(f"{self.source_id}: non-finite descriptor value")

    @property
    def target(self) -> float:
        return 1.0 if self.label == "malignant" else -1.0


def _feature_flags(prefix, features):
    return (f"{prefix}correlation",) if features.degenerate else ()


def extract_all(image: GrayImage, config: GlcmConfig = GlcmConfig(), label=None, source_id=""):
    """Compute every feature once and return the nine group vectors keyed by group id.

    A constant image has no defined skewness, kurtosis or GLCM correlation in
    any direction and raises :class:`DegenerateTexture`. Otherwise undefined
    components are replaced by 0 and named in ``flags``.
    """
    px = image.pixels
    if px.min() == px.max():
        raise DegenerateTexture(f"{source_id or 'image'} is constant; no texture to describe")
    first = first_order_features(histogram(image), strict=False)
    first_flags = ("skewness", "kurtosis") if first.degenerate else ()
    per_dir = directional_feature_set(image, config, strict=False)
    mean2 = mean_over_directions(per_dir)

    v1 = np.array(first.as_tuple())
    v2 = np.array(mean2.as_tuple())
    dirs = [np.array(per_dir[theta].as_tuple()) for theta in DIRECTIONS]
    v3 = np.concatenate(dirs)
    dir_flags = [_feature_flags(f"{theta}:", per_dir[theta]) for theta in DIRECTIONS]
    all_dir_flags = tuple(f for fl in dir_flags for f in fl)
    mean_flags = ("mean:correlation",) if mean2.degenerate else ()

    parts = {
        1: (v1, first_flags),
        2: (v2, mean_flags),
        3: (v3, all_dir_flags),
        4: (dirs[0], dir_flags[0]),
        5: (dirs[1], dir_flags[1]),
        6: (dirs[2], dir_flags[2]),
        7: (dirs[3], dir_flags[3]),
        8: (np.concatenate([v1, v2]), first_flags + mean_flags),
        9: (np.concatenate([v1, v3]), first_flags + all_dir_flags),
    }
    out = {}
    for gid, (values, flags) in parts.items():
        if flags:
            log.warning("%s group %d: substituted 0 for %s", source_id or "image", gid, ", ".join(flags))
        out[gid] = DescriptorVector(GROUPS_BY_ID[gid], values, label, source_id, flags)
    return out


def extract_group(image: GrayImage, group, config: GlcmConfig = GlcmConfig(), label=None, source_id=""):
    group = get_group(group)
    return extract_all(image, config, label, source_id)[group.id]


def _as_matrix(rows):
    rows = list(rows)
    if not rows:
        raise EmptyDataset("no rows")
    if isinstance(rows[0], DescriptorVector):
        groups = {r.group.id for r in rows if r.group is not None}
        if len(groups) > 1:
            raise MixedGroups(f"rows come from several descriptor groups: {sorted(groups)}")
        widths = {r.values.size for r in rows}
        if len(widths) > 1:
            raise InconsistentWidth(f"rows have differing widths: {sorted(widths)}")
        return np.vstack([r.values for r in rows])
    return np.atleast_2d(np.asarray(rows, dtype=np.float64))


@dataclass(eq=False)
class Scaler:
    """Per-feature affine map of the training range onto [-1, 1]."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins = np.asarray(self.mins, dtype=np.float64)
        self.maxs = np.asarray(self.maxs, dtype=np.float64)

    @property
    def dimension(self) -> int:
        return self.mins.size

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.dimension:
            raise DimensionMismatch(f"scaler expects {self.dimension} features, got {X.shape[-1]}")
        scaled = 2.0 * (X - self.mins) / (self.maxs - self.mins) - 1.0
        return np.clip(scaled, -SCALE_CLAMP, SCALE_CLAMP)

    def to_dict(self):
        return {"mins": [float(v) for v in self.mins], "maxs": [float(v) for v in self.maxs]}

    @classmethod
    def from_dict(cls, d):
        return cls(d["mins"], d["maxs"])


def fit_scaler(rows) -> Scaler:
    """Learn per-feature bounds; constant features get the range [min, min + 1]."""
    X = _as_matrix(rows)
    if X.shape[0] < 2:
        raise EmptyDataset(f"need at least 2 rows to fit a scaler, got {X.shape[0]}")
    mins = X.min(axis=0)
    maxs = X.max(axis=0)
    maxs = np.where(maxs > mins, maxs, mins + 1.0)
    return Scaler(mins, maxs)


def apply_scaler(scaler: Scaler, row) -> np.ndarray:
    values = row.values if isinstance(row, DescriptorVector) else row
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size != scaler.dimension:
        raise DimensionMismatch(f"scaler expects {scaler.dimension} features, got {values.size}")
    return scaler.transform(values)


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def write_dataset(rows, destination) -> None:
    """Write rows as ``source_id,label,f1..fK`` CSV to a path or text stream."""
    rows = list(rows)
    if not rows:
        raise EmptyDataset("no rows to write")
    width = rows[0].values.size
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["source_id", "label"] + [f"f{k}" for k in range(1, width + 1)])
    for r in rows:
        if r.values.size != width:
            raise InconsistentWidth(f"{r.source_id}: {r.values.size} values, expected {width}")
        writer.writerow([r.source_id, r.label or ""] + [format_float(v) for v in r.values])
    if hasattr(destination, "write"):
        destination.write(buf.getvalue())
    else:
        Path(destination).write_text(buf.getvalue())


def read_dataset(source, group=None) -> list:
    """Read a dataset CSV. ``group`` is inferred from the width when unambiguous."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("dataset file is empty") from None
    expected = [f"f{k}" for k in range(1, len(header) - 1)]
    if len(header) < 3 or header[:2] != ["source_id", "label"] or header[2:] != expected:
        raise MalformedRow(f"bad dataset header: {header[:5]}...")
    width = len(header) - 2
    if group is not None:
        group = get_group(group)
        if group.dimension != width:
            raise InconsistentWidth(f"group {group.id} has {group.dimension} features, file has {width}")
    else:
        matches = [g for g in GROUPS if g.dimension == width]
        group = matches[0] if len(matches) == 1 else None
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if not rec:
            continue
        if len(rec) != width + 2:
            raise InconsistentWidth(f"line {lineno}: {len(rec) - 2} values under a {width}-feature header")
        try:
            values = [float(v) for v in rec[2:]]
        except ValueError:
            raise MalformedRow(f"line {lineno}: non-numeric value") from None
        label = parse_label(rec[1]) if rec[1].strip() else None
        rows.append(DescriptorVector(group, values, label, rec[0]))
    return rows
