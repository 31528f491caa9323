"""Manifest (``filename,label[,x,y,w,h]``) and RoI sidecar (``filename,x,y,w,h``) files."""

import csv
from dataclasses import dataclass
from pathlib import Path

from .descriptors import parse_label
from .errors import MalformedRow
from .preprocess import CropRect


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: str | None
    roi: CropRect | None = None

    @property
    def source_id(self) -> str:
        return self.path.name


def _rows(path):
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if r and not r[0].startswith("#")]


def _roi(fields, where):
    try:
        x, y, w, h = (int(v) for v in fields)
    except ValueError:
        raise MalformedRow(f"{where}: RoI fields must be integers") from None
    return CropRect(x, y, w, h)


def read_manifest(path, image_dir=None) -> list:
    """Parse a manifest; image paths resolve against ``image_dir`` or the manifest's folder."""
    path = Path(path)
    base = Path(image_dir) if image_dir is not None else path.parent
    rows = _rows(path)
    if rows and rows[0][0].strip().lower() == "filename":
        rows = rows[1:]
    entries = []
    for n, r in enumerate(rows, start=1):
        where = f"{path.name} row {n}"
        if len(r) not in (2, 6):
            raise MalformedRow(f"{where}: expected filename,label[,x,y,w,h], got {len(r)} fields")
        roi = _roi(r[2:], where) if len(r) == 6 else None
        entries.append(ManifestEntry(base / r[0].strip(), parse_label(r[1]), roi))
    return entries


def write_manifest(path, entries) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["filename", "label"])
        for e in entries:
            writer.writerow([e.path.name, e.label or ""])


def read_roi_sidecar(path) -> dict:
    rows = _rows(path)
    if rows and rows[0][0].strip().lower() == "filename":
        rows = rows[1:]
    out = {}
    for n, r in enumerate(rows, start=1):
        if len(r) != 5:
            raise MalformedRow(f"{Path(path).name} row {n}: expected filename,x,y,w,h")
        out[r[0].strip()] = _roi(r[1:], f"{Path(path).name} row {n}")
    return out
