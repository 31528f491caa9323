"""Seeded two-class texture corpus standing in for real mammogram RoIs.

Class ``benign``: smooth Gaussian bumps plus faint noise (low contrast, high IDM).
Class ``malignant``: near-horizontal sinusoidal stripes plus speckle, so the
contrast is highest along the stripe-orthogonal (90 degree) direction.
"""

import csv
from pathlib import Path

import numpy as np

from .errors import IoFailure
from .image import GrayImage
from .pgm_io import write_pgm

MANIFEST_NAME = "manifest.csv"


def smooth_blobs(rng, size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    field = np.zeros((size, size))
    for _ in range(rng.integers(3, 7)):
        cy, cx = rng.uniform(0, size, 2)
        sigma = rng.uniform(0.12, 0.25) * size
        field += rng.uniform(0.5, 1.0) * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma ** 2))
    field = (field - field.min()) / max(field.max() - field.min(), 1e-12)
    img = 70 + 90 * field + rng.normal(0, 1.5, (size, size))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def oriented_stripes(rng, size):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    # wave vector within 15 degrees of vertical -> stripes run roughly horizontally
    angle = np.deg2rad(90 + rng.uniform(-15, 15))
    period = rng.uniform(3.0, 6.0)
    phase = rng.uniform(0, 2 * np.pi)
    wave = np.sin(2 * np.pi * (xx * np.cos(angle) + yy * np.sin(angle)) / period + phase)
    img = 115 + 55 * wave + rng.normal(0, 12, (size, size))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def generate_synthetic_corpus(n_images: int, size: int, seed: int, out_dir):
    """Write ``n_images`` PGMs (alternating benign/malignant) plus ``manifest.csv``.

    Returns the manifest path.
    """
    if n_images < 10 or n_images % 2:
        raise ValueError(f"n_images must be an even number >= 10, got {n_images}")
    if size < 8:
        raise ValueError(f"size must be >= 8, got {size}")
    out = Path(out_dir)
    rng = np.random.default_rng(seed)
    rows = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        for k in range(n_images):
            label = "benign" if k % 2 == 0 else "malignant"
            pixels = smooth_blobs(rng, size) if label == "benign" else oriented_stripes(rng, size)
            name = f"synth_{k:04d}.pgm"
            write_pgm(out / name, GrayImage(pixels))
            rows.append((name, label))
        with open(out / MANIFEST_NAME, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["filename", "label"])
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    return out / MANIFEST_NAME

