"""Histogram (first-order) texture statistics."""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTexture, EmptyImage
from .image import GrayImage

LEVELS = 256


@dataclass(frozen=True, eq=False)
class Histogram:
    counts: np.ndarray
    total: int

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.total

    @classmethod
    def from_counts(cls, counts) -> "Histogram":
        counts = np.asarray(counts, dtype=np.int64)
        total = int(counts.sum())
        if total <= 0:
            raise EmptyImage("histogram has no samples")
        return cls(counts, total)


@dataclass(frozen=True)
class FirstOrderFeatures:
    mean: float
    variance: float
    skewness: float
    kurtosis: float
    entropy: float
    degenerate: bool = False

    NAMES = ("mean", "variance", "skewness", "kurtosis", "entropy")

    def as_tuple(self):
        return (self.mean, self.variance, self.skewness, self.kurtosis, self.entropy)


def histogram(image: GrayImage) -> Histogram:
    px = image.pixels.ravel()
    if px.size == 0:
        raise EmptyImage("image has no pixels")
    return Histogram(np.bincount(px, minlength=LEVELS).astype(np.int64), int(px.size))


def entropy_bits(p) -> float:
    """Shannon entropy in bits, treating 0 log 0 as 0."""
    p = np.asarray(p, dtype=np.float64).ravel()
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def first_order_features(hist: Histogram, strict: bool = True) -> FirstOrderFeatures:
    """Mean, variance, skewness, excess kurtosis and entropy of a gray-level histogram.

    With ``strict=False`` a zero-variance histogram yields skewness = kurtosis = 0
    and ``degenerate=True`` instead of raising :class:`DegenerateTexture`.
    """
    # weight by raw counts and divide once; keeps symmetric cases exact
    c = hist.counts.astype(np.float64)
    n = float(hist.total)
    f = np.arange(c.size, dtype=np.float64)
    mean = float((f * c).sum() / n)
    d = f - mean
    variance = float((d * d * c).sum() / n)
    entropy = entropy_bits(hist.probs)
    if variance <= 0.0:
        if strict:
            raise DegenerateTexture("zero-variance histogram: skewness and kurtosis undefined")
        return FirstOrderFeatures(mean, 0.0, 0.0, 0.0, entropy, degenerate=True)
    sigma = np.sqrt(variance)
    skewness = float((d ** 3 * c).sum() / n / sigma ** 3)
    kurtosis = float((d ** 4 * c).sum() / n / variance ** 2 - 3.0)
    return FirstOrderFeatures(mean, variance, skewness, kurtosis, entropy)
