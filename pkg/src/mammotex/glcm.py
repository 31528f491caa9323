"""Gray-level co-occurrence matrices and the six second-order features built on them."""

from dataclasses import dataclass, field

import numpy as np

from .errors import MissingDirection, NoValidPairs, ZeroMarginalVariance
from .first_order import entropy_bits
from .image import GrayImage

DIRECTIONS = (0, 45, 90, 135)
FEATURE_NAMES = ("asm", "contrast", "correlation", "variance", "idm", "entropy")
VARIANTS = ("canonical", "as_printed")


@dataclass(frozen=True)
class GlcmConfig:
    levels: int = 256
    distance: int = 1
    symmetric: bool = True
    variant: str = "canonical"

    def __post_init__(self):
        if not 2 <= self.levels <= 256:
            raise ValueError(f"levels must lie in [2, 256], got {self.levels}")
        if self.distance < 1:
            raise ValueError(f"distance must be >= 1, got {self.distance}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")


@dataclass(frozen=True, eq=False)
class Glcm:
    matrix: np.ndarray
    direction: int
    config: GlcmConfig


@dataclass(frozen=True)
class GlcmFeatures:
    asm: float
    contrast: float
    correlation: float
    variance: float
    idm: float
    entropy: float
    mean_i: float = field(default=0.0, compare=False)
    mean_j: float = field(default=0.0, compare=False)
    std_i: float = field(default=0.0, compare=False)
    std_j: float = field(default=0.0, compare=False)
    degenerate: bool = field(default=False, compare=False)

    def as_tuple(self):
        return tuple(getattr(self, name) for name in FEATURE_NAMES)


def offset(direction: int, distance: int = 1):
    """(d_col, d_row) for a direction in degrees; rows grow downward."""
    d = distance
    table = {0: (d, 0), 45: (d, -d), 90: (0, -d), 135: (-d, -d)}
    try:
        return table[direction]
    except KeyError:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction}") from None


def quantize(pixels: np.ndarray, levels: int) -> np.ndarray:
    return (pixels.astype(np.int64) * levels) // 256


def compute_glcm(image: GrayImage, direction: int, config: GlcmConfig = GlcmConfig()) -> Glcm:
    dx, dy = offset(direction, config.distance)
    q = quantize(image.pixels, config.levels)
    h, w = q.shape
    # reference pixel p=(r, c) pairs with (r+dy, c+dx)
    r_lo, r_hi = max(0, -dy), min(h, h - dy)
    c_lo, c_hi = max(0, -dx), min(w, w - dx)
    if r_lo >= r_hi or c_lo >= c_hi:
        raise NoValidPairs(f"{image.width}x{image.height} image has no pairs at {direction} deg, d={config.distance}")
    ref = q[r_lo:r_hi, c_lo:c_hi].ravel()
    nb = q[r_lo + dy:r_hi + dy, c_lo + dx:c_hi + dx].ravel()
    G = config.levels
    counts = np.bincount(ref * G + nb, minlength=G * G).reshape(G, G).astype(np.float64)
    if config.symmetric:
        counts = counts + counts.T
    return Glcm(counts / counts.sum(), direction, config)


def glcm_features(glcm: Glcm, strict: bool = True) -> GlcmFeatures:
    """The six second-order features of a normalized GLCM.

    ``canonical`` uses Haralick's definitions (ASM = sum P^2, IDM = sum P/(1+(i-j)^2),
    variance = sum (i-mu)^2 P). ``as_printed`` keeps the literal alternatives:
    ASM = sum P/(1+|i-j|), IDM = sum over i != j of P^2/|i-j|, variance = entropy.
    With ``strict=False`` a zero marginal spread sets correlation to 0 and
    ``degenerate=True`` instead of raising :class:`ZeroMarginalVariance`.
    """
    P = glcm.matrix
    G = P.shape[0]
    i = np.arange(G, dtype=np.float64)[:, None]
    j = np.arange(G, dtype=np.float64)[None, :]
    diff = i - j
    absdiff = np.abs(diff)

    mean_i = float((i * P).sum())
    mean_j = float((j * P).sum())
    var_i = float(((i - mean_i) ** 2 * P).sum())
    var_j = float(((j - mean_j) ** 2 * P).sum())
    std_i, std_j = np.sqrt(var_i), np.sqrt(var_j)

    entropy = entropy_bits(P)
    contrast = float((diff * diff * P).sum())
    degenerate = std_i <= 0.0 or std_j <= 0.0
    if degenerate:
        if strict:
            raise ZeroMarginalVariance("GLCM marginal has zero variance: correlation undefined")
        correlation = 0.0
    else:
        correlation = float(((i - mean_i) * (j - mean_j) * P).sum() / (std_i * std_j))

    if glcm.config.variant == "canonical":
        asm = float((P * P).sum())
        idm = float((P / (1.0 + diff * diff)).sum())
        variance = var_i
    else:
        asm = float((P / (1.0 + absdiff)).sum())
        off = absdiff > 0
        idm = float((P[off] ** 2 / absdiff[off]).sum())
        variance = entropy

    return GlcmFeatures(asm, contrast, correlation, variance, idm, entropy,
                        mean_i, mean_j, float(std_i), float(std_j), degenerate)


def directional_feature_set(image: GrayImage, config: GlcmConfig = GlcmConfig(), strict: bool = True):
    """Feature sets at 0, 45, 90 and 135 degrees, keyed (and ordered) by direction."""
    return {theta: glcm_features(compute_glcm(image, theta, config), strict=strict) for theta in DIRECTIONS}


def mean_over_directions(sets) -> GlcmFeatures:
    missing = [theta for theta in DIRECTIONS if theta not in sets]
    if missing:
        raise MissingDirection(f"missing directions: {missing}")
    stacked = np.array([sets[theta].as_tuple() for theta in DIRECTIONS])
    means = stacked.mean(axis=0)
    return GlcmFeatures(*(float(v) for v in means),
                        degenerate=any(sets[theta].degenerate for theta in DIRECTIONS))
