"""Mammogram preprocessing: RoI crop, resize, background removal, median filter, CLAHE."""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DegenerateImageWarning, InvalidParams, OutOfBounds
from .image import GrayImage

log = logging.getLogger(__name__)

TARGET_SIZE = (400, 400)


@dataclass(frozen=True)
class CropRect:
    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise OutOfBounds(f"crop extent must be positive, got {self.width}x{self.height}")


@dataclass(frozen=True)
class ClaheParams:
    tiles_x: int = 8
    tiles_y: int = 8
    clip_limit: float = 0.01
    bins: int = 256

    def __post_init__(self):
        if self.tiles_x < 1 or self.tiles_y < 1:
            raise InvalidParams("tile grid must be at least 1x1")
        if not 0 < self.clip_limit <= 1:
            raise InvalidParams(f"clip_limit must lie in (0, 1], got {self.clip_limit}")
        if not 2 <= self.bins <= 256:
            raise InvalidParams(f"bins must lie in [2, 256], got {self.bins}")


def crop(image: GrayImage, rect: CropRect) -> GrayImage:
    if rect.x < 0 or rect.y < 0 or rect.x + rect.width > image.width or rect.y + rect.height > image.height:
        raise OutOfBounds(f"{rect} does not fit inside a {image.width}x{image.height} image")
    return GrayImage(image.pixels[rect.y:rect.y + rect.height, rect.x:rect.x + rect.width].copy())


def _round_clip(values):
    return np.clip(np.floor(values + 0.5), 0, 255).astype(np.uint8)


def _bilinear_axis(n_in, n_out):
    # half-pixel-center mapping, edge samples clamped
    src = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
    src = np.clip(src, 0, n_in - 1)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def resize_to(image: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resize with half-pixel-center sampling, rounded and clamped to 8 bits."""
    if width < 1 or height < 1:
        raise InvalidParams(f"target size must be positive, got {width}x{height}")
    if (width, height) == (image.width, image.height):
        return image
    src = image.pixels.astype(np.float64)
    r0, r1, wr = _bilinear_axis(image.height, height)
    c0, c1, wc = _bilinear_axis(image.width, width)
    wr = wr[:, None]
    wc = wc[None, :]
    top = src[r0][:, c0] * (1 - wc) + src[r0][:, c1] * wc
    bottom = src[r1][:, c0] * (1 - wc) + src[r1][:, c1] * wc
    return GrayImage(_round_clip(top * (1 - wr) + bottom * wr))


def otsu_threshold(counts) -> int:
    """Level t maximizing between-class variance of {v <= t} vs {v > t}.

    Ties resolve to the smallest t. Returns -1 when only one level is occupied.
    """
    counts = np.asarray(counts, dtype=np.float64)
    levels = np.arange(counts.size)
    total = counts.sum()
    w0 = np.cumsum(counts)
    w1 = total - w0
    m0 = np.cumsum(counts * levels)
    mean_total = m0[-1]
    valid = (w0 > 0) & (w1 > 0)
    if not valid.any():
        return -1
    between = np.zeros_like(counts)
    # sigma_b^2 * total^2 = (mean_total * w0 - total * m0)^2 / (w0 * w1)
    num = mean_total * w0[valid] - total * m0[valid]
    between[valid] = num * num / (w0[valid] * w1[valid])
    between[~valid] = -1.0
    return int(np.argmax(between))


def remove_background(image: GrayImage) -> GrayImage:
    """Zero the dark background surrounding the largest bright region.

    A pixel is cleared when it is at or below the Otsu threshold and not
    enclosed by the largest 4-connected above-threshold component (holes in
    that component are kept). Above-threshold pixels are never modified.
    """
    px = image.pixels
    t = otsu_threshold(np.bincount(px.ravel(), minlength=256))
    if t < 0:
        warnings.warn("constant image: background removal skipped", DegenerateImageWarning, stacklevel=2)
        return image
    bright = px > t
    labels, n = ndimage.label(bright)  # default structure is 4-connectivity in 2-D
    sizes = np.bincount(labels.ravel(), minlength=n + 1)
    sizes[0] = 0
    keep = ndimage.binary_fill_holes(labels == int(np.argmax(sizes)))
    out = px.copy()
    out[~bright & ~keep] = 0
    return GrayImage(out)


def median_filter(image: GrayImage) -> GrayImage:
    """3x3 median with edge replication."""
    return GrayImage(ndimage.median_filter(image.pixels, size=3, mode="nearest"))


def _tile_edges(n, tiles):
    # last tile absorbs the remainder
    size = n // tiles
    edges = [i * size for i in range(tiles)] + [n]
    return edges


def clip_histogram(hist, threshold):
    """Clip ``hist`` at ``threshold`` counts and spread the excess over bins with room.

    Integer counts are preserved exactly. No bin ends above ``threshold`` as long
    as ``threshold * len(hist) >= hist.sum()``.
    """
    h = np.minimum(hist, threshold).astype(np.int64)
    excess = int(hist.sum() - h.sum())
    while excess > 0:
        room = threshold - h
        open_bins = np.flatnonzero(room > 0)
        if open_bins.size == 0:
            break
        share = excess // open_bins.size
        if share == 0:
            # spread the last few counts evenly across the open bins
            step = open_bins.size / excess
            picks = open_bins[(np.arange(excess) * step).astype(np.intp)]
            h[picks] += 1
            excess = 0
        else:
            add = np.minimum(room[open_bins], share)
            h[open_bins] += add
            excess -= int(add.sum())
    if excess > 0:
        h += excess // h.size
        h[: excess % h.size] += 1
    return h


def clip_threshold(params: ClaheParams, tile_pixels: int) -> int:
    """Per-tile clip limit in counts, never below the uniform level ceil(n / bins)."""
    return max(int(math.floor(params.clip_limit * tile_pixels)), -(-tile_pixels // params.bins), 1)


def clahe_tiles(image: GrayImage, params: ClaheParams = ClaheParams()):
    """Compute per-tile clipped histograms, thresholds and gray-level mappings.

    Returns ``(row_edges, col_edges, clipped, thresholds, mappings)`` where
    ``clipped`` has shape (tiles_y, tiles_x, bins) and ``mappings`` has shape
    (tiles_y, tiles_x, 256) with float output levels in [0, 255].
    """
    if params.tiles_y > image.height or params.tiles_x > image.width:
        raise InvalidParams(
            f"{params.tiles_x}x{params.tiles_y} tile grid exceeds {image.width}x{image.height} image")
    px = image.pixels
    row_edges = _tile_edges(image.height, params.tiles_y)
    col_edges = _tile_edges(image.width, params.tiles_x)
    min_tile = (image.height // params.tiles_y) * (image.width // params.tiles_x)
    if params.clip_limit * min_tile < 1:
        raise InvalidParams(
            f"clip_limit {params.clip_limit} gives less than one count on {min_tile}-pixel tiles")
    bin_of_level = (np.arange(256) * params.bins) // 256
    clipped = np.zeros((params.tiles_y, params.tiles_x, params.bins), dtype=np.int64)
    thresholds = np.zeros((params.tiles_y, params.tiles_x), dtype=np.int64)
    mappings = np.zeros((params.tiles_y, params.tiles_x, 256))
    for ty in range(params.tiles_y):
        for tx in range(params.tiles_x):
            tile = px[row_edges[ty]:row_edges[ty + 1], col_edges[tx]:col_edges[tx + 1]]
            hist = np.bincount(bin_of_level[tile.ravel()], minlength=params.bins)
            thr = clip_threshold(params, tile.size)
            h = clip_histogram(hist, thr)
            cdf = np.cumsum(h)
            clipped[ty, tx] = h
            thresholds[ty, tx] = thr
            mappings[ty, tx] = 255.0 * cdf[bin_of_level] / tile.size
    return row_edges, col_edges, clipped, thresholds, mappings


def _interp_axis(n, edges):
    centers = np.array([(edges[i] + edges[i + 1] - 1) / 2 for i in range(len(edges) - 1)])
    pos = np.arange(n, dtype=np.float64)
    hi = np.searchsorted(centers, pos, side="right")
    lo = np.clip(hi - 1, 0, len(centers) - 1)
    hi = np.clip(hi, 0, len(centers) - 1)
    span = centers[hi] - centers[lo]
    w = np.where(span > 0, (pos - centers[lo]) / np.where(span > 0, span, 1), 0.0)
    return lo, hi, np.clip(w, 0.0, 1.0)


def clahe(image: GrayImage, params: ClaheParams = ClaheParams()) -> GrayImage:
    """Contrast-limited adaptive histogram equalization (Zuiderveld-style).

    Each output pixel blends the mappings of the four nearest tile centers
    bilinearly; pixels outside the outermost centers use the nearest tiles.
    """
    row_edges, col_edges, _, _, maps = clahe_tiles(image, params)
    px = image.pixels
    r0, r1, wr = _interp_axis(image.height, row_edges)
    c0, c1, wc = _interp_axis(image.width, col_edges)
    R0, R1 = r0[:, None], r1[:, None]
    C0, C1 = c0[None, :], c1[None, :]
    wr = wr[:, None]
    wc = wc[None, :]
    top = maps[R0, C0, px] * (1 - wc) + maps[R0, C1, px] * wc
    bottom = maps[R1, C0, px] * (1 - wc) + maps[R1, C1, px] * wc
    return GrayImage(_round_clip(top * (1 - wr) + bottom * wr))


def preprocess(image: GrayImage, roi: CropRect | None = None, size=TARGET_SIZE,
               clahe_params: ClaheParams = ClaheParams()) -> GrayImage:
    """Run the fixed chain crop -> resize -> remove_background -> median_filter -> clahe."""
    if roi is not None:
        image = crop(image, roi)
    image = resize_to(image, *size)
    image = remove_background(image)
    image = median_filter(image)
    return clahe(image, clahe_params)
