"""Reading and writing 8-bit netpbm graymaps (P2 ASCII and P5 binary)."""

from pathlib import Path

import numpy as np

from .errors import MalformedHeader, TruncatedData, UnsupportedDepth, UnsupportedMagic
from .image import GrayImage

_WHITESPACE = b" \t\n\r\v\f"


def _read_token(data: bytes, pos: int):
    """Return (token, end) for the next header token, skipping whitespace and comments."""
    n = len(data)
    while pos < n:
        c = data[pos:pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos:pos + 1] not in _WHITESPACE and data[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise MalformedHeader("unexpected end of header")
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str):
    token, pos = _read_token(data, pos)
    if not token.isdigit():
        raise MalformedHeader(f"{what}: expected a non-negative integer, got {token[:20]!r}")
    return int(token), pos


def parse_pgm(data: bytes) -> GrayImage:
    """Decode a P2 or P5 graymap with maxval <= 255.

    Samples are returned as stored; maxval only bounds them, no rescaling is applied.
    """
    data = bytes(data)
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise UnsupportedMagic(f"unsupported magic {magic!r}")
    pos = 2
    if len(data) > 2 and data[2:3] not in _WHITESPACE and data[2:3] != b"#":
        raise MalformedHeader("magic number must be followed by whitespace")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise MalformedHeader(f"invalid dimensions {width}x{height}")
    if maxval < 1:
        raise MalformedHeader(f"invalid maxval {maxval}")
    if maxval > 255:
        raise UnsupportedDepth(f"maxval {maxval} exceeds 255")
    count = width * height

    if magic == b"P5":
        # exactly one whitespace byte separates maxval from the raster
        if pos >= len(data) or data[pos:pos + 1] not in _WHITESPACE:
            raise TruncatedData("missing raster")
        raster = data[pos + 1:pos + 1 + count]
        if len(raster) < count:
            raise TruncatedData(f"expected {count} samples, found {len(raster)}")
        values = np.frombuffer(raster, dtype=np.uint8)
    else:
        tokens = data[pos:].split()
        if len(tokens) < count:
            raise TruncatedData(f"expected {count} samples, found {len(tokens)}")
        tokens = tokens[:count]
        if not all(t.isdigit() for t in tokens):
            raise MalformedHeader("non-integer sample in P2 raster")
        values = np.array([int(t) for t in tokens], dtype=np.int64)

    if values.max() > maxval:
        raise MalformedHeader(f"sample exceeds maxval {maxval}")
    return GrayImage(values.reshape(height, width).astype(np.uint8))


def encode_pgm(image: GrayImage, binary: bool = True) -> bytes:
    header = f"P{5 if binary else 2}\n{image.width} {image.height}\n255\n".encode("ascii")
    if binary:
        return header + image.pixels.tobytes()
    lines = [" ".join(str(int(v)) for v in row) for row in image.pixels]
    return header + ("\n".join(lines) + "\n").encode("ascii")


def read_pgm(path) -> GrayImage:
    return parse_pgm(Path(path).read_bytes())


def write_pgm(path, image: GrayImage, binary: bool = True) -> None:
    Path(path).write_bytes(encode_pgm(image, binary))
