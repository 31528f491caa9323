"""Mammogram texture descriptors (first- and second-order statistics) and MLP-based
descriptor-group selection."""

from .image import GrayImage
from .pgm_io import encode_pgm, parse_pgm, read_pgm, write_pgm

__version__ = "0.1.0"

__all__ = ["GrayImage", "encode_pgm", "parse_pgm", "read_pgm", "write_pgm", "__version__"]
