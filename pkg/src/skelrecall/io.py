"""SKT container and 8-bit binary PGM reading/writing.

SKT layout (all little-endian)::

    magic "SKTN" | version u8 = 1 | ndim u8 (2, 3) | dtype u8 | num_classes u16 | dims u32 * ndim
    payload: dtype 0 -> u8 labels, row-major
             dtype 1 -> f32 probabilities, (num_classes + 1) channels, class-major
"""

from __future__ import annotations

import re
import struct
from pathlib import Path

import numpy as np

from .grid import LabelGrid, ProbGrid

MAGIC = b"SKTN"
VERSION = 1
DTYPE_LABEL = 0
DTYPE_FLOAT = 1


class FormatError(ValueError):
    """Malformed input file. ``code`` identifies the failure."""

    code = "format_error"

    def __init__(self, message: str):
        super().__init__(f"{self.code}: {message}")


class BadMagic(FormatError):
    code = "bad_magic"


class BadVersion(FormatError):
    code = "bad_version"


class BadHeader(FormatError):
    code = "bad_header"


class PayloadLengthMismatch(FormatError):
    code = "payload_length_mismatch"


class LabelOutOfRange(FormatError):
    code = "label_out_of_range"


class UnsupportedFormat(FormatError):
    code = "unsupported_format"


_FIXED = struct.Struct("<4sBBBH")


def encode_skt(grid: LabelGrid | ProbGrid) -> bytes:
    if isinstance(grid, ProbGrid):
        dtype, k, dims = DTYPE_FLOAT, grid.num_classes, grid.dims
        payload = grid.data.astype("<f4").tobytes()
    elif isinstance(grid, LabelGrid):
        if grid.num_classes > 255:
            raise ValueError("SKT label payloads hold at most 255 classes")
        dtype, k, dims = DTYPE_LABEL, grid.num_classes, grid.dims
        payload = grid.data.astype(np.uint8).tobytes()
    else:
        raise TypeError(f"cannot encode {type(grid).__name__}")
    if k > 0xFFFF:
        raise ValueError("num_classes does not fit in 16 bits")
    header = _FIXED.pack(MAGIC, VERSION, len(dims), dtype, k) + struct.pack(f"<{len(dims)}I", *dims)
    return header + payload


def decode_skt(raw: bytes) -> LabelGrid | ProbGrid:
    if len(raw) < _FIXED.size:
        raise BadHeader(f"file too short for header ({len(raw)} bytes)")
    magic, version, ndim, dtype, k = _FIXED.unpack_from(raw, 0)
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {magic!r}")
    if version != VERSION:
        raise BadVersion(f"unsupported version {version}")
    if ndim not in (2, 3):
        raise BadHeader(f"ndim must be 2 or 3, got {ndim}")
    if dtype not in (DTYPE_LABEL, DTYPE_FLOAT):
        raise BadHeader(f"unknown dtype code {dtype}")
    if k < 1:
        raise BadHeader("num_classes must be positive")
    off = _FIXED.size
    if len(raw) < off + 4 * ndim:
        raise BadHeader("file too short for dims")
    dims = struct.unpack_from(f"<{ndim}I", raw, off)
    off += 4 * ndim
    if any(n < 1 for n in dims):
        raise BadHeader(f"zero extent in dims {dims}")
    cells = int(np.prod(dims, dtype=np.int64))
    expected = cells if dtype == DTYPE_LABEL else 4 * cells * (k + 1)
    got = len(raw) - off
    if got != expected:
        raise PayloadLengthMismatch(f"header implies {expected} payload bytes, found {got}")
    body = raw[off:]
    if dtype == DTYPE_LABEL:
        data = np.frombuffer(body, dtype=np.uint8).reshape(dims)
        if data.size and data.max() > k:
            raise LabelOutOfRange(f"label {data.max()} exceeds num_classes {k}")
        return LabelGrid(data, k)
    data = np.frombuffer(body, dtype="<f4").reshape((k + 1,) + tuple(dims))
    try:
        return ProbGrid(data.astype(np.float64))
    except ValueError as exc:
        raise BadHeader(str(exc)) from None


def write_skt(grid: LabelGrid | ProbGrid, path) -> None:
    Path(path).write_bytes(encode_skt(grid))


def read_skt(path) -> LabelGrid | ProbGrid:
    return decode_skt(Path(path).read_bytes())


_PGM_HEADER = re.compile(rb"\A(P\d)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)(?:\s|#[^\n]*\n)+(\d+)\s")


def encode_pgm(grid: LabelGrid) -> bytes:
    if grid.ndim != 2:
        raise ValueError("PGM holds 2D grids only")
    if grid.num_classes > 255:
        raise ValueError("PGM labels are limited to 255")
    h, w = grid.dims
    return b"P5\n%d %d\n255\n" % (w, h) + grid.data.astype(np.uint8).tobytes()


def decode_pgm(raw: bytes, num_classes: int | None = None) -> LabelGrid:
    """Binary 8-bit PGM to labels. ``num_classes`` defaults to the largest gray value (at least 1)."""
    if raw[:2] != b"P5":
        raise UnsupportedFormat(f"only binary P5 PGM is supported, got {raw[:2]!r}")
    m = _PGM_HEADER.match(raw)
    if not m:
        raise BadHeader("malformed PGM header")
    w, h, maxval = int(m.group(2)), int(m.group(3)), int(m.group(4))
    if maxval != 255:
        raise UnsupportedFormat(f"only maxval 255 is supported, got {maxval}")
    body = raw[m.end() :]
    if len(body) != w * h:
        raise PayloadLengthMismatch(f"expected {w * h} pixel bytes, found {len(body)}")
    data = np.frombuffer(body, dtype=np.uint8).reshape(h, w)
    k = num_classes if num_classes is not None else max(1, int(data.max()) if data.size else 1)
    if data.size and data.max() > k:
        raise LabelOutOfRange(f"gray value {data.max()} exceeds num_classes {k}")
    return LabelGrid(data, k)


def write_pgm(grid: LabelGrid, path) -> None:
    Path(path).write_bytes(encode_pgm(grid))


def read_pgm(path, num_classes: int | None = None) -> LabelGrid:
    return decode_pgm(Path(path).read_bytes(), num_classes)


def read_grid(path, num_classes: int | None = None):
    """Read by extension: .pgm as PGM, anything else as SKT."""
    if str(path).lower().endswith(".pgm"):
        return read_pgm(path, num_classes)
    return read_skt(path)


def write_grid(grid, path) -> None:
    if str(path).lower().endswith(".pgm"):
        write_pgm(grid, path)
    else:
        write_skt(grid, path)
