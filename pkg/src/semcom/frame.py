"""Dense 8-bit raster frames and lossless netpbm file I/O.

Frames are immutable after construction and safe to share between pipeline
stages.  The on-disk formats are binary PPM (P6, three channels) and binary
PGM (P5, one channel) with a maxval of 255; they round-trip bit-exactly.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np


class FrameError(Exception):
    """Base class for raster errors."""


class FormatError(FrameError):
    """File is not a supported netpbm raster or the header is malformed."""


class TruncatedError(FrameError):
    """Pixel payload is shorter than the header promises."""


class GeometryError(FrameError):
    """Operands disagree on width, height or channel count."""


class Frame:
    """An immutable ``height x width x channels`` uint8 raster.

    ``pixels`` is a read-only numpy array of shape ``(height, width,
    channels)`` with ``channels`` in {1, 3}.
    """

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise GeometryError(f"expected 2-D or 3-D pixel array, got {arr.ndim}-D")
        h, w, c = arr.shape
        if h < 1 or w < 1:
            raise GeometryError(f"frame must be at least 1x1, got {w}x{h}")
        if c not in (1, 3):
            raise FormatError(f"unsupported channel count {c} (expected 1 or 3)")
        if arr.dtype != np.uint8 or not arr.flags.c_contiguous:
            arr = np.ascontiguousarray(arr, dtype=np.uint8)
        elif arr.flags.writeable:
            # copy rather than freeze the caller's buffer in place
            arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def geometry(self) -> tuple[int, int, int]:
        """(width, height, channels)."""
        return (self.width, self.height, self.channels)

    @property
    def n_bytes(self) -> int:
        """Raw pixel payload size: width * height * channels."""
        return self.pixels.size

    @classmethod
    def full(cls, width: int, height: int, color) -> "Frame":
        """A constant-color frame; ``color`` is a scalar or per-channel tuple."""
        color_arr = np.atleast_1d(np.asarray(color, dtype=np.uint8))
        pixels = np.empty((height, width, color_arr.size), dtype=np.uint8)
        pixels[:] = color_arr
        return cls(pixels)

    def __setattr__(self, name, value):
        raise AttributeError("Frame is immutable")

    def __eq__(self, other) -> bool:
        if not isinstance(other, Frame):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"Frame({self.width}x{self.height}x{self.channels})"


def _require_same_geometry(a: Frame, b: Frame) -> None:
    if a.geometry != b.geometry:
        raise GeometryError(f"geometry mismatch: {a.geometry} vs {b.geometry}")


def _read_header_tokens(data: bytes, count: int, offset: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens, skipping '#' comments."""
    tokens: list[int] = []
    i = offset
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i : i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] != ord("\n"):
                i += 1
            continue
        start = i
        while i < n and not data[i : i + 1].isspace() and data[i] != ord("#"):
            i += 1
        if start == i:
            raise FormatError("malformed header: ran out of tokens")
        try:
            tokens.append(int(data[start:i]))
        except ValueError:
            raise FormatError(f"malformed header token {data[start:i]!r}") from None
    if i >= n:
        raise FormatError("malformed header: missing payload separator")
    return tokens, i + 1  # single whitespace byte ends the header


def load_frame(path: str | os.PathLike) -> Frame:
    """Load a binary PPM (P6) or PGM (P5) file.

    Comments in the header are tolerated; the payload must contain exactly
    ``width * height * channels`` bytes.
    """
    data = Path(path).read_bytes()
    magic = data[:2]
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise FormatError(f"not a binary PPM/PGM file (magic {magic!r})")
    (width, height, maxval), payload_start = _read_header_tokens(data, 3, 2)
    if width < 1 or height < 1:
        raise FormatError(f"invalid dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"unsupported maxval {maxval} (only 255)")
    expected = width * height * channels
    payload = data[payload_start:]
    if len(payload) < expected:
        raise TruncatedError(
            f"payload has {len(payload)} bytes, header promises {expected}"
        )
    if len(payload) > expected:
        raise FormatError(f"{len(payload) - expected} trailing bytes after payload")
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return Frame(pixels)


def save_frame(frame: Frame, path: str | os.PathLike) -> None:
    """Write `frame` as binary PPM (3 channels) or PGM (1 channel)."""
    magic = b"P6" if frame.channels == 3 else b"P5"
    header = b"%s\n%d %d\n255\n" % (magic, frame.width, frame.height)
    Path(path).write_bytes(header + frame.pixels.tobytes())


def abs_diff(a: Frame, b: Frame) -> Frame:
    """Single-channel per-pixel difference: max over channels of ``|a - b|``."""
    _require_same_geometry(a, b)
    diff = np.abs(a.pixels.astype(np.int16) - b.pixels.astype(np.int16))
    return Frame(diff.max(axis=2).astype(np.uint8))
