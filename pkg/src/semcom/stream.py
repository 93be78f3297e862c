"""Bit-exact container codec for semantic and background records.

Record layout, all integers little-endian:

    magic "SEMC" | version u8=1 | kind u8 | index u32 | width u32 |
    height u32 | channels u8 | ...

followed for background records (kind 0) by ``width*height*channels`` raw
pixel bytes, and for semantic records (kind 1) by ``region_count`` (u16)
regions, each:

    x0 y0 x1 y1 (u16 each) | mask_rle_len u32 | mask RLE | payload_len u32 |
    payload bytes

Masks are run-length coded as varint run lengths of alternating value,
starting with a zero run; the trailing zero run is omitted.  Headers, boxes
and masks are conceptually protected: the channel corrupts payload and body
bytes only, so records stay composable under noise (a strict mode lifts
that).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .extractor import BackgroundUpdate, BoundingBox, Region, SemanticFrame
from .frame import Frame

MAGIC = b"SEMC"
VERSION = 1
KIND_BACKGROUND = 0
KIND_SEMANTIC = 1

_FIXED_HEADER = struct.Struct("<4sBBIIIB")  # magic, version, kind, index, w, h, c
HEADER_SIZE = _FIXED_HEADER.size  # 19


class StreamError(Exception):
    """Base class for record codec failures."""


class BadMagicError(StreamError):
    pass


class TruncatedRecordError(StreamError):
    pass


class RegionOverrunError(StreamError):
    """Region metadata inconsistent with the declared geometry or mask."""


@dataclass(frozen=True)
class RecordHeader:
    kind: int
    index: int
    width: int
    height: int
    channels: int
    size: int  # total encoded record length in bytes


def encode_varint(value: int) -> bytes:
    """LEB128-style unsigned varint."""
    if value < 0:
        raise ValueError("varint is unsigned")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def decode_varint(data: bytes, offset: int) -> tuple[int, int]:
    value = 0
    shift = 0
    while True:
        if offset >= len(data):
            raise TruncatedRecordError("varint runs past end of record")
        byte = data[offset]
        offset += 1
        value |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return value, offset
        shift += 7
        if shift > 63:
            raise StreamError("varint too long")


def encode_mask_rle(mask: np.ndarray) -> bytes:
    """Alternating zero/one run lengths, zero run first, trailing zeros omitted."""
    flat = np.asarray(mask).ravel() != 0
    out = bytearray()
    if not flat.any():
        return bytes(out)
    boundaries = np.flatnonzero(np.diff(flat.astype(np.int8))) + 1
    edges = np.concatenate(([0], boundaries, [flat.size]))
    runs = np.diff(edges)
    if flat[0]:
        out += encode_varint(0)
    if not flat[-1]:
        runs = runs[:-1]
    for run in runs:
        out += encode_varint(int(run))
    return bytes(out)


def decode_mask_rle(data: bytes, n_bits: int) -> np.ndarray:
    """Inverse of ``encode_mask_rle``; missing trailing bits decode as zeros."""
    flat = np.zeros(n_bits, dtype=bool)
    offset = 0
    pos = 0
    value = False
    while offset < len(data):
        run, offset = decode_varint(data, offset)
        if pos + run > n_bits:
            raise RegionOverrunError(
                f"mask runs cover {pos + run} bits, box has {n_bits}"
            )
        if value:
            flat[pos : pos + run] = True
        pos += run
        value = not value
    return flat


def encode_semantic(sf: SemanticFrame, geometry: tuple[int, int, int]) -> bytes:
    """Encode a semantic frame against the sequence geometry."""
    width, height, channels = geometry
    out = bytearray(
        _FIXED_HEADER.pack(
            MAGIC, VERSION, KIND_SEMANTIC, sf.frame_index, width, height, channels
        )
    )
    if len(sf.regions) > 0xFFFF:
        raise StreamError(f"{len(sf.regions)} regions exceed the u16 budget")
    out += struct.pack("<H", len(sf.regions))
    for region in sf.regions:
        box = region.box
        box.check_within(width, height)
        region.validate(channels)
        out += struct.pack("<4H", box.x0, box.y0, box.x1, box.y1)
        rle = encode_mask_rle(region.mask)
        out += struct.pack("<I", len(rle))
        out += rle
        payload = np.ascontiguousarray(region.payload, dtype=np.uint8)
        out += struct.pack("<I", payload.size)
        out += payload.tobytes()
    return bytes(out)


def encode_background(bu: BackgroundUpdate) -> bytes:
    frame = bu.frame
    header = _FIXED_HEADER.pack(
        MAGIC,
        VERSION,
        KIND_BACKGROUND,
        bu.period_index,
        frame.width,
        frame.height,
        frame.channels,
    )
    return header + frame.pixels.tobytes()


def _decode_fixed_header(data: bytes, offset: int = 0) -> tuple:
    if len(data) - offset < HEADER_SIZE:
        raise TruncatedRecordError(
            f"record has {len(data) - offset} bytes, header needs {HEADER_SIZE}"
        )
    magic, version, kind, index, width, height, channels = _FIXED_HEADER.unpack_from(
        data, offset
    )
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}")
    if version != VERSION:
        raise StreamError(f"unsupported record version {version}")
    if kind not in (KIND_BACKGROUND, KIND_SEMANTIC):
        raise StreamError(f"unknown record kind {kind}")
    if channels not in (1, 3):
        raise StreamError(f"unsupported channel count {channels}")
    return kind, index, width, height, channels


def _walk_semantic(
    data: bytes, offset: int, geometry: tuple[int, int, int]
) -> tuple[list[tuple], int]:
    """Parse region metadata; returns per-region field offsets and record end."""
    width, height, channels = geometry
    if len(data) - offset < 2:
        raise TruncatedRecordError("record ends before region count")
    (region_count,) = struct.unpack_from("<H", data, offset)
    offset += 2
    regions = []
    for _ in range(region_count):
        if len(data) - offset < 12:
            raise TruncatedRecordError("record ends inside region header")
        x0, y0, x1, y1 = struct.unpack_from("<4H", data, offset)
        offset += 8
        if not (x0 < x1 <= width and y0 < y1 <= height):
            raise RegionOverrunError(
                f"box ({x0},{y0},{x1},{y1}) outside {width}x{height} frame"
            )
        (rle_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        rle_start = offset
        if len(data) - offset < rle_len + 4:
            raise TruncatedRecordError("record ends inside mask RLE")
        offset += rle_len
        (payload_len,) = struct.unpack_from("<I", data, offset)
        offset += 4
        payload_start = offset
        if len(data) - offset < payload_len:
            raise TruncatedRecordError("record ends inside payload")
        offset += payload_len
        regions.append(
            ((x0, y0, x1, y1), rle_start, rle_len, payload_start, payload_len)
        )
    return regions, offset


def _record_end(data: bytes, offset: int = 0) -> tuple[RecordHeader, int]:
    kind, index, width, height, channels = _decode_fixed_header(data, offset)
    body_start = offset + HEADER_SIZE
    if kind == KIND_BACKGROUND:
        end = body_start + width * height * channels
        if end > len(data):
            raise TruncatedRecordError(
                f"background body needs {width * height * channels} bytes"
            )
    else:
        _, end = _walk_semantic(data, body_start, (width, height, channels))
    header = RecordHeader(kind, index, width, height, channels, end - offset)
    return header, end


def peek_header(data: bytes, offset: int = 0) -> RecordHeader:
    """Header plus total size of the record starting at ``offset``."""
    header, _ = _record_end(data, offset)
    return header


def record_size_bytes(data: bytes, offset: int = 0) -> int:
    """Exact encoded length of the record starting at ``offset``."""
    return peek_header(data, offset).size


def semantic_size_bytes(sf: SemanticFrame, geometry: tuple[int, int, int]) -> int:
    """Arithmetic size of ``encode_semantic(sf, geometry)`` without encoding."""
    channels = geometry[2]
    size = HEADER_SIZE + 2
    for region in sf.regions:
        rle = encode_mask_rle(region.mask)
        size += 8 + 4 + len(rle) + 4 + int(np.count_nonzero(region.mask)) * channels
    return size


def background_size_bytes(geometry: tuple[int, int, int]) -> int:
    width, height, channels = geometry
    return HEADER_SIZE + width * height * channels


def decode_semantic(data: bytes) -> SemanticFrame:
    """Decode a semantic record; corrupt payload bytes decode structurally intact."""
    kind, index, width, height, channels = _decode_fixed_header(data)
    if kind != KIND_SEMANTIC:
        raise StreamError("record is not a semantic record")
    metas, _ = _walk_semantic(data, HEADER_SIZE, (width, height, channels))
    regions = []
    for (x0, y0, x1, y1), rle_start, rle_len, payload_start, payload_len in metas:
        box = BoundingBox(x0, y0, x1, y1)
        mask_flat = decode_mask_rle(data[rle_start : rle_start + rle_len], box.area)
        popcount = int(np.count_nonzero(mask_flat))
        if payload_len != popcount * channels:
            raise RegionOverrunError(
                f"payload of {payload_len} bytes does not match "
                f"{popcount} mask bits x {channels} channels"
            )
        payload = np.frombuffer(
            data, dtype=np.uint8, count=payload_len, offset=payload_start
        ).reshape(popcount, channels)
        regions.append(
            Region(
                box=box,
                mask=mask_flat.reshape(box.height, box.width),
                payload=payload.copy(),
            )
        )
    return SemanticFrame(frame_index=index, regions=regions)


def decode_background(data: bytes) -> BackgroundUpdate:
    kind, index, width, height, channels = _decode_fixed_header(data)
    if kind != KIND_BACKGROUND:
        raise StreamError("record is not a background record")
    expected = width * height * channels
    body = data[HEADER_SIZE : HEADER_SIZE + expected]
    if len(body) < expected:
        raise TruncatedRecordError(
            f"background body has {len(body)} bytes, needs {expected}"
        )
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(height, width, channels)
    return BackgroundUpdate(period_index=index, frame=Frame(pixels))


def unprotected_spans(data: bytes, offset: int = 0) -> list[tuple[int, int]]:
    """Byte ranges the channel may corrupt: payload/body, never structure."""
    kind, index, width, height, channels = _decode_fixed_header(data, offset)
    body_start = offset + HEADER_SIZE
    if kind == KIND_BACKGROUND:
        end = body_start + width * height * channels
        if end > len(data):
            raise TruncatedRecordError("background body truncated")
        return [(body_start, end)]
    metas, _ = _walk_semantic(data, body_start, (width, height, channels))
    return [
        (payload_start, payload_start + payload_len)
        for _, _, _, payload_start, payload_len in metas
        if payload_len
    ]


def iter_records(data: bytes):
    """Yield ``(offset, RecordHeader)`` for each record in a stream buffer."""
    offset = 0
    while offset < len(data):
        header, end = _record_end(data, offset)
        yield offset, header
        offset = end
