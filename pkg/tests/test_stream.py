import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from semcom import stream
from semcom.extractor import BackgroundUpdate, BoundingBox, Region, SemanticFrame
from semcom.frame import Frame

GOLDEN = Path(__file__).parent / "golden"


def _region(box: BoundingBox, mask_rows, payload_rows) -> Region:
    mask = np.array(mask_rows, dtype=bool)
    payload = np.array(payload_rows, dtype=np.uint8)
    return Region(box=box, mask=mask, payload=payload)


def two_region_fixture() -> SemanticFrame:
    a = _region(
        BoundingBox(1, 1, 4, 3),
        [[1, 0, 1], [0, 1, 0]],
        [[11, 12, 13], [21, 22, 23], [31, 32, 33]],
    )
    b = _region(
        BoundingBox(4, 2, 6, 5),
        np.ones((3, 2), dtype=bool),
        np.arange(100, 118, dtype=np.uint8).reshape(6, 3),
    )
    return SemanticFrame(frame_index=9, regions=[a, b])


def background_fixture() -> BackgroundUpdate:
    pixels = np.arange(10, 130, 10, dtype=np.uint8).reshape(2, 2, 3)
    return BackgroundUpdate(period_index=7, frame=Frame(pixels))


def random_semantic(rng, width, height, channels, max_regions=3) -> SemanticFrame:
    regions = []
    for _ in range(int(rng.integers(0, max_regions + 1))):
        x0 = int(rng.integers(0, width))
        y0 = int(rng.integers(0, height))
        x1 = int(rng.integers(x0 + 1, width + 1))
        y1 = int(rng.integers(y0 + 1, height + 1))
        box = BoundingBox(x0, y0, x1, y1)
        mask = rng.random((box.height, box.width)) < 0.5
        payload = rng.integers(
            0, 256, size=(int(mask.sum()), channels), dtype=np.uint8
        )
        regions.append(Region(box=box, mask=mask, payload=payload))
    return SemanticFrame(frame_index=int(rng.integers(0, 1000)), regions=regions)


# -- format goldens ----------------------------------------------------------


def test_empty_semantic_record_is_21_bytes():
    sf = SemanticFrame(frame_index=3, regions=[])
    encoded = stream.encode_semantic(sf, (4, 4, 3))
    expected = struct.pack("<4sBBIIIB", b"SEMC", 1, 1, 3, 4, 4, 3) + struct.pack(
        "<H", 0
    )
    assert encoded == expected
    assert len(encoded) == 21
    assert encoded == (GOLDEN / "semantic_empty_4x4.bin").read_bytes()


def test_two_region_record_matches_hand_encoding():
    encoded = stream.encode_semantic(two_region_fixture(), (8, 6, 3))
    assert encoded == (GOLDEN / "semantic_two_regions.bin").read_bytes()


def test_background_record_matches_hand_encoding():
    encoded = stream.encode_background(background_fixture())
    expected = struct.pack("<4sBBIIIB", b"SEMC", 1, 0, 7, 2, 2, 3) + bytes(
        range(10, 130, 10)
    )
    assert encoded == expected
    assert encoded == (GOLDEN / "background_2x2.bin").read_bytes()


def test_full_box_2x2_region_layout():
    region = _region(
        BoundingBox(0, 0, 2, 2),
        np.ones((2, 2), dtype=bool),
        np.arange(12, dtype=np.uint8).reshape(4, 3),
    )
    encoded = stream.encode_semantic(
        SemanticFrame(frame_index=0, regions=[region]), (2, 2, 3)
    )
    body = encoded[21:]
    assert body[:8] == struct.pack("<4H", 0, 0, 2, 2)
    assert struct.unpack_from("<I", body, 8)[0] == 2
    assert body[12:14] == bytes([0, 4])  # all-ones mask: zero run, then 4
    assert struct.unpack_from("<I", body, 14)[0] == 12
    assert body[18:] == bytes(range(12))


def test_encode_deterministic_and_injective(rng):
    seen = set()
    for _ in range(50):
        sf = random_semantic(rng, 12, 9, 3)
        first = stream.encode_semantic(sf, (12, 9, 3))
        assert first == stream.encode_semantic(sf, (12, 9, 3))
        seen.add(first)
    assert len(seen) >= 45  # distinct frames encode distinctly


# -- round trips -------------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(1, 24),
    st.integers(1, 24),
    st.sampled_from([1, 3]),
)
def test_semantic_round_trip(seed, width, height, channels):
    rng = np.random.default_rng(seed)
    sf = random_semantic(rng, width, height, channels)
    decoded = stream.decode_semantic(stream.encode_semantic(sf, (width, height, channels)))
    assert decoded == sf


def test_background_round_trip(rng):
    pixels = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    bu = BackgroundUpdate(period_index=2, frame=Frame(pixels))
    decoded = stream.decode_background(stream.encode_background(bu))
    assert decoded.period_index == 2
    assert decoded.frame == bu.frame


@settings(max_examples=40, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(1, 32),
    st.integers(1, 32),
    st.sampled_from([1, 3]),
    st.integers(0, 2**32 - 1),
)
def test_background_round_trip_property(seed, width, height, channels, index):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(height, width, channels), dtype=np.uint8)
    bu = BackgroundUpdate(period_index=index, frame=Frame(pixels))
    decoded = stream.decode_background(stream.encode_background(bu))
    assert decoded.period_index == index
    assert decoded.frame == bu.frame


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 255))
def test_payload_corruption_never_breaks_structure(seed, xor_byte):
    """Any corruption confined to payload spans leaves the structure intact."""
    rng = np.random.default_rng(seed)
    sf = random_semantic(rng, 16, 12, 3)
    encoded = bytearray(stream.encode_semantic(sf, (16, 12, 3)))
    for start, stop in stream.unprotected_spans(bytes(encoded)):
        for i in range(start, stop):
            if rng.random() < 0.5:
                encoded[i] ^= xor_byte
    decoded = stream.decode_semantic(bytes(encoded))
    assert len(decoded.regions) == len(sf.regions)
    for got, want in zip(decoded.regions, sf.regions):
        assert got.box == want.box
        assert np.array_equal(got.mask != 0, want.mask != 0)
        assert got.payload.shape == want.payload.shape


def test_varint_round_trip():
    for value in [0, 1, 127, 128, 300, 2**21, 2**32 - 1]:
        data = stream.encode_varint(value)
        decoded, offset = stream.decode_varint(data, 0)
        assert decoded == value
        assert offset == len(data)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.booleans(), min_size=0, max_size=200))
def test_mask_rle_round_trip(bits):
    mask = np.array(bits, dtype=bool)
    rle = stream.encode_mask_rle(mask)
    assert np.array_equal(stream.decode_mask_rle(rle, mask.size), mask)


# -- corruption behavior -----------------------------------------------------


def test_payload_bit_flip_keeps_structure():
    encoded = bytearray(stream.encode_semantic(two_region_fixture(), (8, 6, 3)))
    spans = stream.unprotected_spans(bytes(encoded))
    start, _ = spans[0]
    encoded[start] ^= 0x10
    decoded = stream.decode_semantic(bytes(encoded))
    reference = two_region_fixture()
    assert len(decoded.regions) == len(reference.regions)
    for got, want in zip(decoded.regions, reference.regions):
        assert got.box == want.box
        assert np.array_equal(got.mask, want.mask)
    delta = decoded.regions[0].payload.astype(int) - reference.regions[0].payload
    changed = delta[delta != 0]
    assert changed.size == 1
    assert abs(int(changed[0])) == 0x10  # one sample, one power of two


def test_unprotected_spans_cover_only_payload():
    encoded = stream.encode_semantic(two_region_fixture(), (8, 6, 3))
    spans = stream.unprotected_spans(encoded)
    assert [b - a for a, b in spans] == [9, 18]
    background = stream.encode_background(background_fixture())
    assert stream.unprotected_spans(background) == [(19, 31)]


def test_bad_magic_rejected():
    encoded = bytearray(stream.encode_semantic(two_region_fixture(), (8, 6, 3)))
    encoded[0] ^= 0xFF
    with pytest.raises(stream.BadMagicError):
        stream.decode_semantic(bytes(encoded))


def test_truncated_record_rejected():
    encoded = stream.encode_semantic(two_region_fixture(), (8, 6, 3))
    with pytest.raises(stream.TruncatedRecordError):
        stream.decode_semantic(encoded[:-1])
    background = stream.encode_background(background_fixture())
    with pytest.raises(stream.TruncatedRecordError):
        stream.decode_background(background[:-1])


def test_region_outside_geometry_rejected():
    region = _region(
        BoundingBox(0, 0, 4, 4),
        np.ones((4, 4), dtype=bool),
        np.zeros((16, 3), dtype=np.uint8),
    )
    sf = SemanticFrame(frame_index=0, regions=[region])
    with pytest.raises(Exception):
        stream.encode_semantic(sf, (3, 3, 3))
    # the same overrun must be caught on decode of a forged record
    good = stream.encode_semantic(sf, (4, 4, 3))
    forged = bytearray(good)
    struct.pack_into("<I", forged, 10, 3)  # shrink declared width under the box
    with pytest.raises(stream.RegionOverrunError):
        stream.decode_semantic(bytes(forged))


# -- sizes -------------------------------------------------------------------


def test_record_size_matches_encoded_length(rng):
    for _ in range(20):
        sf = random_semantic(rng, 10, 10, 3)
        encoded = stream.encode_semantic(sf, (10, 10, 3))
        assert stream.record_size_bytes(encoded) == len(encoded)
        assert stream.semantic_size_bytes(sf, (10, 10, 3)) == len(encoded)


def test_background_size_arithmetic():
    assert stream.background_size_bytes((960, 540, 3)) == 19 + 1_555_200
    encoded = stream.encode_background(background_fixture())
    assert stream.background_size_bytes((2, 2, 3)) == len(encoded)


def test_iter_records_walks_concatenation(rng):
    records = [
        stream.encode_background(background_fixture()),
        stream.encode_semantic(two_region_fixture(), (8, 6, 3)),
        stream.encode_semantic(SemanticFrame(frame_index=1), (8, 6, 3)),
    ]
    blob = b"".join(records)
    offsets = list(stream.iter_records(blob))
    assert [h.size for _, h in offsets] == [len(r) for r in records]
    assert sum(h.size for _, h in offsets) == len(blob)
    assert [h.kind for _, h in offsets] == [0, 1, 1]
