import math

import numpy as np
import pytest

from semcom import stream
from semcom.channel import (
    DEFAULT_BEP_TABLE,
    ChannelConfig,
    ChannelError,
    apply_channel,
    bep_for_snr,
    estimate_bep,
    estimate_snr,
)
from semcom.extractor import BackgroundUpdate, BoundingBox, Region, SemanticFrame
from semcom.frame import Frame

from conftest import random_frame


def big_semantic_record(rng, side=205) -> bytes:
    """One record whose payload exceeds 10^6 bits (side^2 * 3 * 8)."""
    mask = np.ones((side, side), dtype=bool)
    payload = rng.integers(0, 256, size=(side * side, 3), dtype=np.uint8)
    region = Region(box=BoundingBox(0, 0, side, side), mask=mask, payload=payload)
    sf = SemanticFrame(frame_index=0, regions=[region])
    return stream.encode_semantic(sf, (side, side, 3))


def background_record(rng, width=64, height=48) -> bytes:
    frame = random_frame(rng, width=width, height=height)
    return stream.encode_background(BackgroundUpdate(0, frame))


def test_clean_is_identity(rng):
    record = background_record(rng)
    out, trace = apply_channel(record, ChannelConfig(mode="CLEAN"), 0)
    assert out == record
    assert trace.bits_flipped == 0
    assert trace.bits_sent == 64 * 48 * 3 * 8


def test_table_bep_rates_within_3_sigma(rng):
    record = big_semantic_record(rng)
    n_bits = 205 * 205 * 3 * 8
    assert n_bits >= 1_000_000
    for snr, p in DEFAULT_BEP_TABLE.items():
        cfg = ChannelConfig(mode="TABLE_BEP", snr_db=snr, seed=7)
        out, trace = apply_channel(record, cfg, 0)
        rate = trace.bits_flipped / trace.bits_sent
        band = 3 * math.sqrt(p * (1 - p) / n_bits)
        assert abs(rate - p) < band, f"snr {snr}: {rate} vs {p} +- {band}"
        spans = stream.unprotected_spans(record)
        sent = b"".join(record[a:b] for a, b in spans)
        received = b"".join(out[a:b] for a, b in spans)
        assert abs(estimate_bep(sent, received) - p) < band


def test_bsc_probability_one_inverts_every_payload_bit(rng):
    record = background_record(rng)
    cfg = ChannelConfig(mode="TABLE_BEP", snr_db=0.0, bep_table={0.0: 1.0})
    out, trace = apply_channel(record, cfg, 0)
    (span,) = stream.unprotected_spans(record)
    a, b = span
    assert out[:a] == record[:a]  # header untouched
    assert bytes(x ^ 0xFF for x in record[a:b]) == out[a:b]
    assert trace.bits_flipped == trace.bits_sent


def test_header_protection_under_heavy_noise(rng):
    sf_record = big_semantic_record(rng, side=24)
    cfg = ChannelConfig(mode="TABLE_BEP", snr_db=0.0, bep_table={0.0: 0.5}, seed=3)
    out, _ = apply_channel(sf_record, cfg, 0)
    original = stream.decode_semantic(sf_record)
    decoded = stream.decode_semantic(out)
    assert len(decoded.regions) == len(original.regions)
    for got, want in zip(decoded.regions, original.regions):
        assert got.box == want.box
        assert np.array_equal(got.mask, want.mask)


def test_strict_headers_corrupts_everything(rng):
    record = background_record(rng)
    cfg = ChannelConfig(
        mode="TABLE_BEP", snr_db=0.0, bep_table={0.0: 1.0}, strict_headers=True
    )
    out, _ = apply_channel(record, cfg, 0)
    assert out == bytes(x ^ 0xFF for x in record)


def test_determinism_per_seed_and_position(rng):
    record = background_record(rng)
    cfg = ChannelConfig(mode="BSC", snr_db=3.0, seed=11)
    out1, _ = apply_channel(record, cfg, 5)
    out2, _ = apply_channel(record, cfg, 5)
    out3, _ = apply_channel(record, cfg, 6)
    assert out1 == out2
    assert out1 != out3


def test_bsc_flip_count_in_binomial_band(rng):
    record = big_semantic_record(rng, side=100)
    n = 100 * 100 * 3 * 8
    p = bep_for_snr(ChannelConfig(mode="BSC", snr_db=5.0))
    for seed in (1, 2, 3, 4):
        cfg = ChannelConfig(mode="BSC", snr_db=5.0, seed=seed)
        _, trace = apply_channel(record, cfg, 0)
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(trace.bits_flipped - n * p) < 4 * sigma


def test_bep_table_lookup_is_exact():
    cfg = ChannelConfig(mode="TABLE_BEP", snr_db=0.0)
    assert bep_for_snr(cfg) == 0.2854
    assert bep_for_snr(ChannelConfig(mode="TABLE_BEP", snr_db=5.0)) == 0.1580
    assert bep_for_snr(ChannelConfig(mode="TABLE_BEP", snr_db=10.0)) == 0.0507
    with pytest.raises(ChannelError, match="no BEP table entry"):
        bep_for_snr(ChannelConfig(mode="TABLE_BEP", snr_db=7.0))


def test_analytic_bep_matches_quadrature_oracle():
    scipy_integrate = pytest.importorskip("scipy.integrate")

    def q_function(x):
        pdf = lambda t: math.exp(-t * t / 2.0) / math.sqrt(2.0 * math.pi)
        value, _ = scipy_integrate.quad(pdf, x, math.inf)
        return value

    for snr in (0.0, 5.0, 10.0):
        expected = q_function(math.sqrt(2.0 * 10.0 ** (snr / 10.0)))
        got = bep_for_snr(ChannelConfig(mode="BSC", snr_db=snr))
        assert got == pytest.approx(expected, abs=1e-12)
    assert bep_for_snr(ChannelConfig(mode="BSC", snr_db=0.0)) == pytest.approx(
        0.0786, abs=5e-5
    )
    assert bep_for_snr(ChannelConfig(mode="BSC", snr_db=200.0)) == 0.0


def test_estimate_bep_trivial_cases():
    assert estimate_bep(b"abc", b"abc") == 0.0
    assert estimate_bep(b"\x00", b"\xff") == 1.0
    with pytest.raises(ChannelError):
        estimate_bep(b"ab", b"a")


def test_estimate_bep_matches_bit_loop(rng):
    sent = bytes(rng.integers(0, 256, 64, dtype=np.uint8))
    received = bytes(rng.integers(0, 256, 64, dtype=np.uint8))
    expected = sum(
        ((a ^ b) >> k) & 1 for a, b in zip(sent, received) for k in range(8)
    ) / (8 * 64)
    assert estimate_bep(sent, received) == pytest.approx(expected)


def test_estimate_snr_sentinel_and_six_db_step():
    clean = Frame.full(32, 32, (100, 100, 100))
    assert estimate_snr(clean, clean) == math.inf
    noise = np.zeros((32, 32, 3), dtype=np.int16)
    noise[::2, :, :] = 8
    noise[1::2, :, :] = -8
    noisy_full = Frame((clean.pixels.astype(np.int16) + noise).astype(np.uint8))
    noisy_half = Frame((clean.pixels.astype(np.int16) + noise // 2).astype(np.uint8))
    delta = estimate_snr(clean, noisy_half) - estimate_snr(clean, noisy_full)
    assert delta == pytest.approx(20.0 * math.log10(2.0), abs=1e-9)


def test_awgn_estimate_on_requantized_frame(rng):
    # mid-range pixels keep clipping negligible at 10 dB
    pixels = rng.integers(96, 160, size=(540, 960, 3), dtype=np.uint8)
    frame = Frame(pixels)
    record = stream.encode_background(BackgroundUpdate(0, frame))
    cfg = ChannelConfig(mode="AWGN_ANALOG", snr_db=10.0, seed=5)
    out, trace = apply_channel(record, cfg, 0)
    noisy = stream.decode_background(out).frame
    assert estimate_snr(frame, noisy) == pytest.approx(10.0, abs=0.2)
    assert trace.measured_snr_db == pytest.approx(10.0, abs=0.05)


def test_awgn_trace_calibration_all_snrs(rng):
    frame = random_frame(rng, width=320, height=240)
    record = stream.encode_background(BackgroundUpdate(0, frame))
    for snr in (0.0, 5.0, 10.0):
        cfg = ChannelConfig(mode="AWGN_ANALOG", snr_db=snr, seed=9)
        _, trace = apply_channel(record, cfg, 0)
        assert trace.measured_snr_db == pytest.approx(snr, abs=0.1)


def test_awgn_rayleigh_gain_still_decodes(rng):
    record = background_record(rng)
    cfg = ChannelConfig(
        mode="AWGN_ANALOG", snr_db=10.0, gain_model="rayleigh-scalar", seed=2
    )
    out, trace = apply_channel(record, cfg, 0)
    decoded = stream.decode_background(out)
    assert decoded.frame.geometry == (64, 48, 3)
    assert trace.bits_sent == 64 * 48 * 3 * 8


def test_awgn_rejects_undecodable_record():
    cfg = ChannelConfig(mode="AWGN_ANALOG", snr_db=10.0, strict_headers=True)
    with pytest.raises(ChannelError, match="decodable"):
        apply_channel(b"garbage-bytes-here", cfg, 0)


def test_invalid_configs_rejected():
    with pytest.raises(ChannelError):
        ChannelConfig(mode="FTL")
    with pytest.raises(ChannelError):
        ChannelConfig(bep_table={0.0: 1.5})
    with pytest.raises(ChannelError):
        ChannelConfig(seed=-1)
