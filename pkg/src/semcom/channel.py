"""Noisy-channel simulation for encoded records, plus SNR/BEP estimators.

Modes
-----
CLEAN        identity transport.
BSC          flip each unprotected bit independently; the flip probability
             comes from the coherent-binary closed form Q(sqrt(2*10^(snr/10))).
TABLE_BEP    BSC with the probability looked up from an explicit snr->p table
             (no interpolation).
AWGN_ANALOG  treat each unprotected byte as an 8-bit sample, add white
             Gaussian noise scaled to the configured SNR in the [0, 1] sample
             domain, equalize by the scalar gain and requantize.

Noise is seeded per ``(seed, stream_position)`` so runs reproduce exactly
regardless of processing order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import stream
from .frame import Frame, GeometryError

MODE_CLEAN = "CLEAN"
MODE_BSC = "BSC"
MODE_TABLE_BEP = "TABLE_BEP"
MODE_AWGN = "AWGN_ANALOG"
MODES = (MODE_CLEAN, MODE_BSC, MODE_TABLE_BEP, MODE_AWGN)

GAIN_UNIT = "unit"
GAIN_RAYLEIGH = "rayleigh-scalar"

# Reference per-SNR bit error probabilities for the simulated link.
DEFAULT_BEP_TABLE = {0.0: 0.2854, 5.0: 0.1580, 10.0: 0.0507}

_POPCOUNT = np.unpackbits(np.arange(256, dtype=np.uint8)[:, None], axis=1).sum(1)

_FLIP_CHUNK_BYTES = 1 << 20


class ChannelError(Exception):
    pass


@dataclass(frozen=True)
class ChannelConfig:
    mode: str = MODE_CLEAN
    snr_db: float = 10.0
    gain_model: str = GAIN_UNIT
    bep_table: dict[float, float] = field(
        default_factory=lambda: dict(DEFAULT_BEP_TABLE)
    )
    seed: int = 0
    strict_headers: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ChannelError(f"unknown channel mode {self.mode!r}")
        if self.gain_model not in (GAIN_UNIT, GAIN_RAYLEIGH):
            raise ChannelError(f"unknown gain model {self.gain_model!r}")
        if self.seed < 0:
            raise ChannelError("seed must be a non-negative integer")
        for snr, p in self.bep_table.items():
            if not 0.0 <= p <= 1.0:
                raise ChannelError(f"bep_table[{snr}] = {p} outside [0, 1]")


@dataclass
class ChannelTrace:
    bits_sent: int = 0
    bits_flipped: int = 0
    measured_snr_db: float | None = None

    def merge(self, other: "ChannelTrace") -> None:
        self.bits_sent += other.bits_sent
        self.bits_flipped += other.bits_flipped
        if other.measured_snr_db is not None:
            self.measured_snr_db = other.measured_snr_db


def bep_for_snr(cfg: ChannelConfig) -> float:
    """Bit error probability the config implies.

    TABLE_BEP looks the SNR up exactly (absent key is an error); BSC uses the
    closed form for coherent binary modulation over a Gaussian channel.
    """
    if cfg.mode == MODE_CLEAN:
        return 0.0
    if cfg.mode == MODE_TABLE_BEP:
        key = float(cfg.snr_db)
        if key not in cfg.bep_table:
            raise ChannelError(
                f"no BEP table entry for snr_db={cfg.snr_db} "
                f"(table has {sorted(cfg.bep_table)})"
            )
        return cfg.bep_table[key]
    if cfg.mode == MODE_BSC:
        # Q(sqrt(2 * 10^(snr/10))) with Q(x) = erfc(x / sqrt(2)) / 2
        return 0.5 * math.erfc(math.sqrt(10.0 ** (cfg.snr_db / 10.0)))
    raise ChannelError(f"no bit-error model for mode {cfg.mode}")


def _record_rng(cfg: ChannelConfig, stream_position: int) -> np.random.Generator:
    return np.random.default_rng([cfg.seed, stream_position])


def _spans(record: bytes, cfg: ChannelConfig) -> list[tuple[int, int]]:
    if cfg.strict_headers:
        return [(0, len(record))]
    return stream.unprotected_spans(record)


def _flip_bits(
    buf: np.ndarray, spans, p: float, rng: np.random.Generator
) -> tuple[int, int]:
    bits_sent = 0
    bits_flipped = 0
    for start, stop in spans:
        bits_sent += (stop - start) * 8
        if p <= 0.0:
            continue
        for off in range(start, stop, _FLIP_CHUNK_BYTES):
            hi = min(off + _FLIP_CHUNK_BYTES, stop)
            n = hi - off
            flips = rng.random(n * 8) < p
            bits_flipped += int(flips.sum())
            buf[off:hi] ^= np.packbits(flips)
    return bits_sent, bits_flipped


def _add_awgn(
    buf: np.ndarray, spans, cfg: ChannelConfig, rng: np.random.Generator
) -> ChannelTrace:
    samples = np.concatenate([buf[a:b] for a, b in spans]).astype(np.float64) / 255.0
    if samples.size == 0:
        return ChannelTrace(bits_sent=0, bits_flipped=0)
    signal_power = float(np.mean(samples**2))
    sigma = math.sqrt(signal_power / 10.0 ** (cfg.snr_db / 10.0))
    if cfg.gain_model == GAIN_RAYLEIGH:
        # one scalar gain per record with E[h^2] = 1; receiver equalizes it
        h = float(rng.rayleigh(scale=1.0 / math.sqrt(2.0)))
        h = max(h, 1e-6)
    else:
        h = 1.0
    noise = rng.normal(0.0, sigma, samples.size)
    equalized = (samples * h + noise) / h
    # calibration measured on the continuous values, before requantization
    noise_power = float(np.mean(noise**2))
    measured = math.inf if noise_power == 0 else 10.0 * math.log10(
        signal_power / noise_power
    )
    quantized = np.clip(np.rint(equalized * 255.0), 0, 255).astype(np.uint8)
    bits_flipped = 0
    pos = 0
    for a, b in spans:
        n = b - a
        chunk = quantized[pos : pos + n]
        bits_flipped += int(_POPCOUNT[np.bitwise_xor(buf[a:b], chunk)].sum())
        buf[a:b] = chunk
        pos += n
    return ChannelTrace(
        bits_sent=samples.size * 8,
        bits_flipped=bits_flipped,
        measured_snr_db=measured,
    )


def apply_channel(
    record: bytes, cfg: ChannelConfig, stream_position: int = 0
) -> tuple[bytes, ChannelTrace]:
    """Pass one encoded record through the channel.

    Deterministic given ``(cfg.seed, stream_position)``.  Only unprotected
    bytes are corrupted unless ``strict_headers`` is set.
    """
    spans = _spans(record, cfg)
    if cfg.mode == MODE_CLEAN:
        bits = sum((b - a) * 8 for a, b in spans)
        return record, ChannelTrace(bits_sent=bits, bits_flipped=0)
    buf = np.frombuffer(record, dtype=np.uint8).copy()
    rng = _record_rng(cfg, stream_position)
    if cfg.mode in (MODE_BSC, MODE_TABLE_BEP):
        p = bep_for_snr(cfg)
        sent, flipped = _flip_bits(buf, spans, p, rng)
        trace = ChannelTrace(bits_sent=sent, bits_flipped=flipped)
    elif cfg.mode == MODE_AWGN:
        try:
            stream.peek_header(record)
        except stream.StreamError as exc:
            raise ChannelError(f"AWGN mode needs a decodable record: {exc}") from exc
        trace = _add_awgn(buf, spans, cfg, rng)
    else:
        raise ChannelError(f"unknown channel mode {cfg.mode!r}")
    return buf.tobytes(), trace


def estimate_bep(sent: bytes, received: bytes) -> float:
    """Empirical fraction of flipped bits between two equal-length buffers."""
    if len(sent) != len(received):
        raise ChannelError(
            f"length mismatch: {len(sent)} vs {len(received)} bytes"
        )
    if not sent:
        return 0.0
    a = np.frombuffer(sent, dtype=np.uint8)
    b = np.frombuffer(received, dtype=np.uint8)
    return float(_POPCOUNT[np.bitwise_xor(a, b)].sum()) / (8 * len(sent))


def estimate_snr(clean: Frame, noisy: Frame) -> float:
    """Sample-domain SNR in dB; ``math.inf`` when the frames are identical."""
    if clean.geometry != noisy.geometry:
        raise GeometryError(
            f"geometry mismatch: {clean.geometry} vs {noisy.geometry}"
        )
    s = clean.pixels.astype(np.float64) / 255.0
    n = noisy.pixels.astype(np.float64) / 255.0 - s
    noise_power = float(np.sum(n**2))
    if noise_power == 0.0:
        return math.inf
    return 10.0 * math.log10(float(np.sum(s**2)) / noise_power)
