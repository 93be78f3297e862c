"""Full-reference quality metrics, bit-error reporting and data accounting.

PSNR is computed on 8-bit samples against a 255 peak.  MS-SSIM follows the
usual multi-scale construction: Gaussian-windowed SSIM statistics (11x11,
sigma 1.5) over all fully contained windows, 2x2 mean downsampling between
scales, contrast-structure terms at every scale and the luminance term only
at the coarsest, combined as a weighted product.  The fidelity score ``vif``
here is the normalized cross-covariance on luma, sigma_ab / (sigma_a^2 +
sigma_b^2); it is not the wavelet-domain VIF of Sheikh and Bovik.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .frame import Frame, GeometryError

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01**2
SSIM_C2 = 0.03**2

# Reference data-reduction headline carried into reports as an annotation.
REFERENCE_DATA_REDUCTION = 0.9345

CSV_COLUMNS = [
    "frame_index",
    "snr_db",
    "channel_mode",
    "reconstructor",
    "psnr_db",
    "ms_ssim",
    "vif",
    "bep",
    "semantic_bytes",
    "background_bytes_amortized",
    "full_frame_bytes",
]


class MetricError(Exception):
    pass


def _as_float(frame: Frame) -> np.ndarray:
    return frame.pixels.astype(np.float64)


def psnr(a: Frame, b: Frame) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical frames."""
    if a.geometry != b.geometry:
        raise GeometryError(f"geometry mismatch: {a.geometry} vs {b.geometry}")
    mse = float(np.mean((_as_float(a) - _as_float(b)) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


def gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 1-D Gaussian taps."""
    offsets = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return kernel / kernel.sum()


def _filter_valid(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable correlation keeping only fully covered windows."""
    win = np.lib.stride_tricks.sliding_window_view(img, kernel.size, axis=1)
    rows = win @ kernel
    win = np.lib.stride_tricks.sliding_window_view(rows, kernel.size, axis=0)
    return win @ kernel


def _ssim_means(x: np.ndarray, y: np.ndarray, kernel: np.ndarray) -> tuple[float, float]:
    """Mean luminance*cs and mean cs over all windows of one channel pair."""
    mu_x = _filter_valid(x, kernel)
    mu_y = _filter_valid(y, kernel)
    var_x = _filter_valid(x * x, kernel) - mu_x**2
    var_y = _filter_valid(y * y, kernel) - mu_y**2
    cov = _filter_valid(x * y, kernel) - mu_x * mu_y
    lum = (2.0 * mu_x * mu_y + SSIM_C1) / (mu_x**2 + mu_y**2 + SSIM_C1)
    cs = (2.0 * cov + SSIM_C2) / (var_x + var_y + SSIM_C2)
    return float(np.mean(lum * cs)), float(np.mean(cs))


def _downsample2(img: np.ndarray) -> np.ndarray:
    h, w = img.shape
    h2, w2 = h // 2, w // 2
    return img[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2).mean(axis=(1, 3))


def ssim(a: Frame, b: Frame) -> float:
    """Single-scale SSIM (mean of the luminance*cs map, channels averaged)."""
    return ms_ssim(a, b, scales=1)


def ms_ssim(a: Frame, b: Frame, scales: int = 5) -> float:
    """Multi-scale structural similarity in [0, 1]-ish range (1 = identical)."""
    if a.geometry != b.geometry:
        raise GeometryError(f"geometry mismatch: {a.geometry} vs {b.geometry}")
    if not 1 <= scales <= len(MS_SSIM_WEIGHTS):
        raise MetricError(f"scales must be 1..{len(MS_SSIM_WEIGHTS)}, got {scales}")
    needed = SSIM_WINDOW * 2 ** (scales - 1)
    if min(a.width, a.height) < needed:
        raise MetricError(
            f"{a.width}x{a.height} image too small for {scales} scales "
            f"(needs at least {needed} per side)"
        )
    kernel = gaussian_kernel()
    xs = [a.pixels[:, :, c].astype(np.float64) / 255.0 for c in range(a.channels)]
    ys = [b.pixels[:, :, c].astype(np.float64) / 255.0 for c in range(b.channels)]
    result = 1.0
    for scale in range(scales):
        ssim_means = []
        cs_means = []
        for x, y in zip(xs, ys):
            ssim_mean, cs_mean = _ssim_means(x, y, kernel)
            ssim_means.append(ssim_mean)
            cs_means.append(cs_mean)
        weight = MS_SSIM_WEIGHTS[scale]
        last = scale == scales - 1
        term = float(np.mean(ssim_means if last else cs_means))
        result *= term ** weight if term > 0 else term
        if not last:
            xs = [_downsample2(x) for x in xs]
            ys = [_downsample2(y) for y in ys]
    return result


def max_scales(width: int, height: int, limit: int = 5) -> int:
    """Largest usable MS-SSIM scale count for the geometry (at least 1)."""
    scales = 0
    while scales < limit and min(width, height) >= SSIM_WINDOW * 2**scales:
        scales += 1
    return max(scales, 1)


def vif_paper(a: Frame, b: Frame, squared: bool = False) -> float:
    """Normalized cross-covariance fidelity on luma.

    ``squared`` raises the cross-covariance to the second power (a stricter
    literal reading); the default keeps identical non-constant images at 0.5.
    Constant pairs return the 0 sentinel.
    """
    if a.geometry != b.geometry:
        raise GeometryError(f"geometry mismatch: {a.geometry} vs {b.geometry}")
    x = _as_float(a).mean(axis=2).ravel() / 255.0
    y = _as_float(b).mean(axis=2).ravel() / 255.0
    if x.size < 2:
        raise MetricError("need at least 2 samples")
    var_x = float(np.var(x))
    var_y = float(np.var(y))
    denom = var_x + var_y
    if denom == 0.0:
        return 0.0
    cov = float(np.mean(x * y) - np.mean(x) * np.mean(y))
    return (cov * cov if squared else cov) / denom


def data_reduction(
    semantic_bytes: int, background_bytes: int, full_frame_bytes: int
) -> float:
    """Fraction of raw-frame bytes the stream avoided sending."""
    if full_frame_bytes <= 0:
        raise MetricError("full_frame_bytes must be positive")
    return 1.0 - (semantic_bytes + background_bytes) / full_frame_bytes


def amortize_background(total_bytes: int, n_frames: int) -> list[int]:
    """Spread background bytes over frames; integer shares that sum exactly."""
    if n_frames <= 0:
        raise MetricError("need at least one frame")
    share, remainder = divmod(total_bytes, n_frames)
    return [share + 1 if i < remainder else share for i in range(n_frames)]


@dataclass
class FrameScore:
    """One reconstructed frame's metrics and byte accounting."""

    frame_index: int
    snr_db: float
    channel_mode: str
    reconstructor: str
    psnr_db: float
    ms_ssim: float
    vif: float
    bep: float
    semantic_bytes: int
    background_bytes_amortized: int
    full_frame_bytes: int


@dataclass
class QualityReport:
    """Per-frame rows plus exact byte accounting and per-SNR aggregates."""

    rows: list[FrameScore] = field(default_factory=list)
    reference_reduction: float = REFERENCE_DATA_REDUCTION

    @property
    def semantic_bytes(self) -> int:
        return sum(r.semantic_bytes for r in self.rows)

    @property
    def background_bytes(self) -> int:
        return sum(r.background_bytes_amortized for r in self.rows)

    @property
    def full_frame_bytes(self) -> int:
        return sum(r.full_frame_bytes for r in self.rows)

    @property
    def reduction_fraction(self) -> float:
        return data_reduction(
            self.semantic_bytes, self.background_bytes, self.full_frame_bytes
        )

    def aggregates(self) -> dict[tuple[float, str], dict[str, float]]:
        """Metric means grouped by (snr_db, reconstructor)."""
        groups: dict[tuple[float, str], list[FrameScore]] = {}
        for row in self.rows:
            groups.setdefault((row.snr_db, row.reconstructor), []).append(row)
        out = {}
        for key, rows in sorted(groups.items()):
            out[key] = {
                "frames": float(len(rows)),
                "psnr_db": _mean([r.psnr_db for r in rows]),
                "ms_ssim": _mean([r.ms_ssim for r in rows]),
                "vif": _mean([r.vif for r in rows]),
                "bep": _mean([r.bep for r in rows]),
            }
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for r in self.rows:
                writer.writerow(
                    [
                        r.frame_index,
                        repr(r.snr_db),
                        r.channel_mode,
                        r.reconstructor,
                        "+inf" if math.isinf(r.psnr_db) else repr(r.psnr_db),
                        repr(r.ms_ssim),
                        repr(r.vif),
                        repr(r.bep),
                        r.semantic_bytes,
                        r.background_bytes_amortized,
                        r.full_frame_bytes,
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "QualityReport":
        rows = []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != CSV_COLUMNS:
                raise MetricError(f"unexpected CSV columns {header}")
            for rec in reader:
                rows.append(
                    FrameScore(
                        frame_index=int(rec[0]),
                        snr_db=float(rec[1]),
                        channel_mode=rec[2],
                        reconstructor=rec[3],
                        psnr_db=math.inf if rec[4] == "+inf" else float(rec[4]),
                        ms_ssim=float(rec[5]),
                        vif=float(rec[6]),
                        bep=float(rec[7]),
                        semantic_bytes=int(rec[8]),
                        background_bytes_amortized=int(rec[9]),
                        full_frame_bytes=int(rec[10]),
                    )
                )
        return cls(rows=rows)


def _mean(values: list[float]) -> float:
    return sum(values) / len(values) if values else math.nan


def build_report(rows: list[FrameScore]) -> QualityReport:
    """Assemble and sanity-check a report from per-frame scores."""
    for row in rows:
        if row.ms_ssim > 1.0 + 1e-9:
            raise MetricError(f"ms_ssim {row.ms_ssim} above 1 in frame {row.frame_index}")
        if not 0.0 <= row.bep <= 1.0:
            raise MetricError(f"bep {row.bep} outside [0, 1] in frame {row.frame_index}")
    report = QualityReport(rows=list(rows))
    if report.rows and report.reduction_fraction > 1.0:
        raise MetricError("reduction fraction above 1: byte accounting broken")
    return report
