"""Receiver-side composition and pluggable reconstruction.

``compose`` overlays decoded semantic regions on the stored background.  The
default ``paper-literal`` mode rebuilds the coverage mask from nonzero
semantic pixels (a logical OR across channels), which drops genuinely black
object pixels; ``explicit-mask`` trusts the transmitted masks instead, so
zero-valued semantic pixels survive.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels, stream
from .extractor import SemanticFrame
from .frame import Frame, GeometryError

COMPOSE_PAPER_LITERAL = "paper-literal"
COMPOSE_EXPLICIT_MASK = "explicit-mask"
COMPOSE_MODES = (COMPOSE_PAPER_LITERAL, COMPOSE_EXPLICIT_MASK)

RECON_IDENTITY = "identity"
RECON_MEDIAN = "median"
RECON_INPAINT = "inpaint-holes"
RECON_EXTERNAL = "external"
RECON_KINDS = (RECON_IDENTITY, RECON_MEDIAN, RECON_INPAINT, RECON_EXTERNAL)


class ReceiverError(Exception):
    pass


class StreamOrderError(ReceiverError):
    """A semantic record arrived before any background."""


@dataclass(frozen=True)
class ReconstructorSpec:
    kind: str = RECON_IDENTITY
    window: int = 3
    external_cmd: str | None = None
    timeout: float = 120.0

    def __post_init__(self):
        if self.kind not in RECON_KINDS:
            raise ValueError(f"unknown reconstructor kind {self.kind!r}")
        if self.kind == RECON_MEDIAN and (self.window < 3 or self.window % 2 == 0):
            raise ValueError(f"median window must be odd and >= 3, got {self.window}")
        if self.kind == RECON_EXTERNAL and not self.external_cmd:
            raise ValueError("external reconstructor needs a command")


def rasterize(
    semantic: SemanticFrame, geometry: tuple[int, int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Dense overlay and coverage map from the region list.

    Later regions win where regions overlap.  Returns ``(overlay, coverage)``
    with shapes (h, w, c) uint8 and (h, w) bool.
    """
    width, height, channels = geometry
    overlay = np.zeros((height, width, channels), dtype=np.uint8)
    coverage = np.zeros((height, width), dtype=bool)
    for region in semantic.regions:
        box = region.box
        box.check_within(width, height)
        mask = region.mask != 0
        window = overlay[box.y0 : box.y1, box.x0 : box.x1]
        window[mask] = region.payload
        coverage[box.y0 : box.y1, box.x0 : box.x1] |= mask
    return overlay, coverage


def holes_from_semantic(
    semantic: SemanticFrame, geometry: tuple[int, int, int]
) -> np.ndarray:
    """Pixels inside a region's box that no region mask covers."""
    width, height, channels = geometry
    boxed = np.zeros((height, width), dtype=bool)
    _, coverage = rasterize(semantic, geometry)
    for region in semantic.regions:
        box = region.box
        boxed[box.y0 : box.y1, box.x0 : box.x1] = True
    return boxed & ~coverage


def compose(
    background: Frame, semantic: SemanticFrame, mode: str = COMPOSE_PAPER_LITERAL
) -> Frame:
    """Overlay semantic regions on the background.

    Empty semantic frames return the background unchanged.
    """
    if mode not in COMPOSE_MODES:
        raise ValueError(f"unknown compose mode {mode!r}")
    if not semantic.regions:
        return background
    overlay, coverage = rasterize(semantic, background.geometry)
    if mode == COMPOSE_PAPER_LITERAL:
        keep = np.any(overlay != 0, axis=2)
    else:
        keep = coverage
    return Frame(np.where(keep[:, :, np.newaxis], overlay, background.pixels))


def _neighbor_sums(values: np.ndarray, valid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum of valid 8-neighbor values and the valid-neighbor count per pixel."""
    h, w = valid.shape
    sums = np.zeros_like(values, dtype=np.float64)
    counts = np.zeros((h, w), dtype=np.int32)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            ys = slice(max(dy, 0), min(h + dy, h))
            yd = slice(max(-dy, 0), min(h - dy, h))
            xs = slice(max(dx, 0), min(w + dx, w))
            xd = slice(max(-dx, 0), min(w - dx, w))
            v = valid[ys, xs]
            sums[yd, xd][v] += values[ys, xs][v]
            counts[yd, xd] += v
    return sums, counts


def fill_holes(frame: Frame, holes: np.ndarray) -> Frame:
    """Inpaint flagged pixels from surrounding content, growing inward."""
    if holes.shape != (frame.height, frame.width):
        raise GeometryError(
            f"hole map {holes.shape} does not match frame {frame.geometry}"
        )
    if not holes.any():
        return frame
    values = frame.pixels.astype(np.float64)
    known = ~holes
    if not known.any():
        return frame
    remaining = holes.copy()
    while remaining.any():
        sums, counts = _neighbor_sums(values, ~remaining)
        fillable = remaining & (counts > 0)
        if not fillable.any():
            break
        values[fillable] = sums[fillable] / counts[fillable][:, np.newaxis]
        remaining &= ~fillable
    return Frame(np.clip(np.rint(values), 0, 255).astype(np.uint8))


def reconstruct(
    composed: Frame, spec: ReconstructorSpec, holes: np.ndarray | None = None
) -> Frame:
    """Apply the configured reconstructor to one composed frame."""
    if spec.kind == RECON_IDENTITY:
        return composed
    if spec.kind == RECON_MEDIAN:
        return Frame(kernels.median_filter(composed.pixels, spec.window))
    if spec.kind == RECON_INPAINT:
        if holes is None or not holes.any():
            return composed
        return fill_holes(composed, holes)
    if spec.kind == RECON_EXTERNAL:
        from . import plugin

        return plugin.run_reconstructor(
            spec.external_cmd, [composed], timeout=spec.timeout
        )[0]
    raise ValueError(f"unknown reconstructor kind {spec.kind!r}")


class Receiver:
    """Stateful receive loop: stores backgrounds, emits reconstructed frames.

    Background records are stored (optionally denoised first) and emit
    nothing; semantic records compose against the stored background and emit
    a reconstructed frame.  A semantic record before any background is an
    error.
    """

    def __init__(
        self,
        mode: str = COMPOSE_PAPER_LITERAL,
        reconstructor: ReconstructorSpec = ReconstructorSpec(),
        denoise_background: bool = False,
    ):
        if mode not in COMPOSE_MODES:
            raise ValueError(f"unknown compose mode {mode!r}")
        self.mode = mode
        self.reconstructor = reconstructor
        self.denoise_background = denoise_background
        self.background: Frame | None = None

    def step(self, record: bytes) -> Frame | None:
        header = stream.peek_header(record)
        if header.kind == stream.KIND_BACKGROUND:
            update = stream.decode_background(record)
            frame = update.frame
            if self.background is not None and frame.geometry != self.background.geometry:
                raise GeometryError(
                    f"background geometry changed: {frame.geometry} vs "
                    f"{self.background.geometry}"
                )
            if self.denoise_background:
                frame = reconstruct(frame, self.reconstructor)
            self.background = frame
            return None
        semantic = stream.decode_semantic(record)
        if self.background is None:
            raise StreamOrderError(
                f"semantic record {semantic.frame_index} arrived before any background"
            )
        geometry = (header.width, header.height, header.channels)
        if geometry != self.background.geometry:
            raise GeometryError(
                f"record geometry {geometry} vs background "
                f"{self.background.geometry}"
            )
        composed = compose(self.background, semantic, self.mode)
        holes = None
        if self.reconstructor.kind == RECON_INPAINT:
            holes = holes_from_semantic(semantic, geometry)
        return reconstruct(composed, self.reconstructor, holes)
