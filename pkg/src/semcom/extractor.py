"""Transmitter-side semantic extraction and scheduling.

The built-in extractor is classical background subtraction: threshold the
per-pixel difference against the current background, dilate, take 8-connected
components as regions.  External neural extractors plug in through the
process protocol (see ``semcom.plugin``); they hand back a binary mask per
frame from which ``regions_from_mask`` builds the same region structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .frame import Frame, GeometryError, abs_diff

MASK_TIGHT = "tight"
MASK_FULL_BOX = "full-box"


@dataclass(frozen=True)
class BoundingBox:
    """Half-open pixel box: x0 <= x < x1, y0 <= y < y1."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate box {self}")
        if self.x0 < 0 or self.y0 < 0:
            raise ValueError(f"negative box origin {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0

    @property
    def area(self) -> int:
        return self.width * self.height

    def check_within(self, frame_width: int, frame_height: int) -> None:
        if self.x1 > frame_width or self.y1 > frame_height:
            raise GeometryError(
                f"box {self} exceeds frame bounds {frame_width}x{frame_height}"
            )


@dataclass
class Region:
    """One semantic region: box, binary mask of the box extent, masked pixels.

    ``mask`` has shape (box.height, box.width); ``payload`` holds the frame
    pixels at set mask bits in raster order, shape (popcount, channels).
    """

    box: BoundingBox
    mask: np.ndarray
    payload: np.ndarray

    def validate(self, channels: int) -> None:
        if self.mask.shape != (self.box.height, self.box.width):
            raise ValueError(
                f"mask shape {self.mask.shape} does not match box {self.box}"
            )
        popcount = int(np.count_nonzero(self.mask))
        if self.payload.shape != (popcount, channels):
            raise ValueError(
                f"payload shape {self.payload.shape} != ({popcount}, {channels})"
            )


@dataclass
class SemanticFrame:
    """Per-frame dynamic content: ordered regions extracted from one frame."""

    frame_index: int
    regions: list[Region] = field(default_factory=list)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemanticFrame):
            return NotImplemented
        if self.frame_index != other.frame_index or len(self.regions) != len(
            other.regions
        ):
            return False
        for a, b in zip(self.regions, other.regions):
            if a.box != b.box:
                return False
            if not np.array_equal(a.mask != 0, b.mask != 0):
                return False
            if not np.array_equal(a.payload, b.payload):
                return False
        return True


@dataclass
class BackgroundUpdate:
    """A background raster tagged with its transmission period ordinal."""

    period_index: int
    frame: Frame


@dataclass(frozen=True)
class ExtractorConfig:
    diff_threshold: int = 30
    min_region_area: int = 1
    dilation_radius: int = 0
    mask_mode: str = MASK_TIGHT
    background_period: int = 30
    prompt: str | None = None  # forwarded to external extractors only

    def __post_init__(self):
        if not 0 <= self.diff_threshold <= 255:
            raise ValueError(f"diff_threshold {self.diff_threshold} outside 0..255")
        if self.background_period < 1:
            raise ValueError("background_period must be >= 1")
        if self.min_region_area < 1:
            raise ValueError("min_region_area must be >= 1")
        if self.mask_mode not in (MASK_TIGHT, MASK_FULL_BOX):
            raise ValueError(f"unknown mask_mode {self.mask_mode!r}")


def _component_boxes(labels: np.ndarray, count: int) -> list[tuple[BoundingBox, int]]:
    """Tight bounding box and pixel area per component label."""
    if count == 0:
        return []
    ys, xs = np.nonzero(labels)
    ids = labels[ys, xs]
    areas = np.bincount(ids, minlength=count + 1)
    x0 = np.full(count + 1, np.iinfo(np.int64).max)
    y0 = np.full(count + 1, np.iinfo(np.int64).max)
    x1 = np.zeros(count + 1, dtype=np.int64)
    y1 = np.zeros(count + 1, dtype=np.int64)
    np.minimum.at(x0, ids, xs)
    np.minimum.at(y0, ids, ys)
    np.maximum.at(x1, ids, xs)
    np.maximum.at(y1, ids, ys)
    return [
        (
            BoundingBox(int(x0[i]), int(y0[i]), int(x1[i]) + 1, int(y1[i]) + 1),
            int(areas[i]),
        )
        for i in range(1, count + 1)
    ]


def _boxes_from_foreground(fg: np.ndarray, cfg: ExtractorConfig) -> list[BoundingBox]:
    dilated = kernels.dilate(fg, cfg.dilation_radius)
    labels, count = kernels.label_components(dilated)
    boxes = [
        box
        for box, area in _component_boxes(labels, count)
        if area >= cfg.min_region_area
    ]
    boxes.sort(key=lambda b: (b.y0, b.x0))
    return boxes


def detect_regions(
    frame: Frame, background: Frame, cfg: ExtractorConfig
) -> list[BoundingBox]:
    """Bounding boxes of changed regions, sorted by (y0, x0).

    A pixel is foreground when its max-channel difference against the
    background exceeds ``diff_threshold``; foreground is dilated by
    ``dilation_radius`` before 8-connected component labeling, and components
    smaller than ``min_region_area`` pixels are dropped.
    """
    diff = abs_diff(frame, background)
    fg = diff.pixels[:, :, 0] > cfg.diff_threshold
    return _boxes_from_foreground(fg, cfg)


def extract_semantics(
    frame: Frame,
    boxes: list[BoundingBox],
    background: Frame,
    cfg: ExtractorConfig,
    frame_index: int = 0,
) -> SemanticFrame:
    """Build the semantic frame for ``boxes``.

    ``tight`` masks keep only pixels whose difference against the background
    exceeds the threshold; ``full-box`` masks cover the whole box.
    """
    diff = abs_diff(frame, background).pixels[:, :, 0]
    regions = []
    for box in boxes:
        box.check_within(frame.width, frame.height)
        if cfg.mask_mode == MASK_FULL_BOX:
            mask = np.ones((box.height, box.width), dtype=bool)
        else:
            mask = diff[box.y0 : box.y1, box.x0 : box.x1] > cfg.diff_threshold
        window = frame.pixels[box.y0 : box.y1, box.x0 : box.x1]
        payload = window[mask].copy()
        regions.append(Region(box=box, mask=mask, payload=payload))
    return SemanticFrame(frame_index=frame_index, regions=regions)


def regions_from_mask(
    frame: Frame, mask: np.ndarray, cfg: ExtractorConfig, frame_index: int = 0
) -> SemanticFrame:
    """Region structure from an externally produced frame-sized binary mask."""
    if mask.shape != (frame.height, frame.width):
        raise GeometryError(
            f"mask shape {mask.shape} does not match frame {frame.geometry}"
        )
    fg = mask != 0
    boxes = _boxes_from_foreground(fg, cfg)
    regions = []
    for box in boxes:
        if cfg.mask_mode == MASK_FULL_BOX:
            box_mask = np.ones((box.height, box.width), dtype=bool)
        else:
            box_mask = fg[box.y0 : box.y1, box.x0 : box.x1].copy()
        window = frame.pixels[box.y0 : box.y1, box.x0 : box.x1]
        regions.append(
            Region(box=box, mask=box_mask, payload=window[box_mask].copy())
        )
    return SemanticFrame(frame_index=frame_index, regions=regions)


@dataclass
class TransmitStep:
    """Output of one transmitter iteration."""

    semantic: SemanticFrame
    background_update: BackgroundUpdate | None


class Transmitter:
    """Stateful per-frame transmit loop.

    Every frame emits a semantic frame (possibly empty).  When no regions are
    detected the current background is replaced by the frame.  Every
    ``background_period`` frames the current background is emitted as a
    background update and the counter resets.
    """

    def __init__(
        self,
        initial_background: Frame,
        cfg: ExtractorConfig,
        first_period_index: int = 0,
    ):
        self.background = initial_background
        self.cfg = cfg
        self.frames_since_send = 0  # always < background_period after step()
        self.period_index = first_period_index
        self._frame_index = 0

    def step(
        self, frame: Frame, external_mask: np.ndarray | None = None
    ) -> TransmitStep:
        if frame.geometry != self.background.geometry:
            raise GeometryError(
                f"frame {frame.geometry} vs background {self.background.geometry}"
            )
        if external_mask is not None:
            semantic = regions_from_mask(
                frame, external_mask, self.cfg, self._frame_index
            )
            if not semantic.regions:
                self.background = frame
        else:
            boxes = detect_regions(frame, self.background, self.cfg)
            if not boxes:
                self.background = frame
            semantic = extract_semantics(
                frame, boxes, self.background, self.cfg, self._frame_index
            )
        self._frame_index += 1
        self.frames_since_send += 1
        update = None
        if self.frames_since_send == self.cfg.background_period:
            update = BackgroundUpdate(self.period_index, self.background)
            self.period_index += 1
            self.frames_since_send = 0
        return TransmitStep(semantic=semantic, background_update=update)


def transmitter_step(
    tx: Transmitter, frame: Frame, external_mask: np.ndarray | None = None
) -> TransmitStep:
    """Functional alias for ``Transmitter.step``."""
    return tx.step(frame, external_mask)
