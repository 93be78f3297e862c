"""Synthetic fixed-camera sequences with ground-truth object masks.

Scenes have a static background (flat color, horizontal gradient, or a tiled
texture file) and rigid objects moving at constant pixel velocity.  Motion
wraps within the in-bounds placement range, so objects never clip the frame
edge.  Object colors must differ from every background pixel by at least the
scene margin, which keeps threshold-based extraction exact on these scenes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .frame import Frame, load_frame

BG_FLAT = "flat"
BG_GRADIENT = "gradient"
BG_TEXTURE = "texture"

SHAPE_RECT = "rect"
SHAPE_DISK = "disk"


class SceneError(Exception):
    pass


@dataclass(frozen=True)
class BackgroundSpec:
    kind: str = BG_FLAT
    color: tuple[int, int, int] = (32, 32, 32)
    color2: tuple[int, int, int] = (96, 96, 96)  # gradient end color
    path: str | None = None  # texture file

    def __post_init__(self):
        if self.kind not in (BG_FLAT, BG_GRADIENT, BG_TEXTURE):
            raise SceneError(f"unknown background kind {self.kind!r}")
        if self.kind == BG_TEXTURE and not self.path:
            raise SceneError("texture background needs a path")


@dataclass(frozen=True)
class ObjectSpec:
    shape: str = SHAPE_RECT
    size: tuple[int, int] = (10, 10)  # rect w,h; disk uses size[0] as radius
    color: tuple[int, int, int] = (220, 220, 220)
    velocity: tuple[int, int] = (0, 0)
    start: tuple[int, int] | None = None  # None: seeded random placement

    def __post_init__(self):
        if self.shape not in (SHAPE_RECT, SHAPE_DISK):
            raise SceneError(f"unknown object shape {self.shape!r}")

    @property
    def extent(self) -> tuple[int, int]:
        """Bounding box (width, height) of the object footprint."""
        if self.shape == SHAPE_DISK:
            d = 2 * self.size[0] + 1
            return (d, d)
        return self.size

    def footprint(self) -> np.ndarray:
        """Boolean footprint within the extent box."""
        w, h = self.extent
        if self.shape == SHAPE_RECT:
            return np.ones((h, w), dtype=bool)
        r = self.size[0]
        yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
        return xx**2 + yy**2 <= r**2


@dataclass(frozen=True)
class SceneSpec:
    width: int = 320
    height: int = 240
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    objects: tuple[ObjectSpec, ...] = ()
    frame_count: int = 10
    seed: int = 0
    margin: int = 1  # minimum max-channel distance of objects from background

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise SceneError("scene must be at least 1x1")
        if self.frame_count < 1:
            raise SceneError("frame_count must be >= 1")
        if self.margin < 1:
            raise SceneError("margin must be >= 1")


def render_background(spec: SceneSpec) -> Frame:
    bg = spec.background
    if bg.kind == BG_FLAT:
        return Frame.full(spec.width, spec.height, bg.color)
    if bg.kind == BG_GRADIENT:
        t = np.linspace(0.0, 1.0, spec.width)[np.newaxis, :, np.newaxis]
        a = np.asarray(bg.color, dtype=np.float64)
        b = np.asarray(bg.color2, dtype=np.float64)
        row = a * (1.0 - t) + b * t
        pixels = np.broadcast_to(row, (spec.height, spec.width, 3))
        return Frame(np.rint(pixels).astype(np.uint8))
    tile = load_frame(Path(bg.path)).pixels
    if tile.shape[2] == 1:
        tile = np.repeat(tile, 3, axis=2)
    reps_y = -(-spec.height // tile.shape[0])
    reps_x = -(-spec.width // tile.shape[1])
    tiled = np.tile(tile, (reps_y, reps_x, 1))
    return Frame(tiled[: spec.height, : spec.width])


def _validate_margin(spec: SceneSpec, background: Frame) -> None:
    bg = background.pixels.astype(np.int16)
    for i, obj in enumerate(spec.objects):
        color = np.asarray(obj.color, dtype=np.int16)
        min_dist = np.abs(bg - color).max(axis=2).min()
        if min_dist < spec.margin:
            raise SceneError(
                f"object {i} color {obj.color} within {min_dist} of the "
                f"background; scene margin is {spec.margin}"
            )


def _start_positions(spec: SceneSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    starts = []
    for i, obj in enumerate(spec.objects):
        ow, oh = obj.extent
        if ow > spec.width or oh > spec.height:
            raise SceneError(
                f"object {i} extent {ow}x{oh} exceeds frame "
                f"{spec.width}x{spec.height}"
            )
        if obj.start is not None:
            x, y = obj.start
            if not (0 <= x <= spec.width - ow and 0 <= y <= spec.height - oh):
                raise SceneError(f"object {i} start {obj.start} out of bounds")
            starts.append((x, y))
        else:
            starts.append(
                (
                    int(rng.integers(0, spec.width - ow + 1)),
                    int(rng.integers(0, spec.height - oh + 1)),
                )
            )
    return starts


def generate(spec: SceneSpec) -> tuple[list[Frame], list[np.ndarray]]:
    """Render the sequence; returns frames and per-frame truth masks."""
    background = render_background(spec)
    _validate_margin(spec, background)
    rng = np.random.default_rng(spec.seed)
    starts = _start_positions(spec, rng)
    footprints = [obj.footprint() for obj in spec.objects]
    frames = []
    masks = []
    for t in range(spec.frame_count):
        pixels = background.pixels.copy()
        mask = np.zeros((spec.height, spec.width), dtype=bool)
        for obj, (sx, sy), foot in zip(spec.objects, starts, footprints):
            ow, oh = obj.extent
            x = (sx + obj.velocity[0] * t) % (spec.width - ow + 1)
            y = (sy + obj.velocity[1] * t) % (spec.height - oh + 1)
            window = pixels[y : y + oh, x : x + ow]
            window[foot] = obj.color
            mask[y : y + oh, x : x + ow] |= foot
        frames.append(Frame(pixels))
        masks.append(mask)
    return frames, masks
