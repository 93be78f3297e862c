from __future__ import annotations

import numpy as np
import pytest

from semcom.frame import Frame


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def random_frame(rng, width=16, height=12, channels=3, low=0, high=256) -> Frame:
    return Frame(
        rng.integers(low, high, size=(height, width, channels), dtype=np.uint8)
    )


def square_on_flat(
    width=64,
    height=48,
    bg=(10, 10, 10),
    color=(200, 40, 40),
    x=5,
    y=5,
    side=10,
) -> tuple[Frame, Frame]:
    """(background, frame-with-square) pair for extraction tests."""
    background = Frame.full(width, height, bg)
    pixels = background.pixels.copy()
    pixels[y : y + side, x : x + side] = color
    return background, Frame(pixels)
