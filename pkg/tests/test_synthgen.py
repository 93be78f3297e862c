import numpy as np
import pytest

from semcom.frame import save_frame
from semcom.synthgen import (
    BackgroundSpec,
    ObjectSpec,
    SceneError,
    SceneSpec,
    generate,
    render_background,
)


def basic_scene(**overrides) -> SceneSpec:
    defaults = dict(
        width=64,
        height=48,
        background=BackgroundSpec(kind="flat", color=(10, 10, 10)),
        objects=(
            ObjectSpec(
                shape="rect",
                size=(10, 10),
                color=(200, 60, 60),
                velocity=(1, 0),
                start=(5, 5),
            ),
        ),
        frame_count=5,
        margin=60,
    )
    defaults.update(overrides)
    return SceneSpec(**defaults)


def test_zero_objects_yields_background_everywhere():
    spec = basic_scene(objects=())
    frames, masks = generate(spec)
    background = render_background(spec)
    assert all(frame == background for frame in frames)
    assert not any(mask.any() for mask in masks)


def test_mask_centroid_advances_with_velocity():
    frames, masks = generate(basic_scene())
    centroids = [np.argwhere(m)[:, 1].mean() for m in masks]
    deltas = np.diff(centroids)
    assert np.allclose(deltas, 1.0)


def test_frames_differ_from_background_only_at_mask():
    spec = basic_scene()
    background = render_background(spec)
    frames, masks = generate(spec)
    for frame, mask in zip(frames, masks):
        differs = np.any(frame.pixels != background.pixels, axis=2)
        assert np.array_equal(differs, mask)


def test_occupancy_matches_object_areas():
    spec = basic_scene(
        objects=(
            ObjectSpec(size=(10, 10), color=(200, 60, 60), start=(2, 2)),
            ObjectSpec(size=(6, 4), color=(60, 200, 60), start=(40, 30)),
        )
    )
    _, masks = generate(spec)
    assert all(int(m.sum()) == 10 * 10 + 6 * 4 for m in masks)


def test_disk_footprint_pixels():
    spec = basic_scene(
        objects=(
            ObjectSpec(shape="disk", size=(3, 3), color=(220, 220, 40), start=(10, 10)),
        )
    )
    _, masks = generate(spec)
    yy, xx = np.mgrid[-3:4, -3:4]
    assert int(masks[0].sum()) == int((xx**2 + yy**2 <= 9).sum())


def test_determinism_and_seeded_placement():
    spec = basic_scene(
        objects=(ObjectSpec(size=(8, 8), color=(220, 220, 220), start=None),),
        seed=42,
    )
    frames_a, masks_a = generate(spec)
    frames_b, masks_b = generate(spec)
    assert all(a == b for a, b in zip(frames_a, frames_b))
    assert all(np.array_equal(a, b) for a, b in zip(masks_a, masks_b))
    different_seed = basic_scene(
        objects=(ObjectSpec(size=(8, 8), color=(220, 220, 220), start=None),),
        seed=43,
    )
    frames_c, _ = generate(different_seed)
    assert any(a != c for a, c in zip(frames_a, frames_c))


def test_wrap_keeps_objects_in_bounds():
    spec = basic_scene(
        objects=(
            ObjectSpec(size=(10, 10), color=(200, 60, 60), velocity=(7, 5), start=(50, 30)),
        ),
        frame_count=30,
    )
    frames, masks = generate(spec)
    for mask in masks:
        assert int(mask.sum()) == 100  # never clipped at an edge


def test_gradient_and_texture_backgrounds(tmp_path):
    gradient = basic_scene(
        background=BackgroundSpec(
            kind="gradient", color=(0, 0, 0), color2=(80, 80, 80)
        ),
        objects=(),
    )
    frame = render_background(gradient)
    assert frame.pixels[0, 0, 0] == 0
    assert frame.pixels[0, -1, 0] == 80
    tile_path = tmp_path / "tile.ppm"
    tile = np.arange(27, dtype=np.uint8).reshape(3, 3, 3)
    from semcom.frame import Frame

    save_frame(Frame(tile), tile_path)
    textured = basic_scene(
        background=BackgroundSpec(kind="texture", path=str(tile_path)),
        objects=(),
    )
    background = render_background(textured)
    assert background.geometry == (64, 48, 3)
    assert np.array_equal(background.pixels[:3, :3], tile)
    assert np.array_equal(background.pixels[3:6, 3:6], tile)


def test_extractor_boxes_cover_truth_masks():
    """With threshold < margin, detected full-box regions cover every truth pixel."""
    from semcom.extractor import ExtractorConfig, detect_regions

    spec = basic_scene(
        objects=(
            ObjectSpec(size=(10, 10), color=(200, 60, 60), velocity=(2, 1), start=(5, 5)),
            ObjectSpec(
                shape="disk", size=(4, 4), color=(60, 200, 60), velocity=(-1, 2), start=(40, 20)
            ),
        ),
        frame_count=6,
    )
    background = render_background(spec)
    frames, masks = generate(spec)
    cfg = ExtractorConfig(diff_threshold=30, mask_mode="full-box")
    for frame, mask in zip(frames, masks):
        covered = np.zeros_like(mask)
        for box in detect_regions(frame, background, cfg):
            covered[box.y0 : box.y1, box.x0 : box.x1] = True
        assert (covered | ~mask).all()  # every truth pixel inside some box


def test_margin_violation_is_error():
    spec = basic_scene(
        objects=(ObjectSpec(size=(4, 4), color=(30, 30, 30), start=(0, 0)),),
        margin=60,
    )
    with pytest.raises(SceneError, match="margin"):
        generate(spec)


def test_object_larger_than_frame_is_error():
    spec = basic_scene(objects=(ObjectSpec(size=(100, 10), color=(200, 0, 0)),))
    with pytest.raises(SceneError, match="exceeds"):
        generate(spec)


def test_out_of_bounds_start_is_error():
    spec = basic_scene(
        objects=(ObjectSpec(size=(10, 10), color=(200, 0, 0), start=(60, 5)),)
    )
    with pytest.raises(SceneError, match="out of bounds"):
        generate(spec)
