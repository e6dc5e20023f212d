import numpy as np
import pytest

import smartbrush as sb


@pytest.fixture(scope="module")
def game_map():
    return sb.synth_map(id="py", grid_width=2, grid_height=1, tile_size=32, seed=11)


def test_map_shapes(game_map):
    assert game_map.grid_width == 2 and game_map.tile_size == 32
    assert game_map.chunk_weights((0, 0)).shape == (sb.TILES_PER_CHUNK, 32, 32)
    region = game_map.render_region((0, 0), (1, 0))
    assert region.shape == (3, 32, 64)
    np.testing.assert_allclose(region[:, :, :32], game_map.render_chunk((0, 0)))


def test_bundle_round_trip(game_map, tmp_path):
    sb.save_bundle(game_map, tmp_path / "b")
    loaded = sb.load_bundle(tmp_path / "b")
    assert loaded.id == "py"
    np.testing.assert_allclose(loaded.chunk_weights((1, 0)), game_map.chunk_weights((1, 0)), atol=1 / 65535)


@pytest.mark.parametrize("mode", sb.MODES)
def test_random_mask_lands_in_mode(mode):
    for seed in range(5):
        assert sb.classify_mask(sb.random_mask(mode, seed, 32)) == mode


def test_ssim_identity_and_errors():
    img = np.random.default_rng(0).random((3, 24, 24))
    assert sb.ssim(img, img) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        sb.ssim(img, img[:, :20, :20])


def test_inpaint_keeps_unbrushed_pixels(game_map):
    mask = np.zeros((32, 32))
    mask[8:24, 8:24] = 1
    out = sb.load_generator("baseline").inpaint(game_map, (0, 0), mask, seed=4)
    before = game_map.chunk_weights((0, 0))
    np.testing.assert_array_equal(out[:, mask == 0], before[:, mask == 0])


def test_generate_region_reports_seam(game_map):
    full = np.ones((32, 32))
    edited, pairs = sb.generate_region(game_map, {(0, 0): full, (1, 0): full}, sb.load_generator(), seed=2)
    assert len(pairs) == 1 and pairs[0].intersecting
    assert pairs[0].seam_after <= pairs[0].seam_before
    sums = np.stack([edited.chunk_weights((x, 0)).sum(axis=0) for x in range(2)])
    assert sums.min() > 0


def test_missing_chunk_raises_key_error(game_map):
    with pytest.raises(KeyError):
        game_map.chunk_weights((5, 5))
