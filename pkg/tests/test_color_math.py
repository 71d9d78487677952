import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from restain.color import (
    ConcentrationMap,
    OdImage,
    ReferenceProfile,
    RgbTile,
    StainMatrix,
    deconvolve,
    linear_transfer,
    od_to_rgb,
    pseudo_inverse,
    recompose,
    rgb_to_od,
)
from restain.errors import RankDeficientStainsError, ValidationError
from restain.profiles import her2_matrix

from helpers import full_sweep_tile, random_stain_matrix


class TestRgbTile:
    def test_rejects_zero_size(self):
        with pytest.raises(ValidationError):
            RgbTile(np.zeros((0, 4, 3), dtype=np.uint8))

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            RgbTile(np.full((2, 2, 3), 300, dtype=np.int32))

    def test_rejects_zero_white_point_component(self):
        with pytest.raises(ValidationError):
            RgbTile(np.zeros((2, 2, 3), dtype=np.uint8), white_point=(255.0, 0.0, 255.0))

    def test_pixels_frozen(self):
        tile = RgbTile(np.zeros((2, 2, 3), dtype=np.uint8))
        with pytest.raises(ValueError):
            tile.pixels[0, 0, 0] = 1


class TestStainMatrix:
    def test_rejects_non_unit_columns(self):
        cols = np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
        with pytest.raises(ValidationError):
            StainMatrix(cols)

    def test_rejects_negative_components(self):
        cols = np.array([[0.8, 0.0], [-0.6, 1.0], [0.0, 0.0]])
        with pytest.raises(ValidationError):
            StainMatrix(cols)

    def test_rejects_too_many_stains(self):
        with pytest.raises(ValidationError):
            StainMatrix(np.eye(4)[:3, :4])


class TestRgbToOd:
    def test_background_absorbs_nothing(self):
        tile = RgbTile(np.full((2, 2, 3), 255, dtype=np.uint8))
        od = rgb_to_od(tile)
        assert np.allclose(od.values, 0.0)

    def test_decade_ratio_gives_unit_density(self):
        # (p + 1) / (I0 + 1) = (24 + 1) / (249 + 1) = 0.1 exactly -> od = 1
        tile = RgbTile(np.full((1, 1, 3), 24, dtype=np.uint8), white_point=(249.0, 249.0, 249.0))
        od = rgb_to_od(tile)
        assert np.allclose(od.values, 1.0, atol=1e-12)

    def test_clamped_at_zero_when_brighter_than_white(self):
        tile = RgbTile(np.full((1, 1, 3), 255, dtype=np.uint8), white_point=(100.0, 100.0, 100.0))
        assert np.all(rgb_to_od(tile).values == 0.0)


class TestOdToRgb:
    def test_zero_density_is_background(self):
        od = OdImage(np.zeros((2, 2, 3)))
        tile = od_to_rgb(od)
        assert np.all(tile.pixels == 255)

    def test_unit_density_hand_value(self):
        # round((255 + 1) * 10^-1 - 1) = round(24.6) = 25
        od = OdImage(np.ones((1, 1, 3)))
        assert np.all(od_to_rgb(od).pixels == 25)

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            OdImage(np.full((1, 1, 3), np.inf))

    def test_exhaustive_round_trip(self):
        tile = full_sweep_tile()
        back = od_to_rgb(rgb_to_od(tile))
        delta = np.abs(back.pixels.astype(int) - tile.pixels.astype(int))
        assert delta.max() <= 1

    @given(st.integers(0, 2**31 - 1), st.integers(101, 255))
    @settings(max_examples=25, deadline=None)
    def test_round_trip_random_white_points(self, seed, white):
        rng = np.random.default_rng(seed)
        pixels = rng.integers(0, white + 1, size=(8, 8, 3), dtype=np.uint8)
        wp = (float(white),) * 3
        tile = RgbTile(pixels, white_point=wp)
        back = od_to_rgb(rgb_to_od(tile), wp)
        assert np.abs(back.pixels.astype(int) - pixels.astype(int)).max() <= 1


class TestPseudoInverse:
    def test_identity(self):
        m = StainMatrix(np.eye(3))
        assert np.allclose(pseudo_inverse(m), np.eye(3), atol=1e-12)

    def test_orthonormal_two_columns(self):
        m = StainMatrix(np.eye(3)[:, :2])
        p = pseudo_inverse(m)
        assert np.allclose(p, m.columns.T, atol=1e-12)
        assert np.allclose(p @ m.columns, np.eye(2), atol=1e-12)

    def test_moore_penrose_conditions_match_svd_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(30):
            n_s = int(rng.integers(1, 4))
            m = random_stain_matrix(rng, n_s)
            p = pseudo_inverse(m)
            # independent oracle: SVD-based pseudo-inverse
            oracle = np.linalg.pinv(m.columns)
            assert np.allclose(p, oracle, atol=1e-10)
            a = m.columns
            assert np.linalg.norm(a @ p @ a - a) < 1e-8
            assert np.linalg.norm(p @ a @ p - p) < 1e-8
            assert np.linalg.norm((a @ p).T - a @ p) < 1e-8
            assert np.linalg.norm((p @ a).T - p @ a) < 1e-8
            assert np.allclose(p @ a, np.eye(n_s), atol=1e-8)

    def test_parallel_columns_rejected(self):
        col = np.array([0.6, 0.7, np.sqrt(1 - 0.36 - 0.49)])
        m = StainMatrix(np.stack([col, col], axis=1))
        with pytest.raises(RankDeficientStainsError):
            pseudo_inverse(m)


class TestDeconvolveRecompose:
    def test_identity_matrix_unmixes_channelwise(self):
        rng = np.random.default_rng(0)
        od = OdImage(rng.uniform(0, 2, size=(5, 4, 3)))
        c = deconvolve(od, StainMatrix(np.eye(3)))
        assert np.allclose(c.values, od.values)

    def test_zero_density_zero_concentration(self, her2_profile):
        od = OdImage(np.zeros((4, 4, 3)))
        c = deconvolve(od, her2_profile.stain_matrix)
        assert np.allclose(c.values, 0.0)

    def test_forward_model_recovery(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            m = random_stain_matrix(rng, 3)
            c_true = rng.uniform(0, 1.5, size=(6, 5, 3))
            od = recompose(ConcentrationMap(c_true), m)
            c_hat = deconvolve(od, m)
            assert np.abs(c_hat.values - c_true).max() < 1e-6

    def test_round_trip_od(self):
        rng = np.random.default_rng(8)
        m = random_stain_matrix(rng, 3)
        od = OdImage(rng.uniform(0, 1.5, size=(6, 6, 3)))
        back = recompose(deconvolve(od, m), m)
        assert np.abs(back.values - od.values).max() < 1e-6

    def test_recompose_channel_mismatch(self):
        c = ConcentrationMap(np.zeros((2, 2, 2)))
        with pytest.raises(ValidationError):
            recompose(c, StainMatrix(np.eye(3)))

    def test_recompose_trivia(self):
        c = ConcentrationMap(np.zeros((2, 2, 3)))
        assert np.all(recompose(c, StainMatrix(np.eye(3))).values == 0.0)
        rng = np.random.default_rng(3)
        vals = rng.uniform(0, 1, size=(3, 3, 3))
        assert np.allclose(recompose(ConcentrationMap(vals), StainMatrix(np.eye(3))).values, vals)


class TestLinearTransfer:
    def test_identity_transfer(self, her2_profile):
        rng = np.random.default_rng(5)
        tile = RgbTile(rng.integers(0, 256, size=(12, 12, 3), dtype=np.uint8))
        out = linear_transfer(tile, her2_profile, her2_profile)
        assert np.abs(out.pixels.astype(int) - tile.pixels.astype(int)).max() <= 1

    def test_background_maps_to_background(self, brand_pair):
        a, b = brand_pair
        tile = RgbTile(np.full((6, 6, 3), 255, dtype=np.uint8), white_point=a.white_point)
        out = linear_transfer(tile, a, b)
        assert np.all(out.pixels == 255)

    def test_shared_concentration_forward_model(self, brand_pair):
        a, b = brand_pair
        rng = np.random.default_rng(9)
        c_true = np.zeros((8, 8, 3))
        c_true[..., 0] = rng.uniform(0, 1, size=(8, 8)) * (rng.random((8, 8)) < 0.5)
        c_true[..., 1] = rng.uniform(0, 1.2, size=(8, 8)) * (c_true[..., 0] == 0)
        cmap = ConcentrationMap(c_true)
        tile_a = od_to_rgb(recompose(cmap, a.stain_matrix), a.white_point)
        tile_b = od_to_rgb(recompose(cmap, b.stain_matrix), b.white_point)
        out = linear_transfer(tile_a, a, b)
        assert np.abs(out.pixels.astype(int) - tile_b.pixels.astype(int)).max() <= 1

    def test_preserves_concentrations_in_od_pipeline(self, brand_pair):
        a, b = brand_pair
        rng = np.random.default_rng(10)
        tile = RgbTile(rng.integers(0, 256, size=(10, 10, 3), dtype=np.uint8))
        c_in = deconvolve(rgb_to_od(tile), a.stain_matrix)
        c_out = deconvolve(recompose(c_in, b.stain_matrix), b.stain_matrix)
        assert np.abs(c_out.values - c_in.values).max() < 1e-4

    def test_deterministic(self, brand_pair):
        a, b = brand_pair
        rng = np.random.default_rng(11)
        tile = RgbTile(rng.integers(0, 256, size=(9, 9, 3), dtype=np.uint8))
        first = linear_transfer(tile, a, b)
        second = linear_transfer(tile, a, b)
        assert np.array_equal(first.pixels, second.pixels)


def test_her2_matrix_residual_nonnegative():
    m = her2_matrix()
    assert m.stain_names == ("hematoxylin", "dab", "residual")
    assert np.all(m.columns >= 0)
    assert np.allclose(np.linalg.norm(m.columns, axis=0), 1.0, atol=1e-9)
