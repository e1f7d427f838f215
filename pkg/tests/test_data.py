"""Preprocessing, tiling, corruption and sampling."""

import numpy as np
import pytest
from PIL import Image
from scipy.sparse.linalg import LinearOperator, cg

from ocdl import (
    BoundaryArtifactWarning,
    Mask,
    Signal,
    TileSpec,
    load_grayscale,
    salt_pepper_corrupt,
    split_image,
    stream_sampler,
    tikhonov_highpass,
    tikhonov_highpass_masked,
)


class TestLoadGrayscale:
    def test_black_is_zero(self, tmp_path):
        path = tmp_path / "black.png"
        Image.fromarray(np.zeros((4, 4), dtype=np.uint8)).save(path)
        assert np.all(load_grayscale(path).values == 0.0)

    def test_white_is_one(self, tmp_path):
        path = tmp_path / "white.png"
        Image.fromarray(np.full((4, 4), 255, dtype=np.uint8)).save(path)
        assert np.all(load_grayscale(path).values == 1.0)

    def test_rgb_luma_fixture(self, tmp_path):
        rgb = np.zeros((2, 2, 3), dtype=np.uint8)
        rgb[0, 0] = (255, 0, 0)
        rgb[0, 1] = (0, 255, 0)
        rgb[1, 0] = (0, 0, 255)
        rgb[1, 1] = (10, 20, 30)
        path = tmp_path / "rgb.png"
        Image.fromarray(rgb, mode="RGB").save(path)
        got = load_grayscale(path).values
        want = np.array(
            [
                [0.299, 0.587],
                [0.114, (10 * 0.299 + 20 * 0.587 + 30 * 0.114) / 255],
            ]
        )
        assert np.allclose(got, want, atol=1e-12)

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(OSError):
            load_grayscale(tmp_path / "missing.png")


class TestHighpass:
    def test_constant_image_removed(self):
        s = Signal(np.full((8, 8), 0.7))
        assert np.max(np.abs(tikhonov_highpass(s, 5.0).values)) < 1e-12

    def test_zero_weight_passes_nothing(self, rng):
        s = Signal(rng.random((8, 8)))
        assert np.max(np.abs(tikhonov_highpass(s, 0.0).values)) < 1e-12

    def test_matches_conjugate_gradient_oracle(self, rng):
        # Spatial normal-equations solve of the same lowpass problem.
        s = Signal(rng.random((16, 16)))
        weight = 5.0

        def matvec(v):
            l = v.reshape(16, 16)
            dr = np.roll(l, -1, axis=0) - l
            dc = np.roll(l, -1, axis=1) - l
            quad = (np.roll(dr, 1, axis=0) - dr) + (np.roll(dc, 1, axis=1) - dc)
            return (l + weight * quad).ravel()

        op = LinearOperator((256, 256), matvec=matvec)
        lowpass, info = cg(op, s.values.ravel(), rtol=1e-12)
        assert info == 0
        want = s.values - lowpass.reshape(16, 16)
        got = tikhonov_highpass(s, weight).values
        assert np.max(np.abs(got - want)) < 1e-8

    def test_reconstruction_exact(self, rng):
        s = Signal(rng.random((12, 12)))
        high = tikhonov_highpass(s, 5.0)
        low = s.values - high.values
        assert np.max(np.abs((high.values + low) - s.values)) < 1e-12


class TestMaskedHighpass:
    def test_all_ones_matches_unmasked(self, rng):
        s = Signal(rng.random((12, 12)))
        plain = tikhonov_highpass(s, 5.0)
        masked = tikhonov_highpass_masked(s, Mask(np.ones((12, 12))), 5.0)
        assert np.max(np.abs(plain.values - masked.values)) < 1e-8

    def test_ignores_masked_pixels(self, rng):
        # Spiking a masked-out pixel must not change the lowpass fit there
        # beyond the smoothness coupling, unlike the unmasked solve.
        s = rng.random((12, 12))
        w = np.ones((12, 12))
        w[5, 5] = 0.0
        spiked = s.copy()
        spiked[5, 5] += 100.0
        a = tikhonov_highpass_masked(Signal(s), Mask(w), 5.0)
        b = tikhonov_highpass_masked(Signal(spiked), Mask(w), 5.0)
        diff = b.values - a.values
        diff[5, 5] -= 100.0  # the data difference passes straight through
        assert np.max(np.abs(diff)) < 1e-8


class TestSplit:
    def test_paper_shape_case(self):
        s = Signal(np.zeros((256, 256)))
        tiles = split_image(s, TileSpec(128, 128))
        assert len(tiles) == 4
        assert all(t.shape == (128, 128) for t in tiles)

    def test_identity_tile(self, rng):
        s = Signal(rng.random((10, 12)))
        tiles = split_image(s, TileSpec(10, 12))
        assert len(tiles) == 1
        assert np.array_equal(tiles[0].values, s.values)

    def test_remainder_discarded(self, rng):
        s = Signal(rng.random((10, 10)))
        tiles = split_image(s, TileSpec(4, 4))
        assert len(tiles) == 4
        used = sum(t.num_pixels for t in tiles)
        assert s.num_pixels - used == 36

    def test_reassembly_when_divisible(self, rng):
        s = Signal(rng.random((8, 8)))
        tiles = split_image(s, TileSpec(4, 4))
        top = np.hstack([tiles[0].values, tiles[1].values])
        bottom = np.hstack([tiles[2].values, tiles[3].values])
        assert np.array_equal(np.vstack([top, bottom]), s.values)

    def test_tile_larger_than_image(self, rng):
        with pytest.raises(ValueError):
            split_image(Signal(rng.random((8, 8))), TileSpec(9, 4))

    def test_boundary_warning(self):
        spec = TileSpec(8, 8)
        with pytest.warns(BoundaryArtifactWarning):
            assert not spec.check_boundary((6, 6))
        assert TileSpec(12, 12).check_boundary((6, 6))


class TestCorrupt:
    def test_zero_fraction(self, rng):
        s = Signal(rng.random((6, 6)))
        out, mask = salt_pepper_corrupt(s, 0.0, rng)
        assert np.array_equal(out.values, s.values)
        assert np.all(mask.values == 1.0)

    def test_full_fraction(self, rng):
        s = Signal(rng.random((6, 6)))
        out, mask = salt_pepper_corrupt(s, 1.0, rng)
        assert np.all(mask.values == 0.0)
        assert set(np.unique(out.values)) <= {0.0, 1.0}

    def test_exact_count(self, rng):
        s = Signal(rng.random((10, 10)))
        _, mask = salt_pepper_corrupt(s, 0.3, rng)
        assert int(np.sum(mask.values == 0.0)) == 30

    def test_mask_complements_corruption(self, rng):
        s = Signal(0.5 * np.ones((10, 10)))
        out, mask = salt_pepper_corrupt(s, 0.25, rng)
        hit = mask.values == 0.0
        assert set(np.unique(out.values[hit])) <= {0.0, 1.0}
        assert np.array_equal(out.values[~hit], s.values[~hit])

    def test_bad_fraction(self, rng):
        with pytest.raises(ValueError):
            salt_pepper_corrupt(Signal(np.ones((2, 2))), 1.5, rng)


class TestStreamSampler:
    def test_single_tile_repeats(self):
        out = stream_sampler(["a"], 3, seed=0)
        assert out == ["a", "a", "a"]

    def test_fixed_seed_reproducible(self):
        items = list(range(10))
        assert stream_sampler(items, 4, seed=5) == stream_sampler(items, 4, seed=5)

    def test_multiset_count(self):
        items = list(range(7))
        out = stream_sampler(items, 3, seed=2)
        assert len(out) == 21
        for item in items:
            assert out.count(item) == 3

    def test_bad_epochs(self):
        with pytest.raises(ValueError):
            stream_sampler([1], 0, seed=0)
