"""
Tests for synthetic scenes, the on-disk dataset layout and augmentation
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from hct_sod.errors import DatasetError
from hct_sod.services.data import synthetic
from hct_sod.services.data.augment import hflip
from hct_sod.services.data.dataset_store import (
    INDEX_FILE,
    read_dataset,
    read_index,
    read_prediction,
    sample_paths,
    write_dataset,
    write_prediction,
)
from hct_sod.services.data.image_io import read_gray, to_uint8, write_gray, write_rgb
from hct_sod.services.data.synthetic import synth_dataset, synth_sample
from hct_sod.utilities import file_handler
from hct_sod.utilities.file_handler import atomic_write_bytes, discard_partial_write


class TestSynthetic:
    def test_deterministic_per_index(self):
        a, b = synth_sample(11, 2, 32), synth_sample(11, 2, 32)
        assert_array_equal(a.rgb, b.rgb)
        assert_array_equal(a.depth, b.depth)
        assert_array_equal(a.gt, b.gt)

    def test_index_independent_of_dataset_size(self):
        assert_array_equal(synth_dataset(4, 3, 32)[2].gt, synth_dataset(4, 5, 32)[2].gt)

    def test_seeds_differ(self):
        assert not np.array_equal(synth_sample(0, 0, 32).rgb, synth_sample(1, 0, 32).rgb)

    def test_layout_and_ranges(self):
        for sample in synth_dataset(9, 6, 48):
            assert sample.rgb.shape == (48, 48, 3)
            assert sample.depth.shape == (48, 48, 1)
            assert 0.0 < sample.gt.mean() < 1.0
            assert sample.rgb.min() >= 0.0 and sample.rgb.max() <= 1.0

    def test_objects_stand_out_in_depth(self):
        sample = synth_sample(2, 0, 64)
        fg = sample.gt == 1.0
        depth = sample.depth[..., 0]
        assert depth[fg].mean() > depth[~fg].mean() + 0.2

    def test_one_to_three_shapes_per_scene(self, monkeypatch):
        counts = []
        draw = synthetic._shape_mask

        def counting_mask(rng, size):
            counts[-1] += 1
            return draw(rng, size)

        monkeypatch.setattr(synthetic, "_shape_mask", counting_mask)
        for seed in range(30):
            counts.append(0)
            synth_sample(seed, 0, 32)
        assert set(counts) <= {1, 2, 3}
        assert len(set(counts)) > 1

    def test_ids(self):
        assert [s.id for s in synth_dataset(0, 3, 16)] == ["s00000", "s00001", "s00002"]

    @pytest.mark.parametrize("n, size", [(0, 32), (2, 40), (2, 8)])
    def test_rejects_bad_arguments(self, n, size):
        with pytest.raises(ValueError):
            synth_dataset(0, n, size)


class TestImageIO:
    def test_quantisation(self):
        assert_array_equal(to_uint8(np.array([0.0, 0.5, 1.0, 1.2, -0.1])), [0, 128, 255, 255, 0])

    def test_gray_round_trip_on_the_8bit_lattice(self, tmp_path, rng):
        values = rng.integers(0, 256, size=(5, 7)) / 255.0
        write_gray(tmp_path / "m.pgm", values)
        assert_allclose(read_gray(tmp_path / "m.pgm"), values, atol=1e-15)

    def test_wrong_extension(self, tmp_path):
        with pytest.raises(ValueError):
            write_gray(tmp_path / "m.png", np.zeros((2, 2)))
        with pytest.raises(ValueError):
            write_rgb(tmp_path / "m.pgm", np.zeros((2, 2, 3)))

    def test_extension_is_case_insensitive(self, tmp_path):
        write_gray(tmp_path / "M.PGM", np.zeros((2, 2)))
        assert_array_equal(read_gray(tmp_path / "M.PGM"), np.zeros((2, 2)))

    def test_failed_write_leaves_no_partial_file(self, tmp_path, monkeypatch):
        def broken_replace(src, dst):
            raise OSError("disk full")

        monkeypatch.setattr(file_handler.os, "replace", broken_replace)
        with pytest.raises(OSError):
            atomic_write_bytes(tmp_path / "model.ckpt", b"weights")
        assert list(tmp_path.iterdir()) == []

    def test_discarding_missing_partial_write(self, tmp_path):
        assert discard_partial_write(tmp_path / ".m.pgm.tmp") is False

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetError):
            read_gray(tmp_path / "absent.pgm")

    def test_colour_file_read_as_gray(self, tmp_path):
        write_rgb(tmp_path / "c.ppm", np.zeros((2, 2, 3)))
        (tmp_path / "c.ppm").rename(tmp_path / "c.pgm")
        with pytest.raises(DatasetError):
            read_gray(tmp_path / "c.pgm")

    def test_garbage_file(self, tmp_path):
        (tmp_path / "g.pgm").write_bytes(b"not an image")
        with pytest.raises(DatasetError):
            read_gray(tmp_path / "g.pgm")


class TestDatasetStore:
    def test_round_trip(self, tmp_path):
        samples = synth_dataset(3, 3, 32)
        root = write_dataset(samples, tmp_path / "data")
        assert read_index(root) == [s.id for s in samples]
        loaded = read_dataset(root)
        for original, back in zip(samples, loaded):
            assert back.id == original.id
            assert_array_equal(back.gt, original.gt)
            assert np.abs(back.rgb - original.rgb).max() <= 0.5 / 255 + 1e-12
            assert np.abs(back.depth - original.depth).max() <= 0.5 / 255 + 1e-12

    def test_missing_index(self, tmp_path):
        with pytest.raises(DatasetError):
            read_dataset(tmp_path)

    def test_index_names_missing_sample(self, tmp_path):
        root = write_dataset(synth_dataset(3, 2, 16), tmp_path)
        (root / INDEX_FILE).write_text("s00000\ns00001\nghost\n")
        with pytest.raises(DatasetError, match="ghost"):
            read_dataset(root)

    def test_duplicate_ids(self, tmp_path):
        root = write_dataset(synth_dataset(3, 1, 16), tmp_path)
        (root / INDEX_FILE).write_text("s00000\ns00000\n")
        with pytest.raises(DatasetError):
            read_index(root)

    def test_mixed_sizes(self, tmp_path):
        write_dataset([synth_sample(0, 0, 16)], tmp_path)
        write_dataset([synth_sample(0, 1, 32)], tmp_path / "other")
        for name, path in sample_paths(tmp_path / "other", "s00001").items():
            path.rename(sample_paths(tmp_path, "s00001")[name])
        (tmp_path / INDEX_FILE).write_text("s00000\ns00001\n")
        with pytest.raises(DatasetError):
            read_dataset(tmp_path)

    def test_gt_binarised_at_mid_gray(self, tmp_path):
        root = write_dataset([synth_sample(1, 0, 16)], tmp_path)
        soft = np.zeros((16, 16))
        soft[:, 8:] = 0.6
        soft[:, 12:] = 0.4
        write_gray(sample_paths(root, "s00000")["gt"], soft)
        gt = read_dataset(root)[0].gt
        assert gt[:, 8:12].min() == 1.0
        assert gt[:, 12:].max() == 0.0

    def test_prediction_files(self, tmp_path, rng):
        pred = rng.random((8, 8))
        write_prediction(tmp_path, "img", pred)
        assert (tmp_path / "img_pred.pgm").is_file()
        assert np.abs(read_prediction(tmp_path, "img") - pred).max() <= 0.5 / 255 + 1e-12


class TestAugment:
    def test_hflip_is_consistent(self):
        sample = synth_sample(5, 0, 16)
        flipped = hflip(sample)
        assert_array_equal(flipped.rgb[:, 0], sample.rgb[:, -1])
        assert_array_equal(flipped.depth[:, 0], sample.depth[:, -1])
        assert_array_equal(flipped.gt[:, 0], sample.gt[:, -1])
        assert flipped.id == sample.id

    def test_hflip_twice_is_identity(self):
        sample = synth_sample(5, 1, 16)
        assert_array_equal(hflip(hflip(sample)).rgb, sample.rgb)
