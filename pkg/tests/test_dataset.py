"""Tests for dataset generation, manifests and loading."""

import json
import shutil

import numpy as np
import pytest

from src.dataset.loader import LayoutDataset, load_sample_dir
from src.dataset.manifest import (
    MANIFEST_FILENAME,
    assign_splits,
    manifest_path,
    read_manifest,
    verify_manifest,
)
from src.errors import ConfigError, ManifestError
from src.experiment import ExperimentConfig
from src.layout.grid import LayoutConfig, View
from src.pipeline import check_compatible, run_eval, run_gen, run_stats, run_train


class TestSplits:
    """Test assign_splits."""

    @pytest.mark.parametrize(
        "count,expected",
        [(6, (4, 1, 1)), (12, (8, 2, 2)), (5, (5, 0, 0)), (100, (68, 16, 16))],
    )
    def test_ratio(self, count, expected):
        """Test the 4:1:1 split in index order."""
        splits = assign_splits(count)
        assert (splits.count("train"), splits.count("val"), splits.count("test")) == expected
        assert splits == sorted(splits, key=["train", "val", "test"].index)


class TestManifest:
    """Test manifest writing, reading and verification."""

    def test_contents(self, small_dataset, small_config):
        """Test the manifest records sizes, splits and every sample."""
        manifest = read_manifest(small_dataset)
        assert manifest.count == 12
        assert manifest.split_counts() == {"train": 8, "val": 2, "test": 2}
        assert manifest.grid_size == 32 and manifest.max_shelves == 4
        assert (manifest.image_width, manifest.image_height) == (64, 64)
        assert manifest.config == small_config
        entry = manifest.samples[3]
        assert entry.image == "samples/000003/image.ppm"
        assert len(entry.top) == len(entry.front) == 4

    def test_reads_file_path(self, small_dataset):
        """Test the manifest loads from its own path too."""
        assert read_manifest(manifest_path(small_dataset)).count == 12

    def test_verify(self, small_dataset):
        """Test every referenced file of a generated dataset parses."""
        verify_manifest(small_dataset, read_manifest(small_dataset))

    def test_verify_missing_file(self, tmp_path, small_config):
        """Test a deleted layout channel fails verification."""
        manifest = run_gen(small_config, 2, 0, tmp_path)
        (tmp_path / manifest.samples[1].front[0]).unlink()
        with pytest.raises(ManifestError, match="Sample 1"):
            verify_manifest(tmp_path, manifest)

    def test_missing(self, tmp_path):
        """Test a directory without a manifest."""
        with pytest.raises(ManifestError, match="not found"):
            read_manifest(tmp_path)

    def test_invalid_json(self, tmp_path):
        """Test a corrupt manifest."""
        (tmp_path / MANIFEST_FILENAME).write_text("{ nope")
        with pytest.raises(ManifestError, match="not valid JSON"):
            read_manifest(tmp_path)

    def test_wrong_version(self, tmp_path, small_dataset):
        """Test manifests of another version are refused."""
        data = json.loads(manifest_path(small_dataset).read_text())
        data["version"] = 99
        (tmp_path / MANIFEST_FILENAME).write_text(json.dumps(data))
        with pytest.raises(ManifestError, match="version"):
            read_manifest(tmp_path)

    def test_count_mismatch(self, tmp_path, small_dataset):
        """Test a manifest whose sample list disagrees with its count."""
        data = json.loads(manifest_path(small_dataset).read_text())
        data["samples"] = data["samples"][:5]
        (tmp_path / MANIFEST_FILENAME).write_text(json.dumps(data))
        with pytest.raises(ManifestError, match="expected 12"):
            read_manifest(tmp_path)

    def test_compatibility(self, small_dataset, small_config):
        """Test a model config with another grid size is rejected."""
        manifest = read_manifest(small_dataset)
        check_compatible(manifest, small_config)
        other = ExperimentConfig(camera=small_config.camera, layout=LayoutConfig(grid_size=64))
        with pytest.raises(ConfigError, match="grid_size"):
            check_compatible(manifest, other)


class TestGeneration:
    """Test run_gen."""

    def test_deterministic(self, tmp_path, small_config):
        """Test the same seed writes byte-identical samples."""
        run_gen(small_config, 2, 5, tmp_path / "a")
        run_gen(small_config, 2, 5, tmp_path / "b")
        for rel in ["samples/000001/image.ppm", "samples/000001/scene.json", "samples/000000/top/layout.json"]:
            assert (tmp_path / "a" / rel).read_bytes() == (tmp_path / "b" / rel).read_bytes()

    def test_seed_changes_samples(self, tmp_path, small_config):
        """Test different seeds give different scenes."""
        run_gen(small_config, 1, 1, tmp_path / "a")
        run_gen(small_config, 1, 2, tmp_path / "b")
        rel = "samples/000000/scene.json"
        assert (tmp_path / "a" / rel).read_text() != (tmp_path / "b" / rel).read_text()

    def test_workers_match_serial(self, tmp_path, small_config):
        """Test parallel generation writes the same files as a single process."""
        run_gen(small_config, 3, 9, tmp_path / "serial")
        run_gen(small_config, 3, 9, tmp_path / "parallel", workers=2)
        rel = "samples/000002/image.ppm"
        assert (tmp_path / "serial" / rel).read_bytes() == (tmp_path / "parallel" / rel).read_bytes()

    def test_progress(self, tmp_path, small_config):
        """Test progress is reported once per sample."""
        seen = []
        run_gen(small_config, 2, 0, tmp_path, progress=seen.append)
        assert sorted(seen) == [0, 1]


class TestLoader:
    """Test LayoutDataset and batching."""

    def test_split_lengths(self, small_dataset):
        """Test each split exposes its own samples."""
        assert len(LayoutDataset(small_dataset)) == 12
        assert len(LayoutDataset(small_dataset, "train")) == 8
        assert [s.index for s in LayoutDataset(small_dataset, "test")] == [10, 11]

    def test_batch_shapes(self, small_dataset):
        """Test images and per-view label stacks."""
        images, targets = LayoutDataset(small_dataset, "train").batch([0, 3, 5], (View.TOP, View.FRONT))
        assert images.shape == (3, 64, 64, 3) and images.dtype == np.uint8
        assert targets[View.TOP].shape == targets[View.FRONT].shape == (3, 4, 32, 32)

    def test_sample_contents(self, small_dataset):
        """Test a loaded sample agrees with its scene."""
        sample = LayoutDataset(small_dataset)[0]
        assert sample.scene is not None
        top = sample.layouts[View.TOP]
        assert top.visible == sample.layouts[View.FRONT].visible
        for channel in range(4):
            if channel not in top.visible:
                assert not top.cells[channel].any()

    def test_load_sample_dir(self, small_dataset):
        """Test a sample directory loads without the manifest."""
        sample = load_sample_dir(small_dataset / "samples" / "000004")
        assert sample.image.width == 64
        assert set(sample.layouts) == {View.TOP, View.FRONT}

    def test_verify_only_checks_its_split(self, tmp_path, small_dataset):
        """Test a missing train image fails the train split but not the test split."""
        root = shutil.copytree(small_dataset, tmp_path / "data")
        (root / "samples" / "000000" / "image.ppm").unlink()
        LayoutDataset(root, "test").verify()
        with pytest.raises(ManifestError, match="Sample 0"):
            LayoutDataset(root, "train").verify()


class TestPipelineChecks:
    """Test run_train and run_eval verify the split they load."""

    def test_eval_missing_sample(self, tmp_path, small_dataset):
        """Test evaluation stops on a missing test layout channel."""
        root = shutil.copytree(small_dataset, tmp_path / "data")
        entry = read_manifest(root).samples[11]
        (root / entry.top[0]).unlink()
        with pytest.raises(ManifestError, match="Sample 11"):
            run_eval(root, None, tmp_path / "eval", oracle=True)
        assert not (tmp_path / "eval" / "eval.csv").exists()

    def test_train_missing_sample(self, tmp_path, small_dataset, small_config):
        """Test training stops before the first step on a missing train image."""
        root = shutil.copytree(small_dataset, tmp_path / "data")
        (root / "samples" / "000003" / "image.ppm").unlink()
        with pytest.raises(ManifestError, match="Sample 3"):
            run_train(root, small_config, tmp_path / "model.ssck")
        assert not (tmp_path / "model.ssck").exists()


class TestStats:
    """Test run_stats."""

    def test_summary(self, small_dataset):
        """Test split sizes, histogram and stack totals."""
        stats = run_stats(small_dataset)
        assert stats.split_counts == {"train": 8, "val": 2, "test": 2}
        assert sum(stats.visible_histogram.values()) == 12
        assert 0.0 <= stats.min_occupancy <= stats.max_occupancy <= 1.0
        expected = sum(s.scene.stack_count for s in LayoutDataset(small_dataset))
        assert stats.stack_count == expected
