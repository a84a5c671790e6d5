"""Tests for ground-truth layouts."""

import numpy as np
import pytest

from src.errors import ContractViolation, DatasetError
from src.layout.grid import (
    DetectionWindow,
    Label,
    LayoutTensor,
    View,
    column_centers,
    metric_scale,
    row_depths,
)
from src.layout.ground_truth import front_layout, top_layout, visible_shelf_set
from src.layout.io import SIDECAR_NAME, channel_path, load_layout, read_pgm, save_layout
from src.scene.camera import CameraConfig, place_camera, sample_camera
from src.scene.generator import generate_scene
from src.scene.models import BoxSpec, SceneConfig, SceneDescription, Shelf, Stack
from src.scene.rng import CAMERA_STREAM, SplitMix64, derive_seed

WINDOW = DetectionWindow(range_m=5.0, extent_m=8.0)


def manual_scene(stacks_per_shelf: dict[int, list[Stack]], cfg: SceneConfig | None = None) -> SceneDescription:
    cfg = cfg or SceneConfig()
    shelves = [
        Shelf(index=i, height_m=cfg.shelf_height(i), occupancy=0.0, stacks=stacks_per_shelf.get(i, []))
        for i in range(cfg.num_shelves)
    ]
    return SceneDescription(seed=0, config=cfg, rack_pose=cfg.rack_pose, shelves=shelves)


def wide_camera(cfg: SceneConfig | None = None):
    return place_camera(cfg or SceneConfig(), CameraConfig(), 4.2, 1.6)


def aligned_stack(width: float = 0.5, depth: float = 0.5, height: float = 0.25, layers: int = 1) -> Stack:
    spec = BoxSpec(name="test", width_m=width, depth_m=depth, height_m=height)
    return Stack(spec=spec, center_x_m=0.0, center_z_m=0.0, layers=layers)


def brute_force_top(scene: SceneDescription, shelf: Shelf, extent_m: float, grid_size: int) -> np.ndarray:
    """Cell-by-cell point-in-polygon labelling."""
    cfg = scene.config
    xs, zs = column_centers(extent_m, grid_size), row_depths(extent_m, grid_size)
    out = np.zeros((grid_size, grid_size), dtype=np.uint8)
    for r, z in enumerate(zs):
        for c, x in enumerate(xs):
            if abs(x) <= cfg.shelf_width_m / 2 and abs(z) <= cfg.shelf_depth_m / 2:
                out[r, c] = Label.UNOCCUPIED
            for stack in shelf.stacks:
                corners = stack.footprint_corners()
                inside = True
                for k in range(4):
                    (ax, az), (bx, bz) = corners[k], corners[(k + 1) % 4]
                    if (bx - ax) * (z - az) - (bz - az) * (x - ax) < -1e-12:
                        inside = False
                if inside:
                    out[r, c] = Label.OCCUPIED
    return out


class TestMetricScale:
    """Test metric_scale."""

    @pytest.mark.parametrize(
        ("extent", "grid", "expected"), [(8.0, 512, 1.5625), (8.0, 64, 12.5), (1.0, 100, 1.0)]
    )
    def test_values(self, extent, grid, expected):
        """Test centimetres per cell."""
        assert metric_scale(extent, grid) == pytest.approx(expected)

    def test_rejects_empty_grid(self):
        """Test a zero grid size is a contract violation."""
        with pytest.raises(ContractViolation):
            metric_scale(8.0, 0)

    def test_window_validation(self):
        """Test a non-positive range is refused."""
        with pytest.raises(ContractViolation):
            DetectionWindow(range_m=0.0, extent_m=8.0)


class TestVisibleShelves:
    """Test visible_shelf_set."""

    def test_all_visible_from_mid_rack(self):
        """Test a camera at mid-rack height sees every shelf."""
        scene = generate_scene(SceneConfig(), 0)
        assert visible_shelf_set(scene, wide_camera(), WINDOW) == {0, 1, 2, 3}

    def test_low_close_camera_sees_subset(self):
        """Test a camera at bottom-shelf height close to the rack misses the top shelves."""
        scene = generate_scene(SceneConfig(), 0)
        cam = place_camera(scene.config, CameraConfig(), 1.2, 0.125)
        visible = visible_shelf_set(scene, cam, WINDOW)
        assert visible < {0, 1, 2, 3}
        assert 3 not in visible

    def test_rack_beyond_range(self):
        """Test nothing is visible past the detection range."""
        scene = generate_scene(SceneConfig(), 0)
        cam = place_camera(scene.config, CameraConfig(), 6.0, 1.6)
        assert visible_shelf_set(scene, cam, WINDOW) == set()

    def test_camera_behind_rack(self):
        """Test shelves behind the camera are not visible."""
        scene = generate_scene(SceneConfig(), 0)
        cam = wide_camera().model_copy(update={"yaw_deg": 180.0})
        assert visible_shelf_set(scene, cam, WINDOW) == set()


class TestTopLayout:
    """Test top_layout."""

    def test_empty_shelf(self):
        """Test an empty shelf is all footprint, no occupied cells."""
        layout = top_layout(manual_scene({}), wide_camera(), WINDOW)
        channel = layout.cells[0]
        assert (channel == Label.OCCUPIED).sum() == 0
        assert (channel == Label.UNOCCUPIED).sum() == 24 * 8

    def test_aligned_stack_cells(self):
        """Test a grid-aligned 0.5 x 0.5 m stack covers exactly 4 x 4 cells."""
        layout = top_layout(manual_scene({1: [aligned_stack()]}), wide_camera(), WINDOW)
        assert (layout.cells[1] == Label.OCCUPIED).sum() == 16
        assert (layout.cells[0] == Label.OCCUPIED).sum() == 0

    def test_invisible_channels_are_background(self):
        """Test shelves outside the window get empty channels."""
        scene = manual_scene({3: [aligned_stack()]})
        cam = place_camera(scene.config, CameraConfig(), 1.2, 0.125)
        layout = top_layout(scene, cam, WINDOW)
        for index in range(layout.num_channels):
            if index not in layout.visible:
                assert (layout.cells[index] == Label.BACKGROUND).all()
        assert 3 not in layout.visible

    def test_unused_channels_are_background(self):
        """Test channels beyond the scene's shelf count stay empty."""
        cfg = SceneConfig(num_shelves=2)
        layout = top_layout(generate_scene(cfg, 1), wide_camera(cfg), WINDOW, max_shelves=4)
        assert (layout.cells[2:] == Label.BACKGROUND).all()

    def test_too_many_shelves(self):
        """Test more shelves than channels is a contract violation."""
        scene = generate_scene(SceneConfig(num_shelves=5), 0)
        with pytest.raises(ContractViolation):
            top_layout(scene, wide_camera(), WINDOW, max_shelves=4)

    def test_matches_brute_force(self):
        """Test labels equal a per-cell point-in-rotated-rectangle check on random scenes."""
        cfg = SceneConfig(rot_amplitude_deg=15.0)
        for seed in range(12):
            scene = generate_scene(cfg, seed)
            cam = sample_camera(cfg, CameraConfig(), SplitMix64(derive_seed(seed, CAMERA_STREAM)))
            layout = top_layout(scene, cam, WINDOW)
            for shelf in scene.shelves:
                expected = brute_force_top(scene, shelf, WINDOW.extent_m, 64)
                if shelf.index not in layout.visible:
                    expected[...] = Label.BACKGROUND
                assert np.array_equal(layout.cells[shelf.index], expected), f"seed {seed} shelf {shelf.index}"

    @pytest.mark.slow
    def test_hundred_scenes_match_brute_force(self):
        """Test 100 random scenes against the brute-force labelling."""
        cfg = SceneConfig()
        for seed in range(100, 200):
            scene = generate_scene(cfg, seed)
            layout = top_layout(scene, wide_camera(), WINDOW)
            for shelf in scene.shelves:
                expected = brute_force_top(scene, shelf, WINDOW.extent_m, 64)
                assert np.array_equal(layout.cells[shelf.index], expected)

    def test_anchored_on_footprint(self):
        """Test the layout records the footprint centre and shelf heights."""
        scene = generate_scene(SceneConfig(), 0)
        layout = top_layout(scene, wide_camera(), WINDOW)
        assert layout.origin == scene.footprint_center
        assert layout.shelf_heights_m == [s.height_m for s in scene.shelves]
        assert layout.scale_cm == pytest.approx(12.5)


class TestFrontLayout:
    """Test front_layout."""

    def test_empty_shelf_band(self):
        """Test the unoccupied band spans the clear height (full height on the top shelf)."""
        layout = front_layout(manual_scene({}), wide_camera(), WINDOW)
        lower_rows = np.flatnonzero((layout.cells[0] == Label.UNOCCUPIED).any(axis=1))
        top_rows = np.flatnonzero((layout.cells[3] == Label.UNOCCUPIED).any(axis=1))
        assert len(lower_rows) == 7
        assert len(top_rows) == 8
        assert top_rows.max() == 31
        assert (layout.cells == Label.OCCUPIED).sum() == 0

    def test_two_layer_stack_height(self):
        """Test two 0.25 m layers occupy 4 rows."""
        layout = front_layout(manual_scene({0: [aligned_stack(layers=2)]}), wide_camera(), WINDOW)
        rows = np.flatnonzero((layout.cells[0] == Label.OCCUPIED).any(axis=1))
        assert len(rows) == 4
        assert (layout.cells[0] == Label.OCCUPIED).any(axis=0).sum() == 4

    def test_occupied_within_band(self):
        """Test occupied cells never leave the shelf's band."""
        for seed in range(10):
            scene = generate_scene(SceneConfig(), seed)
            layout = front_layout(scene, wide_camera(), WINDOW)
            empty = front_layout(manual_scene({}), wide_camera(), WINDOW)
            occupied = layout.cells == Label.OCCUPIED
            assert (empty.cells[occupied] == Label.UNOCCUPIED).all()

    def test_partition(self):
        """Test every cell carries exactly one of the three labels."""
        scene = generate_scene(SceneConfig(), 3)
        for layout in (top_layout(scene, wide_camera(), WINDOW), front_layout(scene, wide_camera(), WINDOW)):
            assert set(np.unique(layout.cells)) <= {0, 1, 2}
            assert layout.cells.dtype == np.uint8

    def test_columns_agree_across_views(self):
        """Test occupied x-columns are identical in the top and front views."""
        for seed in range(20):
            scene = generate_scene(SceneConfig(), seed)
            cam = wide_camera()
            top = top_layout(scene, cam, WINDOW)
            front = front_layout(scene, cam, WINDOW)
            for shelf in range(4):
                top_cols = (top.cells[shelf] == Label.OCCUPIED).any(axis=0)
                front_cols = (front.cells[shelf] == Label.OCCUPIED).any(axis=0)
                assert np.array_equal(top_cols, front_cols)


class TestLayoutTensor:
    """Test LayoutTensor."""

    def test_one_hot(self):
        """Test the one-hot encoding puts a single 1 per cell."""
        cells = np.random.default_rng(0).integers(0, 3, size=(2, 4, 4)).astype(np.uint8)
        encoded = LayoutTensor(view=View.TOP, cells=cells, extent_m=8.0).one_hot()
        assert encoded.shape == (2, 3, 4, 4)
        assert np.array_equal(encoded.sum(axis=1), np.ones((2, 4, 4)))
        assert np.array_equal(encoded.argmax(axis=1), cells)

    def test_rejects_non_square(self):
        """Test non-square channels are refused."""
        with pytest.raises(ContractViolation):
            LayoutTensor(view=View.TOP, cells=np.zeros((1, 4, 5), dtype=np.uint8), extent_m=8.0)


class TestLayoutFiles:
    """Test layout persistence."""

    def test_save_and_load(self, tmp_path):
        """Test PGM channels plus sidecar restore the layout."""
        scene = generate_scene(SceneConfig(), 2)
        cam = wide_camera()
        layout = front_layout(scene, cam, WINDOW)
        paths = save_layout(layout, tmp_path / "front", camera=cam)
        assert len(paths) == 4
        assert paths[0].read_bytes().startswith(b"P5\n64 64\n2\n")
        restored = load_layout(tmp_path / "front")
        assert np.array_equal(restored.cells, layout.cells)
        assert restored.view == View.FRONT
        assert restored.visible == layout.visible
        assert restored.origin == pytest.approx(layout.origin)

    def test_missing_sidecar(self, tmp_path):
        """Test a directory without a sidecar raises DatasetError."""
        with pytest.raises(DatasetError):
            load_layout(tmp_path)

    def test_truncated_channel(self, tmp_path):
        """Test a short PGM raster raises DatasetError."""
        layout = top_layout(generate_scene(SceneConfig(), 0), wide_camera(), WINDOW)
        save_layout(layout, tmp_path)
        path = channel_path(tmp_path, 1)
        path.write_bytes(path.read_bytes()[:-10])
        with pytest.raises(DatasetError):
            read_pgm(path)
        assert (tmp_path / SIDECAR_NAME).exists()
