"""Layout persistence: one P5 PGM per shelf channel plus a JSON sidecar.

The PGM files use maxval 2, which Pillow cannot write, so the header and
raster are handled directly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ValidationError

from src.errors import DatasetError
from src.layout.grid import Label, LayoutTensor, View
from src.render.camera import CameraModel

LAYOUT_FORMAT_VERSION = 1
SIDECAR_NAME = "layout.json"
PGM_MAXVAL = int(max(Label))


class LayoutSidecar(BaseModel):
    """Self-describing metadata stored next to the channel files."""

    version: int = LAYOUT_FORMAT_VERSION
    view: View
    extent_m: float
    grid_size: int
    max_shelves: int
    visible: list[int]
    visible_mask: list[bool]
    origin: tuple[float, float]
    shelf_heights_m: list[float]
    camera: CameraModel | None = None


def channel_path(directory: Path, index: int) -> Path:
    return directory / f"shelf_{index}.pgm"


def write_pgm(path: Path, cells: np.ndarray, maxval: int = PGM_MAXVAL) -> None:
    """Write a 2-D uint8 grid as binary PGM."""
    height, width = cells.shape
    header = f"P5\n{width} {height}\n{maxval}\n".encode("ascii")
    try:
        path.write_bytes(header + np.ascontiguousarray(cells, dtype=np.uint8).tobytes())
    except OSError as e:
        raise DatasetError(f"Cannot write layout channel {path}: {e}") from e


def read_pgm(path: Path) -> np.ndarray:
    """Read a binary PGM with maxval < 256."""
    try:
        data = path.read_bytes()
    except OSError as e:
        raise DatasetError(f"Cannot read layout channel {path}: {e}") from e

    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise DatasetError(f"Truncated PGM header in {path}")
        tokens.append(data[start:pos])
    pos += 1

    if tokens[0] != b"P5":
        raise DatasetError(f"{path} is not a binary PGM (magic {tokens[0]!r})")
    width, height, maxval = (int(t) for t in tokens[1:])
    if maxval > 255:
        raise DatasetError(f"{path}: 16-bit PGM is not supported")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise DatasetError(f"{path}: expected {width * height} bytes, found {len(raster)}")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def save_layout(layout: LayoutTensor, directory: Path, camera: CameraModel | None = None) -> list[Path]:
    """Write every channel and the sidecar into `directory`.

    Returns:
        Paths of the channel files, in shelf order.
    """
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for index in range(layout.num_channels):
        path = channel_path(directory, index)
        write_pgm(path, layout.cells[index])
        paths.append(path)

    sidecar = LayoutSidecar(
        view=layout.view,
        extent_m=layout.extent_m,
        grid_size=layout.grid_size,
        max_shelves=layout.num_channels,
        visible=layout.visible,
        visible_mask=[i in layout.visible for i in range(layout.num_channels)],
        origin=layout.origin,
        shelf_heights_m=layout.shelf_heights_m,
        camera=camera,
    )
    (directory / SIDECAR_NAME).write_text(sidecar.model_dump_json(indent=2))
    return paths


def load_sidecar(directory: Path) -> LayoutSidecar:
    path = directory / SIDECAR_NAME
    try:
        return LayoutSidecar.model_validate(json.loads(path.read_text()))
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise DatasetError(f"Invalid layout sidecar {path}: {e}") from e


def load_layout(directory: Path) -> LayoutTensor:
    """Read a layout written by `save_layout`."""
    sidecar = load_sidecar(directory)
    if sidecar.version != LAYOUT_FORMAT_VERSION:
        raise DatasetError(f"Unsupported layout version {sidecar.version} in {directory}")
    cells = np.stack([read_pgm(channel_path(directory, i)) for i in range(sidecar.max_shelves)])
    if cells.shape[1:] != (sidecar.grid_size, sidecar.grid_size):
        raise DatasetError(f"Channel size {cells.shape[1:]} does not match sidecar in {directory}")
    if cells.max(initial=0) > PGM_MAXVAL:
        raise DatasetError(f"Label out of range in {directory}")
    return LayoutTensor(
        view=sidecar.view,
        cells=cells,
        extent_m=sidecar.extent_m,
        origin=sidecar.origin,
        visible=sidecar.visible,
        shelf_heights_m=sidecar.shelf_heights_m,
    )
