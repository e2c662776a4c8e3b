"""
8-bit portable pixmap IO through Pillow: .pgm for gray maps, .ppm for colour
"""
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from hct_sod.errors import DatasetError
from hct_sod.utilities.file_handler import PathLike, ensure_dir, has_netpbm_extension

GRAY_EXTENSIONS = [".pgm"]
COLOUR_EXTENSIONS = [".ppm"]


def to_uint8(values: np.ndarray) -> np.ndarray:
    """[0, 1] -> {0..255}, linear, rounded half to even"""
    return np.round(np.clip(values, 0.0, 1.0) * 255.0).astype(np.uint8)


def write_gray(path: PathLike, values: np.ndarray) -> Path:
    path = Path(path)
    if not has_netpbm_extension(path, GRAY_EXTENSIONS):
        raise ValueError(f"gray maps are written as .pgm, got {path.name}")
    values = np.asarray(values)
    if values.ndim == 3 and values.shape[2] == 1:
        values = values[..., 0]
    if values.ndim != 2:
        raise ValueError(f"gray map must be [H x W], got {values.shape}")
    ensure_dir(path.parent)
    Image.fromarray(to_uint8(values)).save(path, format="PPM")
    return path


def write_rgb(path: PathLike, values: np.ndarray) -> Path:
    path = Path(path)
    if not has_netpbm_extension(path, COLOUR_EXTENSIONS):
        raise ValueError(f"colour images are written as .ppm, got {path.name}")
    if values.ndim != 3 or values.shape[2] != 3:
        raise ValueError(f"colour image must be [H x W x 3], got {values.shape}")
    ensure_dir(path.parent)
    Image.fromarray(to_uint8(values)).save(path, format="PPM")
    return path


def _open(path: Path, mode: str) -> np.ndarray:
    if not path.is_file():
        raise DatasetError(f"missing image {path}")
    try:
        with Image.open(path) as img:
            if img.mode != mode:
                raise DatasetError(f"{path.name}: expected mode {mode}, found {img.mode}")
            return np.asarray(img, dtype=np.float64) / 255.0
    except (UnidentifiedImageError, OSError) as e:
        raise DatasetError(f"cannot read {path}: {e}") from e


def read_gray(path: PathLike) -> np.ndarray:
    """[H x W] values in multiples of 1/255"""
    return _open(Path(path), "L")


def read_rgb(path: PathLike) -> np.ndarray:
    """[H x W x 3] values in multiples of 1/255"""
    return _open(Path(path), "RGB")
