"""
File handling for run outputs: .pgm/.ppm maps, checkpoints, loss logs
"""
import os
import tempfile
from pathlib import Path
from typing import Sequence, Union

from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

PathLike = Union[str, Path]


def ensure_dir(path: PathLike) -> Path:
    """Create a run directory (and parents) if needed; raises when it is not writable"""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError(f"directory {path} is not writable")
    return path


def atomic_write_bytes(path: PathLike, payload: bytes) -> Path:
    """Write to a sibling temp file, then rename over the target"""
    path = Path(path)
    ensure_dir(path.parent)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except Exception:
        discard_partial_write(tmp)
        raise
    return path


def discard_partial_write(tmp_path: PathLike) -> bool:
    """Remove a half-written checkpoint or map left behind by a failed write"""
    try:
        Path(tmp_path).unlink()
        return True
    except FileNotFoundError:
        return False
    except OSError as e:
        logger.error(f"Could not remove partial write {tmp_path}: {e}")
        return False


def has_netpbm_extension(path: PathLike, extensions: Sequence[str]) -> bool:
    """True when the suffix (case-insensitive) is one of the given .pgm/.ppm kinds"""
    return Path(path).suffix.lower() in extensions
