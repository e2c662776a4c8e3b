"""
Binary checkpoints: magic b"HCT1", uint32 LE header length, JSON header,
then one little-endian float64 block per parameter in store order
"""
import json
import struct
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import ValidationError

from hct_sod.errors import (
    CheckpointFormatError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from hct_sod.models.checkpoint import CHECKPOINT_MAGIC, CHECKPOINT_VERSION, CheckpointEntry, CheckpointHeader
from hct_sod.models.config import ModelConfig
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.utilities.file_handler import PathLike, atomic_write_bytes
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

_LE_F64 = np.dtype("<f8")
_PREFIX = len(CHECKPOINT_MAGIC) + 4


def encode_checkpoint(model: HCTModel) -> bytes:
    header = CheckpointHeader(
        version=CHECKPOINT_VERSION,
        config=model.cfg,
        entries=[CheckpointEntry(name=name, shape=list(t.shape)) for name, t in model.store.items()],
    )
    header_bytes = header.model_dump_json().encode("utf-8")
    blocks = [np.ascontiguousarray(t.data, dtype=_LE_F64).tobytes() for _, t in model.store.items()]
    return CHECKPOINT_MAGIC + struct.pack("<I", len(header_bytes)) + header_bytes + b"".join(blocks)


def save_checkpoint(model: HCTModel, path: PathLike) -> Path:
    path = atomic_write_bytes(path, encode_checkpoint(model))
    logger.info(f"Saved checkpoint with {len(model.store)} tensors to {path}")
    return path


def decode_header(payload: bytes) -> CheckpointHeader:
    if len(payload) < _PREFIX:
        if CHECKPOINT_MAGIC.startswith(payload[:len(CHECKPOINT_MAGIC)]):
            raise CheckpointTruncatedError(f"file ends after {len(payload)} bytes, inside the prefix")
        raise CheckpointFormatError("not a checkpoint (bad magic bytes)")
    if payload[:len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointFormatError("not a checkpoint (bad magic bytes)")
    (length,) = struct.unpack("<I", payload[len(CHECKPOINT_MAGIC):_PREFIX])
    if len(payload) < _PREFIX + length:
        raise CheckpointTruncatedError(f"header declares {length} bytes, file ends early")
    raw = payload[_PREFIX:_PREFIX + length]
    try:
        header = CheckpointHeader.model_validate_json(raw)
    except ValidationError as e:
        # look at the version before blaming the rest of the header
        version = _peek_version(raw)
        if version is not None and version != CHECKPOINT_VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint version {version}") from e
        raise CheckpointFormatError(f"corrupt checkpoint header: {e.errors()[0]['msg']}") from e
    if header.version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(
            f"unsupported checkpoint version {header.version} (this build reads {CHECKPOINT_VERSION})"
        )
    return header


def _peek_version(raw: bytes) -> Optional[int]:
    try:
        value = json.loads(raw.decode("utf-8")).get("version")
    except (ValueError, AttributeError):
        return None
    return value if isinstance(value, int) else None


def load_checkpoint(path: PathLike, cfg: Optional[ModelConfig] = None) -> HCTModel:
    """
    Rebuild a model from disk. With cfg given the model is built from it instead
    of the stored config, and every stored shape must still fit.
    """
    path = Path(path)
    try:
        payload = path.read_bytes()
    except OSError as e:
        raise CheckpointFormatError(f"cannot read checkpoint {path}: {e}") from e

    header = decode_header(payload)
    offset = _PREFIX + struct.unpack("<I", payload[len(CHECKPOINT_MAGIC):_PREFIX])[0]

    expected = sum(entry.count for entry in header.entries) * _LE_F64.itemsize
    available = len(payload) - offset
    if available < expected:
        raise CheckpointTruncatedError(
            f"{path.name}: parameter blocks need {expected} bytes, only {available} present"
        )
    if available > expected:
        raise CheckpointFormatError(f"{path.name}: {available - expected} trailing bytes after the last block")

    state = {}
    for entry in header.entries:
        if entry.name in state:
            raise CheckpointFormatError(f"parameter {entry.name!r} stored twice")
        nbytes = entry.count * _LE_F64.itemsize
        block = np.frombuffer(payload, dtype=_LE_F64, count=entry.count, offset=offset)
        state[entry.name] = block.astype(np.float64).reshape(entry.shape)
        offset += nbytes

    model = HCTModel(cfg or header.config)
    model.store.load_state_dict(state)
    logger.info(f"Loaded checkpoint {path} ({len(state)} tensors)")
    return model
