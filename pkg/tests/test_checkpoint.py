"""
Tests for the binary checkpoint format and strict parameter loading
"""
import json
import struct

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from hct_sod.errors import (
    CheckpointError,
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from hct_sod.models.checkpoint import CHECKPOINT_MAGIC
from hct_sod.models.config import AttentionMode, ModelConfig
from hct_sod.services.checkpoint_service import decode_header, encode_checkpoint, load_checkpoint, save_checkpoint
from hct_sod.services.network.hct_model import HCTModel
from hct_sod.services.numerics.params import ParamStore


def _split(payload: bytes):
    (length,) = struct.unpack("<I", payload[4:8])
    return payload[8:8 + length], payload[8 + length:]


def _with_header(payload: bytes, header: dict) -> bytes:
    _, blocks = _split(payload)
    raw = json.dumps(header).encode("utf-8")
    return CHECKPOINT_MAGIC + struct.pack("<I", len(raw)) + raw + blocks


class TestCheckpointRoundTrip:
    def test_bitwise(self, tmp_path, small_model):
        path = save_checkpoint(small_model, tmp_path / "model.hct")
        loaded = load_checkpoint(path)
        assert loaded.cfg == small_model.cfg
        original = small_model.store.state_dict()
        restored = loaded.store.state_dict()
        assert list(restored) == list(original)
        for name in original:
            assert_array_equal(restored[name], original[name], err_msg=name)

    def test_same_predictions(self, tmp_path, small_model, small_sample):
        loaded = load_checkpoint(save_checkpoint(small_model, tmp_path / "model.hct"))
        assert_array_equal(
            loaded.predict(small_sample.rgb, small_sample.depth),
            small_model.predict(small_sample.rgb, small_sample.depth),
        )

    def test_layout(self, small_model):
        payload = encode_checkpoint(small_model)
        assert payload[:4] == b"HCT1"
        raw, blocks = _split(payload)
        header = json.loads(raw)
        assert header["version"] == 1
        assert [e["name"] for e in header["entries"]] == small_model.store.names()
        assert len(blocks) == 8 * small_model.store.num_scalars()
        first = small_model.store.names()[0]
        count = small_model.store[first].data.size
        assert_array_equal(np.frombuffer(blocks[:8 * count], dtype="<f8"),
                           small_model.store[first].data.ravel())

    def test_ablation_config_survives(self, tmp_path):
        cfg = ModelConfig.toy(image_size=32, attention_mode=AttentionMode.GSA, use_fpt=False)
        loaded = load_checkpoint(save_checkpoint(HCTModel(cfg), tmp_path / "gsa.hct"))
        assert loaded.cfg.attention_mode == AttentionMode.GSA
        assert loaded.cfg.use_fpt is False

    def test_overwrites_existing_file(self, tmp_path, small_model):
        path = tmp_path / "model.hct"
        path.write_bytes(b"old")
        save_checkpoint(small_model, path)
        assert path.read_bytes()[:4] == CHECKPOINT_MAGIC
        assert [p.name for p in tmp_path.iterdir()] == ["model.hct"]


class TestCheckpointErrors:
    def test_bad_magic(self, tmp_path, small_model):
        path = tmp_path / "bad.hct"
        path.write_bytes(b"NOPE" + encode_checkpoint(small_model)[4:])
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.hct")

    @pytest.mark.parametrize("keep", [2, 6, 40])
    def test_truncated_prefix_or_header(self, tmp_path, small_model, keep):
        path = tmp_path / "short.hct"
        path.write_bytes(encode_checkpoint(small_model)[:keep])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(path)

    def test_truncated_blocks(self, tmp_path, small_model):
        path = tmp_path / "short.hct"
        path.write_bytes(encode_checkpoint(small_model)[:-8])
        with pytest.raises(CheckpointTruncatedError):
            load_checkpoint(path)

    def test_trailing_bytes(self, tmp_path, small_model):
        path = tmp_path / "long.hct"
        path.write_bytes(encode_checkpoint(small_model) + b"\x00" * 8)
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path)

    def test_unsupported_version(self, small_model):
        payload = encode_checkpoint(small_model)
        header = json.loads(_split(payload)[0])
        header["version"] = 2
        with pytest.raises(CheckpointVersionError):
            decode_header(_with_header(payload, header))

    def test_corrupt_header(self, small_model):
        payload = encode_checkpoint(small_model)
        raw, blocks = _split(payload)
        broken = raw[:-1]
        with pytest.raises(CheckpointFormatError):
            decode_header(CHECKPOINT_MAGIC + struct.pack("<I", len(broken)) + broken + blocks)

    def test_shape_mismatch_names_parameter(self, tmp_path, small_model):
        path = save_checkpoint(small_model, tmp_path / "model.hct")
        narrower = ModelConfig.toy(image_size=32, c_d=48)
        with pytest.raises(CheckpointShapeError, match="parameter '"):
            load_checkpoint(path, cfg=narrower)

    def test_architecture_mismatch(self, tmp_path, small_model):
        path = save_checkpoint(small_model, tmp_path / "model.hct")
        with pytest.raises(CheckpointFormatError):
            load_checkpoint(path, cfg=ModelConfig.toy(image_size=32, hca_blocks=2))


class TestParamStoreLoad:
    def _store(self):
        store = ParamStore()
        store.add("a.weight", np.ones((2, 3)))
        store.add("a.bias", np.zeros(3))
        return store

    def test_strict_load(self):
        store = self._store()
        store.load_state_dict({"a.weight": np.full((2, 3), 2.0), "a.bias": np.ones(3)})
        assert_array_equal(store["a.weight"].data, np.full((2, 3), 2.0))

    def test_unknown_name(self):
        with pytest.raises(CheckpointFormatError, match="extra"):
            self._store().load_state_dict({"a.weight": np.ones((2, 3)), "a.bias": np.ones(3), "extra": np.ones(1)})

    def test_missing_name(self):
        with pytest.raises(CheckpointFormatError, match="a.bias"):
            self._store().load_state_dict({"a.weight": np.ones((2, 3))})

    def test_failed_load_changes_nothing(self):
        store = self._store()
        with pytest.raises(CheckpointShapeError):
            store.load_state_dict({"a.weight": np.full((2, 3), 5.0), "a.bias": np.ones(4)})
        assert_array_equal(store["a.weight"].data, np.ones((2, 3)))

    def test_duplicate_registration(self):
        store = self._store()
        with pytest.raises(KeyError):
            store.add("a.bias", np.zeros(3))
