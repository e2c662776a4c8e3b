"""
Tests for the encoder, the feature pyramid and the DCM decoder
"""
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from hct_sod.errors import DimensionError
from hct_sod.models.config import FusionMode, ModelConfig
from hct_sod.models.grids import PyramidBundle, SaliencyKind, SaliencyMap, TokenGrid
from hct_sod.services.network.dcm import DCM_LEVELS, DcmLevel, Decoder, dcm_step
from hct_sod.services.network.encoder import (
    TransformerBlock,
    TwoStreamEncoder,
    encoder_shapes,
    patch_embed,
    prepare_depth,
    transformer_block,
)
from hct_sod.services.network.fpt import FeaturePyramid, fpt_fuse
from hct_sod.services.network.layers import Initializer
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.numerics.tensor import Tensor


def _bundle(cfg: ModelConfig, rng) -> PyramidBundle:
    grids = [
        TokenGrid(side, side, Tensor(rng.normal(size=(side * side, c))))
        for side, c in zip(cfg.level_sides, cfg.level_channels)
    ]
    return PyramidBundle(*grids)


def _grid(rng, side, c) -> TokenGrid:
    return TokenGrid(side, side, Tensor(rng.normal(size=(side * side, c))))


class TestEncoder:
    def test_full_scale_level_shapes(self):
        assert encoder_shapes(ModelConfig.full_scale()) == [(56, 56, 64), (28, 28, 64), (14, 14, 384)]

    def test_toy_level_shapes(self):
        assert encoder_shapes(ModelConfig.toy()) == [(16, 16, 16), (8, 8, 16), (4, 4, 96)]

    def test_forward_shapes(self, small_cfg, small_sample):
        encoder = TwoStreamEncoder(ParamStore(), small_cfg, Initializer(0))
        bundle_r, bundle_d = encoder(small_sample.rgb, small_sample.depth)
        for bundle in (bundle_r, bundle_d):
            assert [g.extents for g in bundle.levels] == encoder_shapes(small_cfg)

    def test_streams_have_separate_parameters(self, small_cfg):
        store = ParamStore()
        TwoStreamEncoder(store, small_cfg, Initializer(0))
        rgb = [n for n in store.names() if n.startswith("encoder.rgb.")]
        depth = [n for n in store.names() if n.startswith("encoder.depth.")]
        assert len(rgb) == len(depth) > 0
        assert len(rgb) + len(depth) == len(store)

    def test_rejects_wrong_input_size(self, small_cfg, rng):
        encoder = TwoStreamEncoder(ParamStore(), small_cfg, Initializer(0))
        with pytest.raises(DimensionError):
            encoder(rng.random((48, 48, 3)), rng.random((48, 48, 1)))

    def test_rejects_misaligned_depth(self, small_cfg, rng):
        encoder = TwoStreamEncoder(ParamStore(), small_cfg, Initializer(0))
        with pytest.raises(DimensionError):
            encoder(rng.random((32, 32, 3)), rng.random((32, 16, 1)))

    def test_patch_embed_with_zero_projection_returns_bias_plus_position(self, rng):
        image = Tensor(rng.random((8, 8, 3)))
        weight = Tensor(np.zeros((4 * 4 * 3, 5)))
        bias = Tensor(rng.normal(size=5))
        pos = Tensor(rng.normal(size=(4, 5)))
        grid = patch_embed(image, 4, weight, bias, pos)
        assert grid.extents == (2, 2, 5)
        assert_array_equal(grid.tokens.data, bias.data[None, :] + pos.data)

    def test_block_with_zeroed_outputs_is_identity(self, rng):
        block = TransformerBlock(ParamStore(), "b", 8, 2, 2, 1e-5, Initializer(1))
        block.attn.w_o.data[...] = 0.0
        block.fc2.weight.data[...] = 0.0
        x = _grid(rng, 3, 8)
        assert_array_equal(transformer_block(x, block).tokens.data, x.tokens.data)

    def test_prepare_depth_replicates_channels(self, rng):
        depth = rng.random((4, 4))
        out = prepare_depth(depth, 3)
        assert out.shape == (4, 4, 3)
        assert_array_equal(out[..., 0], out[..., 2])

    def test_three_channel_depth_config(self, small_sample):
        cfg = ModelConfig.toy(image_size=32, depth_channels=3)
        encoder = TwoStreamEncoder(ParamStore(), cfg, Initializer(0))
        _, bundle_d = encoder(small_sample.rgb, small_sample.depth)
        assert bundle_d.level3.extents == (2, 2, cfg.c_d)


class TestFeaturePyramid:
    def test_stage_a_width_and_ratios_at_full_scale(self):
        cfg = ModelConfig.full_scale()
        pyramid = FeaturePyramid(ParamStore(), "fpt.rgb", cfg, Initializer(0))
        assert pyramid.stage_a.conv.weight.shape == (1, 1, 448, 128)
        assert pyramid.stage_b.conv.weight.shape == (1, 1, 192, 64)
        assert pyramid.stage_c.conv.weight.shape == (1, 1, 128, 64)

    def test_fused_shapes_and_ratios(self, toy_cfg, rng):
        pyramid = FeaturePyramid(ParamStore(), "fpt.rgb", toy_cfg, Initializer(0))
        fused = fpt_fuse(_bundle(toy_cfg, rng), pyramid)
        assert fused.f3.extents == (4, 4, 96)
        assert fused.f2.extents == (8, 8, 32)
        assert fused.f1.extents == (16, 16, 16)
        assert fused.ratios == ((96, 16), (32, 16), (16, 16))
        deep, native = fused.ratios[0]
        assert deep == 6 * native

    def test_deep_level_guides_fine_levels(self, toy_cfg, rng):
        pyramid = FeaturePyramid(ParamStore(), "fpt.rgb", toy_cfg, Initializer(0))
        bundle = _bundle(toy_cfg, rng)
        other = bundle.replace_level3(_grid(rng, 4, 96))
        a, b = fpt_fuse(bundle, pyramid), fpt_fuse(other, pyramid)
        assert np.abs(a.f1.tokens.data - b.f1.tokens.data).max() > 0.0

    def test_without_fpt_levels_are_independent(self, rng):
        cfg = ModelConfig.toy(use_fpt=False)
        pyramid = FeaturePyramid(ParamStore(), "fpt.rgb", cfg, Initializer(0))
        bundle = _bundle(cfg, rng)
        other = bundle.replace_level3(_grid(rng, 4, 96))
        a, b = fpt_fuse(bundle, pyramid), fpt_fuse(other, pyramid)
        assert_array_equal(a.f1.tokens.data, b.f1.tokens.data)
        assert a.f2.extents == (8, 8, 32)
        assert a.ratios[0][0] == 0

    def test_rejects_wrong_channels(self, toy_cfg, rng):
        pyramid = FeaturePyramid(ParamStore(), "fpt.rgb", toy_cfg, Initializer(0))
        bundle = _bundle(ModelConfig.toy(c_d=32), rng)
        with pytest.raises(DimensionError):
            fpt_fuse(bundle, pyramid)


class TestDcm:
    def _level(self, c=6, mode=FusionMode.DCM) -> DcmLevel:
        return DcmLevel(ParamStore(), "dcm", c, Initializer(2), mode)

    def _gate(self, side, value):
        return SaliencyMap.constant(side, side, value, SaliencyKind.PROBABILITY)

    def test_identical_inputs_give_zero_complement(self, rng):
        level = self._level()
        level.map_b.weight.data[...] = level.map_a.weight.data
        level.map_b.bias.data[...] = level.map_a.bias.data
        f = _grid(rng, 4, 6)
        result = dcm_step(f, f, self._gate(4, 1.0), level)
        assert_array_equal(result.intermediates["complement_pre"].data, np.zeros((4, 4, 6)))

    def test_unit_gate_leaves_branches_unchanged(self, rng):
        level = self._level()
        result = dcm_step(_grid(rng, 4, 6), _grid(rng, 4, 6), self._gate(4, 1.0), level)
        inter = result.intermediates
        assert_array_equal(inter["gated_consistent_pre"].data, inter["consistent"].data)
        assert_array_equal(inter["gated_complement_pre"].data, inter["complement"].data)

    def test_zero_gate_silences_branches(self, rng):
        level = self._level()
        result = dcm_step(_grid(rng, 4, 6), _grid(rng, 4, 6), self._gate(4, 0.0), level)
        inter = result.intermediates
        assert not inter["gated_consistent_pre"].data.any()
        assert not inter["gated_complement_pre"].data.any()

    def test_consistency_branch_is_product_plus_residual(self, rng):
        result = dcm_step(_grid(rng, 3, 6), _grid(rng, 3, 6), self._gate(3, 1.0), self._level())
        inter = result.intermediates
        a, b = inter["map_a"].data, inter["map_b"].data
        assert_array_equal(inter["consistent_pre"].data, a * b + a)
        assert_array_equal(inter["complement_pre"].data, np.abs(a - b))

    def test_gate_is_resized_to_the_lattice(self, rng):
        result = dcm_step(_grid(rng, 4, 6), _grid(rng, 4, 6), self._gate(2, 0.5), self._level())
        assert result.intermediates["gate"].shape == (4, 4)

    def test_logit_gate_rejected(self, rng):
        logits = SaliencyMap.constant(4, 4, 0.0, SaliencyKind.LOGIT)
        with pytest.raises(ValueError):
            dcm_step(_grid(rng, 4, 6), _grid(rng, 4, 6), logits, self._level())

    def test_prediction_shape(self, rng):
        result = dcm_step(_grid(rng, 4, 6), _grid(rng, 4, 6), self._gate(4, 1.0), self._level())
        assert result.pred.kind == SaliencyKind.LOGIT
        assert result.pred.values.shape == (4, 4)
        assert result.fused.extents == (4, 4, 6)

    def test_concat_variant(self, rng):
        level = self._level(mode=FusionMode.CONCAT)
        result = dcm_step(_grid(rng, 4, 6), _grid(rng, 4, 6), self._gate(4, 1.0), level)
        assert "joint" in result.intermediates and "complement_pre" not in result.intermediates
        assert result.pred.values.shape == (4, 4)


class TestDecoder:
    def test_four_supervised_maps(self, toy_cfg, rng):
        store = ParamStore()
        init = Initializer(0)
        pyramids = [FeaturePyramid(store, name, toy_cfg, init) for name in ("fpt.rgb", "fpt.depth")]
        decoder = Decoder(store, toy_cfg, init)
        pyr_r = pyramids[0](_bundle(toy_cfg, rng))
        pyr_d = pyramids[1](_bundle(toy_cfg, rng))
        out = decoder(pyr_r, pyr_d)
        assert DCM_LEVELS == (3, 2, 1, 1)
        assert [step.fused.h for step in out.steps] == [4, 8, 16, 16]
        assert len(out.preds) == 4
        for pred in out.preds:
            assert pred.kind == SaliencyKind.LOGIT and pred.values.shape == (64, 64)
        final = out.final.values
        assert out.final.kind == SaliencyKind.PROBABILITY
        assert not final.requires_grad
        assert final.data.min() >= 0.0 and final.data.max() <= 1.0
        # the first DCM is gated by a constant one map
        assert_array_equal(out.steps[0].intermediates["gate"].data, np.ones((4, 4)))
