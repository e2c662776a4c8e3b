"""
Disentangled complementing decoder: four DCM steps on the level-3, level-2,
level-1 and again level-1 lattices, each gated by the previous prediction
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from hct_sod.errors import DimensionError
from hct_sod.models.config import FusionMode, ModelConfig
from hct_sod.models.grids import FusedPyramid, SaliencyKind, SaliencyMap, TokenGrid
from hct_sod.services.network.layers import Conv, Initializer, upsample_to
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.tensor import Tensor
from hct_sod.services.numerics.params import ParamStore

# pyramid level consumed by DCM-1..DCM-4
DCM_LEVELS: Tuple[int, int, int, int] = (3, 2, 1, 1)


@dataclass
class DcmStepResult:
    """Outputs of one DCM; intermediates keep the branch tensors before each conv for inspection"""
    fused: TokenGrid
    pred: SaliencyMap
    intermediates: Dict[str, Tensor] = field(default_factory=dict)


class DcmLevel:
    """
    Parameters of one DCM. dcm mode splits mapped features into a consistency
    branch conv(a*b + a) and a complementarity branch conv(|a - b|); concat mode
    convolves the channel concatenation instead. Every 3x3 conv is followed by GELU.
    """

    def __init__(self, store: ParamStore, name: str, c: int, init: Initializer, fusion_mode: FusionMode):
        self.c = c
        self.mode = FusionMode(fusion_mode)
        self.map_a = Conv(store, f"{name}.map_a", c, c, 1, init)
        self.map_b = Conv(store, f"{name}.map_b", c, c, 1, init)
        if self.mode == FusionMode.DCM:
            self.consistent = Conv(store, f"{name}.consistent", c, c, 3, init)
            self.complement = Conv(store, f"{name}.complement", c, c, 3, init)
            self.gated_consistent = Conv(store, f"{name}.gated_consistent", c, c, 3, init)
            self.gated_complement = Conv(store, f"{name}.gated_complement", c, c, 3, init)
        else:
            self.joint = Conv(store, f"{name}.joint", 2 * c, c, 3, init)
            self.gated_joint = Conv(store, f"{name}.gated_joint", c, c, 3, init)
        self.fuse = Conv(store, f"{name}.fuse", c, c, 3, init)
        self.head = Conv(store, f"{name}.head", c, 1, 1, init)

    def __call__(self, f_a: TokenGrid, f_b: TokenGrid, p_prev: SaliencyMap) -> DcmStepResult:
        return dcm_step(f_a, f_b, p_prev, self)


def _gate_map(p_prev: SaliencyMap, h: int, w: int) -> Tensor:
    if p_prev.kind != SaliencyKind.PROBABILITY:
        raise ValueError("DCM gating needs a probability map, got logits")
    if (p_prev.h, p_prev.w) != (h, w):
        p_prev = p_prev.resized(h, w)
    return p_prev.values


def dcm_step(f_a: TokenGrid, f_b: TokenGrid, p_prev: SaliencyMap, level: DcmLevel) -> DcmStepResult:
    if f_a.extents != f_b.extents:
        raise DimensionError(f"DCM inputs differ: {f_a.extents} vs {f_b.extents}")
    if f_a.c != level.c:
        raise DimensionError(f"DCM expects {level.c} channels, got {f_a.c}")
    gate = _gate_map(p_prev, f_a.h, f_a.w)

    map_a = level.map_a(f_a.lattice())
    map_b = level.map_b(f_b.lattice())
    inter: Dict[str, Tensor] = {"map_a": map_a, "map_b": map_b, "gate": gate}

    if level.mode == FusionMode.DCM:
        consistent_pre = ops.add(ops.mul(map_a, map_b), map_a)
        complement_pre = ops.elementwise("abs", ops.sub(map_a, map_b))
        consistent = ops.gelu(level.consistent(consistent_pre))
        complement = ops.gelu(level.complement(complement_pre))
        gated_consistent_pre = ops.channel_gate(consistent, gate)
        gated_complement_pre = ops.channel_gate(complement, gate)
        gated_sum = ops.add(
            ops.gelu(level.gated_consistent(gated_consistent_pre)),
            ops.gelu(level.gated_complement(gated_complement_pre)),
        )
        inter.update(
            consistent_pre=consistent_pre,
            complement_pre=complement_pre,
            consistent=consistent,
            complement=complement,
            gated_consistent_pre=gated_consistent_pre,
            gated_complement_pre=gated_complement_pre,
        )
    else:
        joint = ops.gelu(level.joint(ops.concat_last([map_a, map_b])))
        gated_joint_pre = ops.channel_gate(joint, gate)
        gated_sum = ops.gelu(level.gated_joint(gated_joint_pre))
        inter.update(joint=joint, gated_joint_pre=gated_joint_pre)

    inter["fuse_pre"] = gated_sum
    fused = ops.gelu(level.fuse(gated_sum))
    logits = level.head(fused)
    pred = SaliencyMap(ops.reshape(logits, (f_a.h, f_a.w)), SaliencyKind.LOGIT)
    return DcmStepResult(fused=TokenGrid.from_lattice(fused), pred=pred, intermediates=inter)


@dataclass
class DecoderOutput:
    """Four logit maps at input resolution, the final probability map, and the raw steps"""
    preds: List[SaliencyMap]
    final: SaliencyMap
    steps: List[DcmStepResult]


class Decoder:
    """Four DCMs plus per-modality 1x1 laterals bringing each pyramid level to c_s channels"""

    def __init__(self, store: ParamStore, cfg: ModelConfig, init: Initializer):
        self.c = cfg.c_s
        self.image_size = cfg.image_size
        # channels of FusedPyramid levels 1, 2, 3
        level_in = {1: cfg.c_s, 2: 2 * cfg.c_s, 3: cfg.c_d}
        self.laterals_r: List[Conv] = []
        self.laterals_d: List[Conv] = []
        self.levels: List[DcmLevel] = []
        for i, level in enumerate(DCM_LEVELS, start=1):
            self.laterals_r.append(Conv(store, f"decoder.lateral{i}.rgb", level_in[level], self.c, 1, init))
            self.laterals_d.append(Conv(store, f"decoder.lateral{i}.depth", level_in[level], self.c, 1, init))
            self.levels.append(DcmLevel(store, f"decoder.dcm{i}", self.c, init, cfg.fusion_mode))

    def __call__(self, pyr_r: FusedPyramid, pyr_d: FusedPyramid,
                 out_h: Optional[int] = None, out_w: Optional[int] = None) -> DecoderOutput:
        return decoder_forward(pyr_r, pyr_d, self, out_h or self.image_size, out_w or self.image_size)


def _level(pyr: FusedPyramid, level: int) -> TokenGrid:
    return {1: pyr.f1, 2: pyr.f2, 3: pyr.f3}[level]


def _check_pyramids(pyr_r: FusedPyramid, pyr_d: FusedPyramid) -> None:
    for level in (1, 2, 3):
        a, b = _level(pyr_r, level), _level(pyr_d, level)
        if a.extents != b.extents:
            raise DimensionError(f"pyramid level {level} differs between modalities: {a.extents} vs {b.extents}")


def decoder_forward(pyr_r: FusedPyramid, pyr_d: FusedPyramid, decoder: Decoder, out_h: int, out_w: int) -> DecoderOutput:
    _check_pyramids(pyr_r, pyr_d)
    steps: List[DcmStepResult] = []
    prev: Optional[DcmStepResult] = None

    for i, level in enumerate(DCM_LEVELS):
        feat_r, feat_d = _level(pyr_r, level), _level(pyr_d, level)
        lat_r = decoder.laterals_r[i](feat_r.lattice())
        lat_d = decoder.laterals_d[i](feat_d.lattice())
        if prev is None:
            gate = SaliencyMap.constant(feat_r.h, feat_r.w, 1.0, SaliencyKind.PROBABILITY)
        else:
            carried = upsample_to(prev.fused.lattice(), feat_r.h, feat_r.w)
            lat_r = ops.add(lat_r, carried)
            lat_d = ops.add(lat_d, carried)
            gate = prev.pred.to_probability()
        step = decoder.levels[i](TokenGrid.from_lattice(lat_r), TokenGrid.from_lattice(lat_d), gate)
        steps.append(step)
        prev = step

    preds = [step.pred.resized(out_h, out_w) for step in steps]
    return DecoderOutput(preds=preds, final=final_map(steps[-1].pred, out_h, out_w), steps=steps)


def final_map(logits: SaliencyMap, out_h: int, out_w: int) -> SaliencyMap:
    """sigmoid, then resize; detached and clipped to [0, 1]"""
    resized = logits.to_probability().resized(out_h, out_w).values.data
    return SaliencyMap(Tensor(resized.clip(0.0, 1.0)), SaliencyKind.PROBABILITY)
