"""
Deep-guided feature pyramid: level 3 is upsampled into level 2, the result into
level 1, and a final equal-width stage merges it with a projected level-1 copy
"""
from hct_sod.errors import DimensionError
from hct_sod.models.config import ModelConfig
from hct_sod.models.grids import FusedPyramid, PyramidBundle, TokenGrid
from hct_sod.services.network.layers import Initializer, Projection, upsample_to
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.params import ParamStore


class FeaturePyramid:
    """Per-modality pyramid parameters; use_fpt=False keeps only per-level projections"""

    def __init__(self, store: ParamStore, name: str, cfg: ModelConfig, init: Initializer):
        c_s, c_d, eps = cfg.c_s, cfg.c_d, cfg.ln_eps
        self.use_fpt = cfg.use_fpt
        self.c_s, self.c_d = c_s, c_d
        if self.use_fpt:
            self.stage_a = Projection(store, f"{name}.stage_a", c_d + c_s, 2 * c_s, init, eps)
            self.stage_b = Projection(store, f"{name}.stage_b", 2 * c_s + c_s, c_s, init, eps)
            self.level1_proj = Projection(store, f"{name}.level1_proj", c_s, c_s, init, eps)
            self.stage_c = Projection(store, f"{name}.stage_c", 2 * c_s, c_s, init, eps)
        else:
            self.level2_only = Projection(store, f"{name}.level2_only", c_s, 2 * c_s, init, eps)
            self.level1_only = Projection(store, f"{name}.level1_only", c_s, c_s, init, eps)

    def __call__(self, bundle: PyramidBundle) -> FusedPyramid:
        return fpt_fuse(bundle, self)


def fpt_fuse(bundle: PyramidBundle, pyramid: FeaturePyramid) -> FusedPyramid:
    l1, l2, l3 = bundle.levels
    if l1.c != pyramid.c_s or l3.c != pyramid.c_d:
        raise DimensionError(
            f"pyramid expects channels ({pyramid.c_s}, {pyramid.c_s}, {pyramid.c_d}), got ({l1.c}, {l2.c}, {l3.c})"
        )

    if not pyramid.use_fpt:
        f2 = pyramid.level2_only(l2.lattice())
        f1 = pyramid.level1_only(l1.lattice())
        return FusedPyramid(
            f3=l3,
            f2=TokenGrid.from_lattice(f2),
            f1=TokenGrid.from_lattice(f1),
            ratios=((0, l2.c), (0, l1.c), (0, l1.c)),
        )

    # stage A: deep into level 2, c_d : c_s
    deep = upsample_to(l3.lattice(), l2.h, l2.w)
    a = pyramid.stage_a(ops.concat_last([deep, l2.lattice()]))

    # stage B: propagated stream into level 1, 2 c_s : c_s
    up_a = upsample_to(a, l1.h, l1.w)
    b = pyramid.stage_b(ops.concat_last([up_a, l1.lattice()]))

    # stage C: equal-width merge with a projected level-1 copy
    side = pyramid.level1_proj(l1.lattice())
    c = pyramid.stage_c(ops.concat_last([b, side]))

    return FusedPyramid(
        f3=l3,
        f2=TokenGrid.from_lattice(a),
        f1=TokenGrid.from_lattice(c),
        ratios=((l3.c, l2.c), (a.shape[2], l1.c), (b.shape[2], side.shape[2])),
    )
