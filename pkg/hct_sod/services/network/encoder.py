"""
Two-stream patch encoder producing a three-level token pyramid per modality
"""
from typing import List, Tuple

import numpy as np

from hct_sod.errors import DimensionError
from hct_sod.models.config import LEVEL_STRIDES, ModelConfig
from hct_sod.models.grids import PyramidBundle, TokenGrid
from hct_sod.services.network.attention import AttentionParams, make_attention_params, self_attention
from hct_sod.services.network.layers import Dense, Initializer, Norm
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.numerics.tensor import Tensor, as_tensor


def patch_embed(image: Tensor, patch: int, proj_weight: Tensor, proj_bias: Tensor, pos: Tensor) -> TokenGrid:
    """Flatten p x p patches, project them linearly and add one positional row per lattice position"""
    if image.ndim != 3:
        raise DimensionError(f"patch_embed expects [H x W x ch], got {image.shape}")
    h, w, _ = image.shape
    if patch < 1 or h % patch or w % patch:
        raise DimensionError(f"image extents {h}x{w} are not divisible by patch {patch}")
    tokens = ops.linear(ops.patchify(image, patch), proj_weight, proj_bias)
    if pos.shape != tokens.shape:
        raise DimensionError(f"positional terms {pos.shape} do not match tokens {tokens.shape}")
    return TokenGrid(h=h // patch, w=w // patch, tokens=ops.add(tokens, pos))


class PatchEmbed:
    def __init__(self, store: ParamStore, name: str, patch: int, ch: int, c: int, side: int, init: Initializer):
        self.patch = patch
        self.proj = Dense(store, f"{name}.proj", patch * patch * ch, c, init)
        self.pos = store.add(f"{name}.pos", init.normal((side * side, c)))

    def __call__(self, image: Tensor) -> TokenGrid:
        return patch_embed(image, self.patch, self.proj.weight, self.proj.bias, self.pos)


class TransformerBlock:
    """
    Pre-norm block: x + attn(ln(x)), then x + fc2(gelu(fc1(ln(x)))).
    With w_o and fc2 zeroed the block is the identity map.
    """

    def __init__(self, store: ParamStore, name: str, c: int, heads: int, mlp_ratio: int, eps: float, init: Initializer):
        self.c = c
        self.norm1 = Norm(store, f"{name}.norm1", c, eps)
        self.attn: AttentionParams = make_attention_params(store, f"{name}.attn", c, heads, init)
        self.norm2 = Norm(store, f"{name}.norm2", c, eps)
        self.fc1 = Dense(store, f"{name}.fc1", c, c * mlp_ratio, init)
        self.fc2 = Dense(store, f"{name}.fc2", c * mlp_ratio, c, init)

    def __call__(self, x: TokenGrid) -> TokenGrid:
        return transformer_block(x, self)


def transformer_block(x: TokenGrid, block: TransformerBlock) -> TokenGrid:
    if x.c != block.c:
        raise DimensionError(f"transformer block expects {block.c} channels, got {x.c}")
    attended = self_attention(x.with_tokens(block.norm1(x.tokens)), block.attn)
    x = x.with_tokens(ops.add(x.tokens, attended.tokens))
    hidden = ops.gelu(block.fc1(block.norm2(x.tokens)))
    return x.with_tokens(ops.add(x.tokens, block.fc2(hidden)))


class ModalityEncoder:
    """One stream: per level a patch embedding at stride 4/8/16 followed by cfg.depth blocks"""

    def __init__(self, store: ParamStore, name: str, cfg: ModelConfig, ch: int, init: Initializer):
        self.embeds: List[PatchEmbed] = []
        self.blocks: List[List[TransformerBlock]] = []
        for level, (stride, side, c) in enumerate(zip(LEVEL_STRIDES, cfg.level_sides, cfg.level_channels), start=1):
            prefix = f"{name}.level{level}"
            self.embeds.append(PatchEmbed(store, f"{prefix}.embed", stride, ch, c, side, init))
            self.blocks.append([
                TransformerBlock(store, f"{prefix}.block{i}", c, cfg.heads, cfg.mlp_ratio, cfg.ln_eps, init)
                for i in range(cfg.depth)
            ])

    def __call__(self, image: Tensor) -> PyramidBundle:
        levels = []
        for embed, blocks in zip(self.embeds, self.blocks):
            grid = embed(image)
            for block in blocks:
                grid = block(grid)
            levels.append(grid)
        return PyramidBundle(*levels)


class TwoStreamEncoder:
    """Separate parameters per modality under encoder.rgb.* and encoder.depth.*"""

    def __init__(self, store: ParamStore, cfg: ModelConfig, init: Initializer):
        self.cfg = cfg
        self.rgb = ModalityEncoder(store, "encoder.rgb", cfg, cfg.rgb_channels, init)
        self.depth = ModalityEncoder(store, "encoder.depth", cfg, cfg.depth_channels, init)

    def __call__(self, rgb, depth) -> Tuple[PyramidBundle, PyramidBundle]:
        return encoder_forward(rgb, depth, self)


def prepare_depth(depth: np.ndarray, channels: int) -> np.ndarray:
    """Accept [H x W] or [H x W x 1] depth and give it `channels` identical channels"""
    depth = np.asarray(depth, dtype=np.float64)
    if depth.ndim == 2:
        depth = depth[..., None]
    if depth.ndim != 3 or depth.shape[2] != 1:
        raise DimensionError(f"depth must be single-channel, got {depth.shape}")
    return np.repeat(depth, channels, axis=2) if channels > 1 else depth


def encoder_forward(rgb, depth, encoder: TwoStreamEncoder) -> Tuple[PyramidBundle, PyramidBundle]:
    cfg = encoder.cfg
    rgb_t = as_tensor(rgb)
    depth_t = Tensor(prepare_depth(depth.data if isinstance(depth, Tensor) else depth, cfg.depth_channels))
    if rgb_t.ndim != 3 or rgb_t.shape[2] != cfg.rgb_channels:
        raise DimensionError(f"rgb must be [H x W x {cfg.rgb_channels}], got {rgb_t.shape}")
    if rgb_t.shape[:2] != depth_t.shape[:2]:
        raise DimensionError(f"rgb {rgb_t.shape[:2]} and depth {depth_t.shape[:2]} extents differ")
    if rgb_t.shape[:2] != (cfg.image_size, cfg.image_size):
        raise DimensionError(f"model expects {cfg.image_size}x{cfg.image_size} inputs, got {rgb_t.shape[:2]}")
    return encoder.rgb(rgb_t), encoder.depth(depth_t)


def encoder_shapes(cfg: ModelConfig) -> List[Tuple[int, int, int]]:
    """(h, w, c) of levels 1..3"""
    return [(side, side, c) for side, c in zip(cfg.level_sides, cfg.level_channels)]

