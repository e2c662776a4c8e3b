"""
Cross-modal attention: global self-attention exchange (GSA), local-aligned
cross-attention (LCA), their composition into the HCA block and its heads
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from hct_sod.errors import DimensionError
from hct_sod.models.config import AttentionMode, ModelConfig
from hct_sod.models.grids import AttentionMask, SaliencyKind, SaliencyMap, TokenGrid
from hct_sod.services.network.layers import Dense, Initializer, Norm
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.params import ParamStore
from hct_sod.services.numerics.tensor import Tensor

# stage name -> per-head attention weight matrices, filled when a trace dict is passed
AttentionTrace = Dict[str, List[np.ndarray]]


@dataclass(frozen=True)
class AttentionParams:
    """Projections of one attention layer; all square [c x c]"""
    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    heads: int

    @property
    def c(self) -> int:
        return self.w_q.shape[0]

    @property
    def head_dim(self) -> int:
        return self.c // self.heads


def make_attention_params(store: ParamStore, name: str, c: int, heads: int, init: Initializer) -> AttentionParams:
    if c % heads:
        raise DimensionError(f"{name}: {c} channels do not split into {heads} heads")
    return AttentionParams(
        w_q=store.add(f"{name}.w_q", init.uniform((c, c), fan_in=c)),
        w_k=store.add(f"{name}.w_k", init.uniform((c, c), fan_in=c)),
        w_v=store.add(f"{name}.w_v", init.uniform((c, c), fan_in=c)),
        w_o=store.add(f"{name}.w_o", init.uniform((c, c), fan_in=c)),
        heads=heads,
    )


def build_local_mask(h: int, w: int, radius: int, mask_value: float = -100.0) -> AttentionMask:
    """0 where the Chebyshev distance between two patches is <= radius, mask_value elsewhere"""
    if h < 1 or w < 1:
        raise ValueError(f"mask lattice must be at least 1x1, got {h}x{w}")
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    rows, cols = np.divmod(np.arange(h * w), w)
    dist = np.maximum(np.abs(rows[:, None] - rows[None, :]), np.abs(cols[:, None] - cols[None, :]))
    entries = np.where(dist <= radius, 0.0, mask_value)
    return AttentionMask(h=h, w=w, radius=radius, entries=Tensor(entries))


def attend(
    x_q: Tensor,
    x_k: Tensor,
    x_v: Tensor,
    p_q: AttentionParams,
    p_k: AttentionParams,
    p_v: AttentionParams,
    p_o: AttentionParams,
    mask: Optional[AttentionMask] = None,
    trace: Optional[List[np.ndarray]] = None,
) -> Tensor:
    """
    Multi-head softmax(Q K^T / sqrt(d) + M) V, heads concatenated and projected
    by W_O. Queries, keys and values may come from different streams and
    different parameter sets; no residual is added here.
    """
    c = p_o.c
    for name, x in (("query", x_q), ("key", x_k), ("value", x_v)):
        if x.ndim != 2 or x.shape[1] != c:
            raise DimensionError(f"attention {name} tokens {x.shape} do not have {c} channels")
    if x_k.shape[0] != x_v.shape[0]:
        raise DimensionError(f"keys ({x_k.shape[0]}) and values ({x_v.shape[0]}) disagree on token count")
    if mask is not None and mask.entries.shape != (x_q.shape[0], x_k.shape[0]):
        raise DimensionError(
            f"mask {mask.entries.shape} does not match {x_q.shape[0]} queries x {x_k.shape[0]} keys"
        )

    q = ops.matmul(x_q, p_q.w_q)
    k = ops.matmul(x_k, p_k.w_k)
    v = ops.matmul(x_v, p_v.w_v)
    d = p_o.head_dim
    scale = 1.0 / math.sqrt(d)

    outputs = []
    for head in range(p_o.heads):
        lo, hi = head * d, (head + 1) * d
        scores = ops.elementwise("scale", ops.matmul(ops.slice_cols(q, lo, hi), ops.transpose(ops.slice_cols(k, lo, hi))), scale)
        if mask is not None:
            scores = ops.add(scores, mask.entries)
        weights = ops.softmax_rows(scores)
        if trace is not None:
            trace.append(weights.data.copy())
        outputs.append(ops.matmul(weights, ops.slice_cols(v, lo, hi)))
    merged = outputs[0] if len(outputs) == 1 else ops.concat_last(outputs)
    return ops.matmul(merged, p_o.w_o)


def self_attention(x: TokenGrid, p: AttentionParams, mask: Optional[AttentionMask] = None) -> TokenGrid:
    """Standard multi-head self-attention, shape preserving"""
    return x.with_tokens(attend(x.tokens, x.tokens, x.tokens, p, p, p, p, mask))


def _check_aligned(x_r: TokenGrid, x_d: TokenGrid) -> None:
    if x_r.extents != x_d.extents:
        raise DimensionError(f"modalities are not aligned: rgb {x_r.extents} vs depth {x_d.extents}")


def gsa_attend(
    x_r: TokenGrid,
    x_d: TokenGrid,
    p_r: AttentionParams,
    p_d: AttentionParams,
    trace: Optional[AttentionTrace] = None,
) -> Tuple[Tensor, Tensor]:
    """Swapped global maps: RGB weights over depth values and vice versa (no residual)"""
    _check_aligned(x_r, x_d)
    rec_r = trace.setdefault("gsa_r", []) if trace is not None else None
    rec_d = trace.setdefault("gsa_d", []) if trace is not None else None
    delta_r = attend(x_r.tokens, x_r.tokens, x_d.tokens, p_r, p_r, p_d, p_r, None, rec_r)
    delta_d = attend(x_d.tokens, x_d.tokens, x_r.tokens, p_d, p_d, p_r, p_d, None, rec_d)
    return delta_r, delta_d


def gsa_exchange(
    x_r: TokenGrid, x_d: TokenGrid, p_r: AttentionParams, p_d: AttentionParams
) -> Tuple[TokenGrid, TokenGrid]:
    """y_r = x_r + W_O softmax(Q_r K_r^T / sqrt d) V_d, and symmetrically for depth"""
    delta_r, delta_d = gsa_attend(x_r, x_d, p_r, p_d)
    return x_r.with_tokens(ops.add(x_r.tokens, delta_r)), x_d.with_tokens(ops.add(x_d.tokens, delta_d))


def lca_attend(
    x_r: TokenGrid,
    x_d: TokenGrid,
    mask: Optional[AttentionMask],
    p_r: AttentionParams,
    p_d: AttentionParams,
    trace: Optional[AttentionTrace] = None,
    stage: str = "lca",
) -> Tuple[Tensor, Tensor]:
    """RGB queries over depth keys/values inside the mask window, and vice versa (no residual)"""
    _check_aligned(x_r, x_d)
    if mask is not None and mask.n != x_r.n:
        raise DimensionError(f"mask covers {mask.n} patches, grids have {x_r.n}")
    rec_r = trace.setdefault(f"{stage}_r", []) if trace is not None else None
    rec_d = trace.setdefault(f"{stage}_d", []) if trace is not None else None
    delta_r = attend(x_r.tokens, x_d.tokens, x_d.tokens, p_r, p_d, p_d, p_r, mask, rec_r)
    delta_d = attend(x_d.tokens, x_r.tokens, x_r.tokens, p_d, p_r, p_r, p_d, mask, rec_d)
    return delta_r, delta_d


def lca_exchange(
    x_r: TokenGrid, x_d: TokenGrid, mask: AttentionMask, p_r: AttentionParams, p_d: AttentionParams
) -> Tuple[TokenGrid, TokenGrid]:
    """y_r = x_r + W_O softmax(Q_r K_d^T / sqrt d + M) V_d, and symmetrically for depth"""
    delta_r, delta_d = lca_attend(x_r, x_d, mask, p_r, p_d)
    return x_r.with_tokens(ops.add(x_r.tokens, delta_r)), x_d.with_tokens(ops.add(x_d.tokens, delta_d))


class PredictHead:
    """Linear c -> 1 per token, reshaped to the lattice and resized; logits out"""

    def __init__(self, store: ParamStore, name: str, c: int, init: Initializer):
        self.proj = Dense(store, name, c, 1, init)

    def __call__(self, x: TokenGrid, out_h: int, out_w: int) -> SaliencyMap:
        return predict_head(x, self.proj.weight, self.proj.bias, out_h, out_w)


def predict_head(x: TokenGrid, weight: Tensor, bias: Tensor, out_h: int, out_w: int) -> SaliencyMap:
    if out_h < x.h or out_w < x.w:
        raise DimensionError(f"head output {out_h}x{out_w} is smaller than the grid {x.h}x{x.w}")
    logits = ops.reshape(ops.linear(x.tokens, weight, bias), (x.h, x.w, 1))
    logits = ops.bilinear_resize(logits, out_h, out_w)
    return SaliencyMap(ops.reshape(logits, (out_h, out_w)), SaliencyKind.LOGIT)


class HcaBlock:
    """
    Pre-norm GSA then pre-norm LCA, each added back residually. The attention
    mode selects the ablation variant; heads are optional so stacked blocks can
    leave prediction to the last one.
    """

    def __init__(
        self,
        store: ParamStore,
        name: str,
        cfg: ModelConfig,
        side: int,
        init: Initializer,
        with_heads: bool = True,
    ):
        c = cfg.c_d
        self.mode = AttentionMode(cfg.attention_mode)
        self.mask = build_local_mask(side, side, cfg.radius, cfg.mask_value)

        self.gsa_norm_r = self.gsa_norm_d = None
        self.gsa_r = self.gsa_d = None
        if self.mode in (AttentionMode.HCA, AttentionMode.GSA):
            self.gsa_norm_r = Norm(store, f"{name}.gsa.norm_r", c, cfg.ln_eps)
            self.gsa_norm_d = Norm(store, f"{name}.gsa.norm_d", c, cfg.ln_eps)
            self.gsa_r = make_attention_params(store, f"{name}.gsa.rgb", c, cfg.heads, init)
            self.gsa_d = make_attention_params(store, f"{name}.gsa.depth", c, cfg.heads, init)

        self.lca_norm_r = self.lca_norm_d = None
        self.lca_r = self.lca_d = None
        if self.mode in (AttentionMode.HCA, AttentionMode.GLOBAL_CROSS):
            self.lca_norm_r = Norm(store, f"{name}.lca.norm_r", c, cfg.ln_eps)
            self.lca_norm_d = Norm(store, f"{name}.lca.norm_d", c, cfg.ln_eps)
            self.lca_r = make_attention_params(store, f"{name}.lca.rgb", c, cfg.heads, init)
            self.lca_d = make_attention_params(store, f"{name}.lca.depth", c, cfg.heads, init)

        self.head_r = PredictHead(store, f"{name}.head_r", c, init) if with_heads else None
        self.head_d = PredictHead(store, f"{name}.head_d", c, init) if with_heads else None

    def __call__(
        self,
        x_r: TokenGrid,
        x_d: TokenGrid,
        out_h: int,
        out_w: int,
        trace: Optional[AttentionTrace] = None,
    ) -> Tuple[TokenGrid, TokenGrid, Optional[SaliencyMap], Optional[SaliencyMap]]:
        _check_aligned(x_r, x_d)
        if self.gsa_r is not None:
            n_r = x_r.with_tokens(self.gsa_norm_r(x_r.tokens))
            n_d = x_d.with_tokens(self.gsa_norm_d(x_d.tokens))
            delta_r, delta_d = gsa_attend(n_r, n_d, self.gsa_r, self.gsa_d, trace)
            x_r = x_r.with_tokens(ops.add(x_r.tokens, delta_r))
            x_d = x_d.with_tokens(ops.add(x_d.tokens, delta_d))

        if self.lca_r is not None:
            n_r = x_r.with_tokens(self.lca_norm_r(x_r.tokens))
            n_d = x_d.with_tokens(self.lca_norm_d(x_d.tokens))
            if self.mode == AttentionMode.HCA:
                delta_r, delta_d = lca_attend(n_r, n_d, self.mask, self.lca_r, self.lca_d, trace, "lca")
            else:
                delta_r, delta_d = lca_attend(n_r, n_d, None, self.lca_r, self.lca_d, trace, "cross")
            x_r = x_r.with_tokens(ops.add(x_r.tokens, delta_r))
            x_d = x_d.with_tokens(ops.add(x_d.tokens, delta_d))

        pred_r = self.head_r(x_r, out_h, out_w) if self.head_r is not None else None
        pred_d = self.head_d(x_d, out_h, out_w) if self.head_d is not None else None
        return x_r, x_d, pred_r, pred_d


class HcaStack:
    """cfg.hca_blocks blocks at level 3; the last one carries the heads"""

    def __init__(self, store: ParamStore, name: str, cfg: ModelConfig, init: Initializer):
        side = cfg.level_sides[2]
        count = cfg.hca_blocks
        self.blocks = [
            HcaBlock(store, f"{name}.{i}", cfg, side, init, with_heads=(i == count - 1))
            for i in range(count)
        ]

    @property
    def mask(self) -> AttentionMask:
        return self.blocks[-1].mask

    def __call__(self, x_r: TokenGrid, x_d: TokenGrid, out_h: int, out_w: int,
                 trace: Optional[AttentionTrace] = None):
        pred_r = pred_d = None
        for block in self.blocks:
            x_r, x_d, pred_r, pred_d = block(x_r, x_d, out_h, out_w, trace)
        return x_r, x_d, pred_r, pred_d


def hca_block(
    x_r: TokenGrid,
    x_d: TokenGrid,
    block: HcaBlock,
    out_h: int,
    out_w: int,
    trace: Optional[AttentionTrace] = None,
) -> Tuple[TokenGrid, TokenGrid, SaliencyMap, SaliencyMap]:
    """GSA -> LCA -> heads; returns updated streams and the two logit maps of loss_r / loss_d"""
    return block(x_r, x_d, out_h, out_w, trace)
