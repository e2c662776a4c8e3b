"""
Full two-stream network: encoder -> cross-modal attention at level 3 ->
per-modality feature pyramids -> DCM decoder
"""
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from hct_sod.models.config import ModelConfig
from hct_sod.models.grids import SaliencyMap
from hct_sod.services.network.attention import AttentionTrace, HcaStack
from hct_sod.services.network.dcm import DcmStepResult, Decoder
from hct_sod.services.network.encoder import TwoStreamEncoder
from hct_sod.services.network.fpt import FeaturePyramid
from hct_sod.services.network.layers import Initializer
from hct_sod.services.numerics.params import ParamStore
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()


@dataclass
class ModelOutput:
    """Six supervised logit maps at input resolution plus the final probability map"""
    pred_r: SaliencyMap
    pred_d: SaliencyMap
    dcm_preds: List[SaliencyMap]
    final: SaliencyMap
    steps: List[DcmStepResult]

    def logit_maps(self) -> List[SaliencyMap]:
        """In loss order: r, d, 1, 2, 3, 4"""
        return [self.pred_r, self.pred_d, *self.dcm_preds]


class HCTModel:
    """Owns the ParamStore; construction order fixes parameter names and the init stream"""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.store = ParamStore()
        init = Initializer(cfg.init_seed)
        self.encoder = TwoStreamEncoder(self.store, cfg, init)
        self.hca = HcaStack(self.store, "hca", cfg, init)
        self.fpt_r = FeaturePyramid(self.store, "fpt.rgb", cfg, init)
        self.fpt_d = FeaturePyramid(self.store, "fpt.depth", cfg, init)
        self.decoder = Decoder(self.store, cfg, init)
        logger.info(
            f"Built HCT model: {len(self.store)} tensors, {self.store.num_scalars()} parameters, "
            f"attention={cfg.attention_mode.value}, fpt={cfg.use_fpt}, fusion={cfg.fusion_mode.value}"
        )

    def forward(self, rgb, depth, trace: Optional[AttentionTrace] = None) -> ModelOutput:
        size = self.cfg.image_size
        bundle_r, bundle_d = self.encoder(rgb, depth)
        x_r, x_d, pred_r, pred_d = self.hca(bundle_r.level3, bundle_d.level3, size, size, trace)
        pyr_r = self.fpt_r(bundle_r.replace_level3(x_r))
        pyr_d = self.fpt_d(bundle_d.replace_level3(x_d))
        decoded = self.decoder(pyr_r, pyr_d, size, size)
        return ModelOutput(pred_r=pred_r, pred_d=pred_d, dcm_preds=decoded.preds,
                           final=decoded.final, steps=decoded.steps)

    __call__ = forward

    def predict(self, rgb, depth) -> np.ndarray:
        """Final saliency probabilities as an [H x W] array"""
        return self.forward(rgb, depth).final.values.numpy()
