"""
Horizontal flip applied identically to rgb, depth and gt
"""
import numpy as np

from hct_sod.models.sample import Sample


def hflip(sample: Sample) -> Sample:
    return Sample(
        id=sample.id,
        rgb=np.ascontiguousarray(sample.rgb[:, ::-1]),
        depth=np.ascontiguousarray(sample.depth[:, ::-1]),
        gt=np.ascontiguousarray(sample.gt[:, ::-1]),
    )
