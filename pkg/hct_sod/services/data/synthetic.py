"""
Synthetic RGB-D scenes: 1-3 rectangles/ellipses standing out in depth from a
tilted background plane, on a textured colour background
"""
from typing import List

import numpy as np
from PIL import Image, ImageDraw

from hct_sod.models.sample import Sample
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

# Share of scenes whose objects copy the background colour, so only depth separates them
CAMOUFLAGE_RATE = 0.25


def _shape_mask(rng: np.random.Generator, size: int) -> np.ndarray:
    """One random rectangle or ellipse, drawn with PIL, as a boolean [size x size] mask"""
    lo, hi = max(4, size // 8), max(5, size // 2)
    w = int(rng.integers(lo, hi + 1))
    h = int(rng.integers(lo, hi + 1))
    x0 = int(rng.integers(0, size - w + 1))
    y0 = int(rng.integers(0, size - h + 1))
    canvas = Image.new("L", (size, size), 0)
    draw = ImageDraw.Draw(canvas)
    box = [x0, y0, x0 + w - 1, y0 + h - 1]
    if rng.random() < 0.5:
        draw.rectangle(box, fill=255)
    else:
        draw.ellipse(box, fill=255)
    return np.asarray(canvas) > 0


def synth_sample(seed: int, index: int, size: int) -> Sample:
    """Deterministic in (seed, index) alone"""
    rng = np.random.default_rng([seed, index])
    yy, xx = np.mgrid[0:size, 0:size] / max(size - 1, 1)

    # background: tilted far plane and a noisy base colour
    tilt_x, tilt_y = rng.uniform(-0.15, 0.15, size=2)
    depth = 0.3 + tilt_x * (xx - 0.5) + tilt_y * (yy - 0.5)
    base = rng.uniform(0.2, 0.8, size=3)
    rgb = base[None, None, :] + rng.normal(0.0, 0.06, size=(size, size, 3))

    camouflage = rng.random() < CAMOUFLAGE_RATE
    gt = np.zeros((size, size), dtype=bool)
    for _ in range(int(rng.integers(1, 4))):
        mask = _shape_mask(rng, size)
        if camouflage:
            colour = base + rng.normal(0.0, 0.03, size=3)
        else:
            colour = rng.uniform(0.0, 1.0, size=3)
        rgb[mask] = colour[None, :] + rng.normal(0.0, 0.03, size=(int(mask.sum()), 3))
        depth[mask] = rng.uniform(0.65, 0.95)
        gt |= mask

    return Sample(
        id=f"s{index:05d}",
        rgb=np.clip(rgb, 0.0, 1.0),
        depth=np.clip(depth, 0.0, 1.0)[..., None],
        gt=gt.astype(np.float64),
    )


def synth_dataset(seed: int, n: int, size: int) -> List[Sample]:
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if size < 16 or size % 16:
        raise ValueError(f"size must be a positive multiple of 16, got {size}")
    samples = [synth_sample(seed, i, size) for i in range(n)]
    logger.info(f"Generated {n} synthetic samples of {size}x{size} (seed {seed})")
    return samples
