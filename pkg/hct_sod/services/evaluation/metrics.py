"""
Saliency metrics: MAE, max F-measure, S-measure and max E-measure.

All means are accumulated left to right over the row-major pixel order so
results are reproducible bit for bit. Predictions are binarised as
`pred > t` for t = k / (thresholds - 1), k = 0 .. thresholds - 1.
"""
from typing import List, Optional, Tuple

import numpy as np

from hct_sod.errors import DimensionError, MetricError
from hct_sod.models.config import EvalConfig
from hct_sod.models.reports import MetricReport

EPS = np.spacing(1.0)


def _mean(values: np.ndarray) -> float:
    flat = np.asarray(values, dtype=np.float64).ravel()
    if flat.size == 0:
        raise MetricError("mean of an empty region")
    return float(np.cumsum(flat)[-1] / flat.size)


def _check_pair(pred: np.ndarray, gt: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 2:
        raise DimensionError(f"prediction {pred.shape} and groundtruth {gt.shape} must be equal [H x W] maps")
    if not np.all(np.isfinite(pred)) or pred.min() < 0.0 or pred.max() > 1.0:
        raise MetricError("prediction must be a probability map in [0, 1]")
    if not np.all((gt == 0.0) | (gt == 1.0)):
        raise MetricError("groundtruth must be binary")
    return pred, gt


def thresholds(count: int) -> np.ndarray:
    return np.arange(count, dtype=np.float64) / (count - 1)


def mae(pred: np.ndarray, gt: np.ndarray) -> float:
    pred, gt = _check_pair(pred, gt)
    return _mean(np.abs(pred - gt))


# ------------------------------------------------------------------ F-measure

def f_curve(pred: np.ndarray, gt: np.ndarray, beta_sq: float = 0.3, count: int = 256) -> np.ndarray:
    """F_beta per threshold; thresholds with no predicted foreground score 0"""
    pred, gt = _check_pair(pred, gt)
    positives = int(np.count_nonzero(gt))
    if positives == 0:
        raise MetricError("F-measure is undefined for an all-zero groundtruth")
    fg = gt.astype(bool).ravel()
    p = pred.ravel()
    curve = np.zeros(count, dtype=np.float64)
    for k, t in enumerate(thresholds(count)):
        binary = p > t
        predicted = int(np.count_nonzero(binary))
        if predicted == 0:
            continue
        tp = int(np.count_nonzero(binary & fg))
        precision = tp / predicted
        recall = tp / positives
        denom = beta_sq * precision + recall
        if denom > 0:
            curve[k] = (1.0 + beta_sq) * precision * recall / denom
    return curve


def max_f(pred: np.ndarray, gt: np.ndarray, beta_sq: float = 0.3, count: int = 256) -> Tuple[float, np.ndarray]:
    curve = f_curve(pred, gt, beta_sq, count)
    return float(curve.max()), curve


# ------------------------------------------------------------------ S-measure

def _object_similarity(values: np.ndarray) -> float:
    """2 x / (x^2 + 1 + sigma_x) over one region; sigma is the sample std"""
    x = _mean(values)
    sigma = float(np.sqrt(_mean((values - x) ** 2) * values.size / (values.size - 1))) if values.size > 1 else 0.0
    return 2.0 * x / (x * x + 1.0 + sigma + EPS)


def _s_object(pred: np.ndarray, gt: np.ndarray) -> float:
    fg_mask = gt == 1.0
    u = _mean(gt)
    fg = _object_similarity(pred[fg_mask])
    bg = _object_similarity(1.0 - pred[~fg_mask])
    return u * fg + (1.0 - u) * bg


def _split_points(coords: np.ndarray, extent: int) -> List[int]:
    """
    Quadrant boundaries along one axis for a foreground whose pixel
    coordinates are `coords`.

    The boundary is the pixel edge nearest the centroid, round(mean + 0.5),
    which mirrors with the image. A centroid on a pixel centre sits on a tie
    that is broken toward the middle of the image; when both edges are
    equally central both are returned and the region score is averaged.
    """
    n = coords.size
    total = int(coords.sum())
    if total % n:
        return [total // n + 1]
    below, above = total // n, total // n + 1
    off_below, off_above = abs(2 * below - extent), abs(2 * above - extent)
    if off_below == off_above:
        return [below, above]
    return [below] if off_below < off_above else [above]


def _ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    n = pred.size
    x, y = _mean(pred), _mean(gt)
    dof = max(n - 1, 1)
    sigma_x = float(np.cumsum(((pred - x) ** 2).ravel())[-1]) / dof
    sigma_y = float(np.cumsum(((gt - y) ** 2).ravel())[-1]) / dof
    sigma_xy = float(np.cumsum(((pred - x) * (gt - y)).ravel())[-1]) / dof
    alpha = 4.0 * x * y * sigma_xy
    beta = (x * x + y * y) * (sigma_x + sigma_y)
    if alpha != 0.0:
        return alpha / (beta + EPS)
    if beta == 0.0:
        return 1.0
    return 0.0


def _quadrant_score(pred: np.ndarray, gt: np.ndarray, cx: int, cy: int) -> float:
    h, w = gt.shape
    area = h * w
    quadrants = (
        (slice(0, cy), slice(0, cx), cx * cy / area),
        (slice(0, cy), slice(cx, w), (w - cx) * cy / area),
        (slice(cy, h), slice(0, cx), cx * (h - cy) / area),
        (slice(cy, h), slice(cx, w), (w - cx) * (h - cy) / area),
    )
    score = 0.0
    for rows, cols, weight in quadrants:
        if weight == 0.0:
            continue
        score += weight * _ssim(pred[rows, cols], gt[rows, cols])
    return score


def _s_region(pred: np.ndarray, gt: np.ndarray) -> float:
    h, w = gt.shape
    rows, cols = np.nonzero(gt)
    scores = [
        _quadrant_score(pred, gt, cx, cy)
        for cy in _split_points(rows, h)
        for cx in _split_points(cols, w)
    ]
    return sum(scores) / len(scores)


def s_measure(pred: np.ndarray, gt: np.ndarray, alpha: float = 0.5) -> float:
    pred, gt = _check_pair(pred, gt)
    y = _mean(gt)
    if y == 0.0:
        return 1.0 - _mean(pred)
    if y == 1.0:
        return _mean(pred)
    score = alpha * _s_object(pred, gt) + (1.0 - alpha) * _s_region(pred, gt)
    return float(min(max(score, 0.0), 1.0))


# ------------------------------------------------------------------ E-measure

def _enhanced_alignment(binary: np.ndarray, gt: np.ndarray) -> float:
    gt_mean = _mean(gt)
    if gt_mean == 0.0:
        return _mean(1.0 - binary)
    if gt_mean == 1.0:
        return _mean(binary)
    phi_gt = gt - gt_mean
    phi_bin = binary - _mean(binary)
    xi = 2.0 * phi_gt * phi_bin / (phi_gt * phi_gt + phi_bin * phi_bin + EPS)
    return _mean((1.0 + xi) ** 2 / 4.0)


def e_curve(pred: np.ndarray, gt: np.ndarray, count: int = 256) -> np.ndarray:
    pred, gt = _check_pair(pred, gt)
    return np.array([_enhanced_alignment((pred > t).astype(np.float64), gt) for t in thresholds(count)])


def e_measure_max(pred: np.ndarray, gt: np.ndarray, count: int = 256) -> Tuple[float, np.ndarray]:
    curve = e_curve(pred, gt, count)
    return float(curve.max()), curve


def evaluate_pair(pred: np.ndarray, gt: np.ndarray, cfg: Optional[EvalConfig] = None) -> MetricReport:
    cfg = cfg or EvalConfig()
    best_f, fc = max_f(pred, gt, cfg.beta_sq, cfg.thresholds)
    best_e, ec = e_measure_max(pred, gt, cfg.thresholds)
    return MetricReport(
        s_measure=s_measure(pred, gt, cfg.alpha),
        max_f=min(best_f, 1.0),
        e_max=min(best_e, 1.0),
        mae=mae(pred, gt),
        f_curve=fc.tolist(),
        e_curve=ec.tolist(),
    )
