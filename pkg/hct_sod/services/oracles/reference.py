"""
Brute-force reference implementations written with explicit loops over
scalars. They share no code with the vectorised ops they check.
"""
import math
from typing import List, Sequence

import numpy as np


def matmul_loops(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += a[i, t] * b[t, j]
            out[i, j] = acc
    return out


def conv2d_loops(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Zero-padded same convolution, kernel indexed [di, dj, cin, cout]"""
    h, wd, cin = x.shape
    k, _, _, cout = w.shape
    pad = k // 2
    out = np.zeros((h, wd, cout))
    for i in range(h):
        for j in range(wd):
            for o in range(cout):
                acc = b[o]
                for di in range(k):
                    for dj in range(k):
                        ii, jj = i + di - pad, j + dj - pad
                        if 0 <= ii < h and 0 <= jj < wd:
                            for c in range(cin):
                                acc += x[ii, jj, c] * w[di, dj, c, o]
                out[i, j, o] = acc
    return out


def softmax_naive(row: Sequence[float]) -> List[float]:
    exps = [math.exp(v) for v in row]
    total = sum(exps)
    return [e / total for e in exps]


def bce_naive(logit: float, target: float) -> float:
    # sigma(-x) instead of 1 - sigma(x) keeps the negative branch exact for large logits
    p = 1.0 / (1.0 + math.exp(-logit))
    q = 1.0 / (1.0 + math.exp(logit))
    return -(target * math.log(p) + (1.0 - target) * math.log(q))


def bilinear_pixel(grid: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Per-pixel coordinate formula, align-corners-false, clamped"""
    h, w, c = grid.shape
    out = np.zeros((new_h, new_w, c))
    for i in range(new_h):
        y = min(max((i + 0.5) * h / new_h - 0.5, 0.0), h - 1)
        y0 = int(math.floor(y))
        y1 = min(y0 + 1, h - 1)
        ly = y - y0
        for j in range(new_w):
            x = min(max((j + 0.5) * w / new_w - 0.5, 0.0), w - 1)
            x0 = int(math.floor(x))
            x1 = min(x0 + 1, w - 1)
            lx = x - x0
            for ch in range(c):
                top = (1 - lx) * grid[y0, x0, ch] + lx * grid[y0, x1, ch]
                bottom = (1 - lx) * grid[y1, x0, ch] + lx * grid[y1, x1, ch]
                out[i, j, ch] = (1 - ly) * top + ly * bottom
    return out


def chebyshev_allowed(h: int, w: int, radius: int) -> np.ndarray:
    n = h * w
    allowed = np.zeros((n, n), dtype=bool)
    for p in range(n):
        for q in range(n):
            allowed[p, q] = max(abs(p // w - q // w), abs(p % w - q % w)) <= radius
    return allowed


def restricted_cross_attention(
    x_q: np.ndarray,
    x_kv: np.ndarray,
    w_q: np.ndarray,
    w_k: np.ndarray,
    w_v: np.ndarray,
    w_o: np.ndarray,
    heads: int,
    allowed: np.ndarray,
) -> np.ndarray:
    """x_q + W_O (softmax over the allowed keys only of q.k / sqrt(d)) V, per head"""
    n, c = x_q.shape
    d = c // heads
    q = matmul_loops(x_q, w_q)
    k = matmul_loops(x_kv, w_k)
    v = matmul_loops(x_kv, w_v)
    merged = np.zeros((n, c))
    for head in range(heads):
        lo = head * d
        for i in range(n):
            keys = [j for j in range(x_kv.shape[0]) if allowed[i, j]]
            scores = []
            for j in keys:
                dot = 0.0
                for t in range(lo, lo + d):
                    dot += q[i, t] * k[j, t]
                scores.append(dot / math.sqrt(d))
            weights = softmax_naive(scores)
            for t in range(lo, lo + d):
                merged[i, t] = sum(wt * v[j, t] for wt, j in zip(weights, keys))
    return x_q + matmul_loops(merged, w_o)


def max_f_brute(pred: np.ndarray, gt: np.ndarray, beta_sq: float = 0.3, count: int = 256) -> float:
    positives = sum(1 for g in gt.ravel() if g == 1.0)
    best = 0.0
    for k in range(count):
        t = k / (count - 1)
        tp = fp = 0
        for p, g in zip(pred.ravel(), gt.ravel()):
            if p > t:
                if g == 1.0:
                    tp += 1
                else:
                    fp += 1
        if tp + fp == 0 or tp == 0:
            continue
        precision = tp / (tp + fp)
        recall = tp / positives
        best = max(best, (1 + beta_sq) * precision * recall / (beta_sq * precision + recall))
    return best
