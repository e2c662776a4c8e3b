"""
Runs every vectorised op against its loop reference and reports the worst discrepancy
"""
from typing import Callable, List

import numpy as np

from hct_sod.models.grids import TokenGrid
from hct_sod.models.reports import OracleResult
from hct_sod.services.evaluation.metrics import max_f
from hct_sod.services.network.attention import AttentionParams, build_local_mask, lca_exchange
from hct_sod.services.numerics import ops
from hct_sod.services.numerics.tensor import Tensor
from hct_sod.services.oracles import reference
from hct_sod.utilities.logger import setup_logger

logger = setup_logger()

TIGHT = 1e-12


def _matmul(rng: np.random.Generator) -> OracleResult:
    errs = []
    for m, k, n in ((5, 4, 3), (1, 2, 1), (7, 7, 2)):
        a, b = rng.normal(size=(m, k)), rng.normal(size=(k, n))
        got = ops.matmul(Tensor(a), Tensor(b)).data
        errs.append(np.abs(got - reference.matmul_loops(a, b)).max())
    return OracleResult(name="matmul", max_abs_err=float(max(errs)), tolerance=TIGHT, cases=len(errs))


def _conv2d(rng: np.random.Generator) -> OracleResult:
    errs = []
    for h, w, cin, cout, k in ((5, 4, 2, 3, 3), (3, 3, 1, 1, 1), (4, 6, 3, 2, 3)):
        x = rng.normal(size=(h, w, cin))
        wt = rng.normal(size=(k, k, cin, cout))
        b = rng.normal(size=cout)
        got = ops.conv2d(Tensor(x), Tensor(wt), Tensor(b)).data
        errs.append(np.abs(got - reference.conv2d_loops(x, wt, b)).max())
    return OracleResult(name="conv2d", max_abs_err=float(max(errs)), tolerance=TIGHT, cases=len(errs))


def _softmax(rng: np.random.Generator) -> OracleResult:
    m = rng.normal(size=(6, 5)) * 3.0
    got = ops.softmax_rows(Tensor(m)).data
    ref = np.array([reference.softmax_naive(row) for row in m])
    return OracleResult(name="softmax_rows", max_abs_err=float(np.abs(got - ref).max()), tolerance=1e-14,
                        cases=m.shape[0])


def _bce(rng: np.random.Generator) -> OracleResult:
    logits = rng.uniform(-20.0, 20.0, size=(4, 4))
    targets = rng.uniform(0.0, 1.0, size=(4, 4))
    got = ops.stable_bce(Tensor(logits), targets).item()
    ref = sum(reference.bce_naive(x, y) for x, y in zip(logits.ravel(), targets.ravel())) / logits.size
    return OracleResult(name="stable_bce", max_abs_err=abs(got - ref), tolerance=1e-10)


def _bilinear(rng: np.random.Generator) -> OracleResult:
    errs = []
    for h, w, nh, nw in ((2, 2, 4, 4), (3, 5, 6, 10), (4, 4, 3, 7)):
        grid = rng.normal(size=(h, w, 2))
        got = ops.bilinear_resize(Tensor(grid), nh, nw).data
        errs.append(np.abs(got - reference.bilinear_pixel(grid, nh, nw)).max())
    return OracleResult(name="bilinear_resize", max_abs_err=float(max(errs)), tolerance=TIGHT, cases=len(errs))


def _mask(rng: np.random.Generator) -> OracleResult:
    mismatches = 0
    cases = 0
    for h in range(1, 7):
        for w in range(1, 7):
            for radius in range(0, 4):
                allowed = build_local_mask(h, w, radius).allowed()
                mismatches += int(np.count_nonzero(allowed != reference.chebyshev_allowed(h, w, radius)))
                cases += 1
    return OracleResult(name="local_mask", max_abs_err=float(mismatches), tolerance=0.0, cases=cases)


def _random_params(rng: np.random.Generator, c: int, heads: int) -> AttentionParams:
    def unit():
        return Tensor(rng.uniform(-1.0, 1.0, size=(c, c)) / np.sqrt(c))
    return AttentionParams(w_q=unit(), w_k=unit(), w_v=unit(), w_o=unit(), heads=heads)


def _lca(rng: np.random.Generator) -> OracleResult:
    worst = 0.0
    cases = 0
    c, heads = 4, 2
    for side in range(1, 5):
        for radius in (0, 1, 2):
            x_r = rng.normal(size=(side * side, c))
            x_d = rng.normal(size=(side * side, c))
            p_r, p_d = _random_params(rng, c, heads), _random_params(rng, c, heads)
            mask = build_local_mask(side, side, radius)
            y_r, y_d = lca_exchange(
                TokenGrid(side, side, Tensor(x_r)), TokenGrid(side, side, Tensor(x_d)), mask, p_r, p_d
            )
            allowed = reference.chebyshev_allowed(side, side, radius)
            ref_r = reference.restricted_cross_attention(
                x_r, x_d, p_r.w_q.data, p_d.w_k.data, p_d.w_v.data, p_r.w_o.data, heads, allowed)
            ref_d = reference.restricted_cross_attention(
                x_d, x_r, p_d.w_q.data, p_r.w_k.data, p_r.w_v.data, p_d.w_o.data, heads, allowed)
            worst = max(worst, np.abs(y_r.tokens.data - ref_r).max(), np.abs(y_d.tokens.data - ref_d).max())
            cases += 1
    return OracleResult(name="lca_restricted_softmax", max_abs_err=float(worst), tolerance=TIGHT, cases=cases)


def _max_f(rng: np.random.Generator) -> OracleResult:
    worst = 0.0
    for _ in range(5):
        gt = (rng.random((6, 6)) < 0.4).astype(np.float64)
        gt[0, 0] = 1.0
        pred = np.round(rng.random((6, 6)) * 255.0) / 255.0
        got, _ = max_f(pred, gt)
        worst = max(worst, abs(got - reference.max_f_brute(pred, gt)))
    return OracleResult(name="max_f_sweep", max_abs_err=float(worst), tolerance=TIGHT, cases=5)


ORACLES: List[Callable[[np.random.Generator], OracleResult]] = [
    _matmul, _conv2d, _softmax, _bce, _bilinear, _mask, _lca, _max_f,
]


def run_oracle_suite(seed: int = 0) -> List[OracleResult]:
    rng = np.random.default_rng(seed)
    results = []
    for oracle in ORACLES:
        result = oracle(rng)
        if not result.passed:
            logger.error(f"Oracle {result.name} mismatch: {result.max_abs_err:.3e} > {result.tolerance:.1e}")
        results.append(result)
    return results
