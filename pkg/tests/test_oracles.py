"""
The brute-force oracle suite must agree with the vectorised ops
"""
import numpy as np
import pytest

from hct_sod.models.reports import OracleResult
from hct_sod.services.oracles import reference
from hct_sod.services.oracles.suite import ORACLES, run_oracle_suite


class TestOracleSuite:
    @pytest.mark.parametrize("seed", [0, 1])
    def test_all_pass(self, seed):
        results = run_oracle_suite(seed)
        assert len(results) == len(ORACLES)
        failing = [(r.name, r.max_abs_err) for r in results if not r.passed]
        assert failing == []

    def test_names_are_unique(self):
        names = [r.name for r in run_oracle_suite(0)]
        assert len(set(names)) == len(names)

    def test_result_threshold(self):
        assert OracleResult(name="x", max_abs_err=1e-13, tolerance=1e-12).passed
        assert not OracleResult(name="x", max_abs_err=2e-12, tolerance=1e-12).passed


class TestReferences:
    def test_softmax_naive(self):
        np.testing.assert_allclose(reference.softmax_naive([0.0, np.log(3.0)]), [0.25, 0.75])

    def test_bce_naive_large_logit(self):
        np.testing.assert_allclose(reference.bce_naive(-30.0, 1.0), 30.0)

    def test_chebyshev_radius_zero_is_identity(self):
        np.testing.assert_array_equal(reference.chebyshev_allowed(3, 2, 0), np.eye(6, dtype=bool))
