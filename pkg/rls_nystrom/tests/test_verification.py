"""
Tests for the verification suite.
"""

import os
import unittest
from unittest.mock import patch

from rls_nystrom.core.exceptions import NumericalError, VerificationError
from rls_nystrom.performance import verification
from rls_nystrom.performance.verification import (
    CheckResult,
    Tier,
    VerificationReport,
    check_accelerated,
    check_deff_identity,
    check_determinism,
    check_full_sample_scores,
    check_method_ordering,
    check_regression,
    check_tail_lambda_bound,
    run_verification,
)

SLOW_TESTS = bool(os.environ.get("RLSN_SLOW_TESTS"))


class TestReport(unittest.TestCase):
    """Tests for the verification report."""

    def test_passed_report(self):
        """Test a report whose checks all pass."""
        report = VerificationReport(Tier.QUICK, 0, [CheckResult("a", True, "ok")])
        self.assertTrue(report.passed)
        report.raise_for_failure()
        self.assertEqual(report.to_dict()["tier"], "quick")

    def test_failed_report_raises(self):
        """Test that a failure raises with the check name."""
        report = VerificationReport(Tier.FULL, 1, [CheckResult("a", True, "ok"), CheckResult("b", False, "bad")])
        self.assertFalse(report.passed)
        with self.assertRaises(VerificationError) as ctx:
            report.raise_for_failure()
        self.assertIn("b", str(ctx.exception))
        self.assertEqual(ctx.exception.exit_code, 4)

    def test_raising_check_counts_as_failure(self):
        """Test that an exception inside a check is recorded, not propagated."""
        def broken(tier, seed):
            raise NumericalError("boom")

        def fine(tier, seed):
            return CheckResult("fine", True, "ok")

        with patch.dict(verification.QUICK_CHECKS, {"broken": broken, "fine": fine}, clear=True):
            report = run_verification(Tier.QUICK, seed=2)
        self.assertEqual([check.name for check in report.checks], ["broken", "fine"])
        self.assertFalse(report.checks[0].passed)
        self.assertIn("NumericalError", report.checks[0].detail)
        self.assertTrue(report.checks[1].passed)


class TestChecks(unittest.TestCase):
    """Quick-tier checks cheap enough for every test run."""

    def test_full_sample_scores(self):
        """Test the full-sample score identity."""
        self.assertTrue(check_full_sample_scores(Tier.QUICK, 0).passed)

    def test_deff_identity(self):
        """Test deff equals the score sum."""
        self.assertTrue(check_deff_identity(Tier.QUICK, 0).passed)

    def test_tail_lambda_bound(self):
        """Test the effective dimension bound at the tail-average lambda."""
        self.assertTrue(check_tail_lambda_bound(Tier.QUICK, 0).passed)

    def test_regression(self):
        """Test full-sample regression and eigenvalue monotonicity."""
        result = check_regression(Tier.QUICK, 0)
        self.assertTrue(result.passed, msg=result.detail)

    def test_determinism(self):
        """Test bit-identical reruns."""
        self.assertTrue(check_determinism(Tier.QUICK, 3).passed)

    @unittest.skipUnless(SLOW_TESTS, "set RLSN_SLOW_TESTS=1 to run")
    def test_method_ordering_full_tier(self):
        """Test RLS < uniform < RFF in median error, with RLS at least 2x better than uniform at s = 50."""
        result = check_method_ordering(Tier.FULL, 0)
        self.assertTrue(result.passed, msg=result.detail)

    @unittest.skipUnless(SLOW_TESTS, "set RLSN_SLOW_TESTS=1 to run")
    def test_accelerated_full_tier(self):
        """Test at least 2x fewer kernel evaluations and at most 50% more error at n = 16000, s = 400."""
        result = check_accelerated(Tier.FULL, 0)
        self.assertTrue(result.passed, msg=result.detail)

    @unittest.skipUnless(SLOW_TESTS, "set RLSN_SLOW_TESTS=1 to run the whole quick tier")
    def test_quick_tier(self):
        """Test that the whole quick tier passes."""
        report = run_verification(Tier.QUICK, seed=0)
        self.assertTrue(report.passed, msg=report.to_dict())


if __name__ == '__main__':
    unittest.main()
