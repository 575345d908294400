"""SP 800-22 rev 1a statistical test battery."""

from .battery import (
    TEST_NAMES,
    TESTS,
    NotApplicable,
    TestParams,
    TestResult,
    berlekamp_massey,
    run_test,
)
from .special import erfc, igam, igamc
from .suite import SuiteError, SuiteReport, TestSummary, proportion_interval, run_suite, uniformity_p

__all__ = [
    "TEST_NAMES", "TESTS", "NotApplicable", "TestParams", "TestResult", "berlekamp_massey",
    "run_test", "erfc", "igam", "igamc", "SuiteError", "SuiteReport", "TestSummary",
    "proportion_interval", "run_suite", "uniformity_p",
]
