"""Suite-level analysis over many sequences: pass proportions, the proportion
confidence interval and the uniformity of p-values."""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .battery import TEST_NAMES, TESTS, TestParams, TestResult, _as_bits, run_test
from .special import igamc


class SuiteError(ValueError):
    pass


def proportion_interval(n: int, alpha: float = 0.01) -> tuple[float, float]:
    """Center and half-width of the acceptable pass proportion for n sequences."""
    if n < 1:
        raise SuiteError("need at least one sequence")
    return 1.0 - alpha, 3.0 * math.sqrt(alpha * (1.0 - alpha) / n)


def uniformity_p(p_values) -> float:
    """Chi-square p-value of the p-value histogram over 10 equal bins."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        return float("nan")
    counts, _ = np.histogram(p, bins=10, range=(0.0, 1.0))
    expected = p.size / 10.0
    chi2 = float(np.sum((counts - expected) ** 2) / expected)
    return igamc(4.5, chi2 / 2.0)


@dataclass
class TestSummary:
    name: str
    title: str
    applicable_count: int
    subtests: tuple = ()
    proportion: Optional[float] = None
    min_subtest_proportion: Optional[float] = None
    strict_proportion: Optional[float] = None
    subtest_uniformity: tuple = ()
    worst_p: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    subtests_outside: int = 0

    __test__ = False

    @property
    def applicable(self) -> bool:
        return self.applicable_count > 0

    @property
    def passed(self) -> Optional[bool]:
        if not self.applicable:
            return None
        return self.lower <= self.proportion <= self.upper

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "title": self.title,
            "worst_p": self.worst_p,
            "proportion": self.proportion,
            "applicable_count": self.applicable_count,
            "passed": self.passed,
            "interval": None if self.lower is None else [self.lower, self.upper],
            "subtest_count": len(self.subtests),
            "min_subtest_proportion": self.min_subtest_proportion,
            "strict_proportion": self.strict_proportion,
            "subtests_outside_interval": self.subtests_outside,
        }


@dataclass
class SuiteReport:
    alpha: float
    sequence_count: int
    sequence_length: int
    tests: list[TestSummary]
    results: list[dict] = field(default_factory=list, repr=False)

    @property
    def interval(self) -> tuple[float, float]:
        return proportion_interval(self.sequence_count, self.alpha)

    @property
    def overall(self) -> bool:
        return all(t.passed for t in self.tests if t.applicable)

    def test(self, name: str) -> TestSummary:
        for t in self.tests:
            if t.name == name:
                return t
        raise KeyError(name)

    def to_dict(self) -> dict:
        c, hw = self.interval
        return {
            "per_test": [t.to_dict() for t in self.tests],
            "interval": {"center": c, "half_width": hw, "lower": c - hw, "upper": c + hw,
                         "sequences": self.sequence_count},
            "alpha": self.alpha,
            "sequence_length": self.sequence_length,
            "overall": "pass" if self.overall else "fail",
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def table(self) -> str:
        c, hw = self.interval
        lines = [f"{'No.':>3}  {'Statistical test':<36} {'P-value':>10}  {'Proportion':>10}  Result",
                 "-" * 72]
        for i, t in enumerate(self.tests, 1):
            if not t.applicable:
                lines.append(f"{i:>3}  {t.title:<36} {'n/a':>10}  {'n/a':>10}  not applicable")
                continue
            verdict = "Success" if t.passed else "Failure"
            lines.append(f"{i:>3}  {t.title:<36} {t.worst_p:>10.6f}  {t.proportion:>10.4f}  {verdict}")
        lines.append("-" * 72)
        lines.append(f"sequences = {self.sequence_count} x {self.sequence_length} bits, "
                     f"alpha = {self.alpha}, proportion interval {c:.2f} +/- {hw:.7f}")
        lines.append(f"overall: {'PASS' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _run_all(args) -> dict:
    bits, params, names = args
    return {name: run_test(name, bits, params) for name in names}


def _summarize(name: str, results: list[TestResult], alpha: float) -> TestSummary:
    title = TESTS[name][0]
    ok = [r for r in results if r.applicable]
    if not ok:
        return TestSummary(name, title, 0)
    labels = ok[0].labels
    P = np.array([r.p_values for r in ok], dtype=np.float64)  # sequences x sub-tests
    passes = P >= alpha
    per_sub = passes.mean(axis=0)
    c, hw = proportion_interval(len(ok), alpha)
    lo, hi = c - hw, c + hw
    unif = tuple(uniformity_p(P[:, j]) for j in range(P.shape[1]))
    return TestSummary(
        name=name, title=title, applicable_count=len(ok), subtests=labels,
        # every (sequence, sub-test) p-value counts as one trial
        proportion=float(per_sub.mean()),
        min_subtest_proportion=float(per_sub.min()),
        strict_proportion=float(passes.all(axis=1).mean()),
        subtest_uniformity=unif,
        worst_p=float(min(unif)),
        lower=lo, upper=hi,
        subtests_outside=int(np.count_nonzero((per_sub < lo) | (per_sub > hi))),
    )


def run_suite(sequences: Sequence, params: TestParams = TestParams(),
              workers: Optional[int] = None, tests: Sequence[str] = TEST_NAMES) -> SuiteReport:
    """Run the battery on every sequence and aggregate.

    Sequences run in a process pool when ``workers`` (default: CPU count)
    exceeds one; results do not depend on the worker count.
    """
    seqs = [_as_bits(s) for s in sequences]
    if len(seqs) < 2:
        raise SuiteError("run_suite needs at least 2 sequences")
    lengths = {s.size for s in seqs}
    if len(lengths) != 1:
        raise SuiteError(f"sequences have mixed lengths {sorted(lengths)}")
    for name in tests:
        if name not in TESTS:
            raise KeyError(f"unknown test {name!r}")
    if workers is None:
        workers = os.cpu_count() or 1
    jobs = [(s, params, tuple(tests)) for s in seqs]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            results = list(pool.map(_run_all, jobs))
    else:
        results = [_run_all(j) for j in jobs]
    summaries = [_summarize(name, [r[name] for r in results], params.alpha) for name in tests]
    return SuiteReport(alpha=params.alpha, sequence_count=len(seqs),
                       sequence_length=lengths.pop(), tests=summaries, results=results)
