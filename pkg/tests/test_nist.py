import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vcselrng import _purepy
from vcselrng._backend import kernels
from vcselrng.nist import (
    TEST_NAMES, SuiteError, TestParams, berlekamp_massey, erfc, igam, igamc,
    proportion_interval, run_suite, run_test, uniformity_p,
)
from vcselrng.nist import battery as B

from conftest import DATA


def bits_of(s):
    return np.array([int(c) for c in s], dtype=np.uint8)


# -- special functions -------------------------------------------------------

ORACLE = json.loads((DATA / "special_oracle.json").read_text())


@pytest.mark.parametrize("a, x, expect", ORACLE["igamc"])
def test_igamc_oracle(a, x, expect):
    assert igamc(a, x) == pytest.approx(float(expect), rel=1e-10)


@pytest.mark.parametrize("a, x, expect", ORACLE["igam"])
def test_igam_oracle(a, x, expect):
    assert igam(a, x) == pytest.approx(float(expect), rel=1e-10)


@pytest.mark.parametrize("x, expect", ORACLE["erfc"])
def test_erfc_oracle(x, expect):
    assert erfc(x) == pytest.approx(float(expect), rel=1e-10)


@given(st.floats(0.1, 500), st.floats(0, 800))
def test_igam_complement(a, x):
    assert igam(a, x) + igamc(a, x) == pytest.approx(1.0, abs=1e-12)


def test_igamc_domain():
    assert igamc(2.0, 0.0) == 1.0
    with pytest.raises(ValueError):
        igamc(0.0, 1.0)


# -- hand examples -------------------------------------------------------------

def test_monobit_example():
    r = run_test("monobit_frequency", bits_of("1011010101"))
    assert r.p_values[0] == pytest.approx(0.527089, rel=1e-6)
    assert r.p_values[0] == pytest.approx(math.erfc(2 / math.sqrt(10) / math.sqrt(2)), rel=1e-14)


def test_runs_example():
    r = run_test("runs", bits_of("1001101011"))
    expect = math.erfc(abs(7 - 2 * 10 * 0.6 * 0.4) / (2 * math.sqrt(20) * 0.6 * 0.4))
    assert r.p_values[0] == pytest.approx(expect, rel=1e-14)
    assert r.p_values[0] == pytest.approx(0.147232, rel=1e-5)


def test_all_ones_fails_monobit():
    r = run_test("monobit_frequency", np.ones(100, dtype=np.uint8))
    assert r.p_values[0] < 1e-22 and r.passed() is False


def test_runs_prerequisite():
    r = run_test("runs", np.array([1] * 80 + [0] * 20, dtype=np.uint8))
    assert r.p_values == (0.0,)


# Worked examples of the standard (its section 2 examples; 100-bit inputs).
EPS100 = ("11001001000011111101101010100010001000010110100011"
          "00001000110100110001001100011001100010100010111000")


@pytest.mark.parametrize("name, params, expect", [
    ("monobit_frequency", TestParams(), [0.109599]),
    ("runs", TestParams(), [0.500798]),
    ("cumulative_sums", TestParams(), [0.219194, 0.114866]),
])
def test_standard_worked_examples(name, params, expect):
    r = run_test(name, bits_of(EPS100), params)
    assert r.p_values == pytest.approx(expect, abs=2e-6)


def test_block_frequency_statistic():
    # the worked example uses M = 10, below the validity floor enforced by run_test
    assert B._block_frequency_p(bits_of(EPS100), 10) == pytest.approx(0.706438, abs=2e-6)
    assert not run_test("block_frequency", bits_of(EPS100),
                        TestParams(block_frequency_m=10)).applicable


def test_serial_and_apen_small_examples():
    eps = bits_of("0011011101")
    r = run_test("serial", eps, TestParams(serial_m=3))
    assert not r.applicable
    # direct statistics on the 10-bit example, bypassing length validity
    w = B._windows(eps, 3, wrap=True)
    psi = [B._psi2(w >> k, 3 - k, 10) for k in range(3)]
    assert psi == pytest.approx([2.8, 1.2, 0.4])
    d1, d2 = psi[0] - psi[1], psi[0] - 2 * psi[1] + psi[2]
    assert igamc(2.0, d1 / 2) == pytest.approx(0.808792, abs=1e-6)
    assert igamc(1.0, d2 / 2) == pytest.approx(0.670320, abs=1e-6)

    eps = bits_of("0100110101")
    w = B._windows(eps, 4, wrap=True)
    apen = B._phi(w >> 1, 3, 10) - B._phi(w, 4, 10)
    chi2 = 2 * 10 * (math.log(2) - apen)
    assert chi2 == pytest.approx(10.043859, abs=1e-5)
    assert igamc(4.0, chi2 / 2) == pytest.approx(0.261961, abs=1e-6)


# -- Berlekamp-Massey ------------------------------------------------------------

def lfsr_oracle(n):
    """Shortest LFSR length for every n-bit sequence (index = MSB-first value)."""
    best = np.full(1 << n, n, dtype=np.int64)
    best[0] = 0
    powers = 1 << np.arange(n - 1, -1, -1)
    for L in range(1, n):
        inits = ((np.arange(1 << L)[:, None] >> np.arange(L - 1, -1, -1)) & 1).astype(np.int64)
        for c in range(1 << L):
            taps = [(c >> (j - 1)) & 1 for j in range(1, L + 1)]
            seq = np.zeros((1 << L, n), dtype=np.int64)
            seq[:, :L] = inits
            for i in range(L, n):
                acc = np.zeros(1 << L, dtype=np.int64)
                for j in range(1, L + 1):
                    if taps[j - 1]:
                        acc ^= seq[:, i - j]
                seq[:, i] = acc
            vals = seq @ powers
            np.minimum.at(best, vals, L)
    return best


@pytest.mark.parametrize("n", range(1, 13))
def test_berlekamp_massey_exhaustive(n):
    oracle = lfsr_oracle(n)
    seqs = ((np.arange(1 << n)[:, None] >> np.arange(n - 1, -1, -1)) & 1).astype(np.uint8)
    assert np.array_equal(np.asarray(kernels.bm_blocks(seqs)), oracle)
    assert np.array_equal(np.asarray(_purepy.bm_blocks(seqs)), oracle)
    if n <= 8:
        assert [berlekamp_massey(s) for s in seqs] == oracle.tolist()


def test_berlekamp_massey_examples():
    assert berlekamp_massey([0] * 20) == 0
    assert berlekamp_massey([0] * 19 + [1]) == 20
    assert berlekamp_massey(bits_of("1101011110001")) == 4


# -- validity ------------------------------------------------------------------

def test_not_applicable_marker(rng):
    short = rng.integers(0, 2, 1000, dtype=np.uint8)
    for name in ("universal_maurer", "binary_matrix_rank", "linear_complexity",
                 "random_excursions"):
        r = run_test(name, short)
        assert not r.applicable and r.reason and r.worst_p is None and r.passed() is None


def test_unknown_test():
    with pytest.raises(KeyError):
        run_test("dieharder", np.zeros(10, dtype=np.uint8))


def test_aperiodic_templates():
    assert len(B.aperiodic_templates(9)) == 148
    assert len(B.aperiodic_templates(2)) == 2


def test_probability_tables():
    assert B.rank_probability(32) == pytest.approx(0.2888, abs=1e-4)
    assert B.rank_probability(31) == pytest.approx(0.5776, abs=1e-4)
    pi = B.overlapping_probabilities(9, 1032)
    assert pi == pytest.approx([0.364091, 0.185659, 0.139381, 0.100571, 0.070432, 0.139865],
                               abs=2e-6)
    assert B.excursion_probabilities(1) == pytest.approx(
        [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125])


@pytest.mark.parametrize("m, M", [(1, 6), (2, 9), (3, 12), (4, 14)])
def test_overlapping_probabilities_enumeration(m, M):
    counts = np.zeros(6)
    for v in range(1 << M):
        s = format(v, f"0{M}b")
        hits = sum(s[i:i + m] == "1" * m for i in range(M - m + 1))
        counts[min(hits, 5)] += 1
    assert B.overlapping_probabilities(m, M) == pytest.approx(counts / 2 ** M, abs=1e-14)


def test_gf2_rank_matches_bruteforce(rng):
    def rank(rows, width):
        rows = [int(r) for r in rows]
        r = 0
        for bit in reversed(range(width)):
            piv = next((i for i in range(r, len(rows)) if rows[i] >> bit & 1), None)
            if piv is None:
                continue
            rows[r], rows[piv] = rows[piv], rows[r]
            for i in range(len(rows)):
                if i != r and rows[i] >> bit & 1:
                    rows[i] ^= rows[r]
            r += 1
        return r
    mats = rng.integers(0, 2 ** 8, size=(300, 8))
    mats[:50, 4:] = mats[:50, :4]  # force deficient ranks
    got = B.gf2_rank(mats.astype(np.uint64), 8)
    assert got.tolist() == [rank(m, 8) for m in mats]


# -- properties ------------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_p_values_in_unit_interval(seed):
    b = np.random.default_rng(seed).integers(0, 2, 20000, dtype=np.uint8)
    params = TestParams.for_length(b.size)
    for name in TEST_NAMES:
        r = run_test(name, b, params)
        assert all(0.0 <= p <= 1.0 for p in r.p_values)


SYMMETRIC = ("monobit_frequency", "runs", "spectral_dft", "serial", "approximate_entropy")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.3, 0.7))
def test_complement_symmetry(seed, p1):
    b = (np.random.default_rng(seed).random(20000) < p1).astype(np.uint8)
    params = TestParams.for_length(b.size)
    for name in SYMMETRIC:
        a = run_test(name, b, params).p_values
        c = run_test(name, 1 - b, params).p_values
        assert a == pytest.approx(c, rel=1e-9, abs=1e-300)


def test_linear_complexity_not_complement_invariant():
    # complementing adds the all-ones sequence, whose linear complexity is 1
    assert berlekamp_massey([0] * 8) != berlekamp_massey([1] * 8)


@pytest.mark.slow
def test_uniformity_on_seeded_input():
    rng = np.random.default_rng(2718)
    n = 100_000
    params = TestParams.for_length(n)
    ps = {k: [] for k in TEST_NAMES}
    for _ in range(1000):
        b = rng.integers(0, 2, n, dtype=np.uint8)
        for k in TEST_NAMES:
            r = run_test(k, b, params)
            if r.applicable:
                ps[k].append(r.p_values)
    checked = 0
    for k, rows in ps.items():
        if len(rows) < 100:
            continue
        P = np.array(rows)
        for j in range(P.shape[1]):
            assert uniformity_p(P[:, j]) > 1e-4, (k, j)
        checked += 1
    assert checked >= 11


# -- suite -----------------------------------------------------------------------

def test_interval_examples():
    c, hw = proportion_interval(1000)
    assert c == 0.99
    assert hw == pytest.approx(0.0094392, abs=1e-7)
    assert proportion_interval(100)[1] == pytest.approx(0.0298496, abs=1e-7)


def test_uniformity_p():
    assert uniformity_p(np.linspace(0.005, 0.995, 100)) == pytest.approx(1.0)
    assert uniformity_p(np.full(100, 0.05)) < 1e-10


def test_suite_errors(rng):
    with pytest.raises(SuiteError):
        run_suite([rng.integers(0, 2, 1000, dtype=np.uint8)])
    with pytest.raises(SuiteError):
        run_suite([np.zeros(1000, np.uint8), np.zeros(999, np.uint8)])


def test_suite_worst_p_and_applicability(rng):
    seqs = [rng.integers(0, 2, 20000, dtype=np.uint8) for _ in range(12)]
    rep = run_suite(seqs, TestParams.for_length(20000), workers=1)
    assert not rep.test("universal_maurer").applicable
    s = rep.test("cumulative_sums")
    assert s.applicable_count == 12
    assert s.worst_p == min(s.subtest_uniformity)
    d = rep.to_dict()
    assert {"per_test", "interval", "overall"} <= set(d)
    assert all({"name", "worst_p", "proportion", "applicable_count"} <= set(t)
               for t in d["per_test"])
    assert "Cumulative Sums" in rep.table()
    for res in rep.results:
        r = res["non_overlapping_template"]
        assert r.worst_p == min(r.p_values) and len(r.p_values) == 148


def test_suite_rejects_biased(rng):
    seqs = [(rng.random(20000) < 0.6).astype(np.uint8) for _ in range(10)]
    assert not run_suite(seqs, TestParams.for_length(20000), workers=1).overall


def test_suite_parallel_matches_serial(rng):
    seqs = [rng.integers(0, 2, 5000, dtype=np.uint8) for _ in range(4)]
    params = TestParams.for_length(5000)
    a = run_suite(seqs, params, workers=1).to_dict()
    b = run_suite(seqs, params, workers=2).to_dict()
    assert a == b
