"""The fifteen SP 800-22 rev 1a statistical tests.

Each test takes a 0/1 ``uint8`` array and returns ``(labels, p_values)``;
tests with a single statistic return one-element lists.  A test raises
:class:`NotApplicable` when the sequence is too short for the configured
parameters; that is a distinct outcome from failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.special import ndtr

from .._backend import kernels
from .special import erfc, igamc


class NotApplicable(Exception):
    """Sequence length or parameters outside the test's validity range."""


@dataclass(frozen=True)
class TestParams:
    alpha: float = 0.01
    block_frequency_m: int = 128
    template_m: int = 9
    template_blocks: int = 8
    overlapping_m: int = 9
    overlapping_block: int = 1032
    universal_L: Optional[int] = 7  # None: choose from the sequence length
    universal_Q: Optional[int] = 1280  # None: 10 * 2**L
    linear_complexity_m: int = 500
    serial_m: int = 16
    apen_m: int = 10
    excursion_min_cycles: int = 500

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def for_length(cls, n: int, alpha: float = 0.01) -> "TestParams":
        """Recommended parameters for ``n``-bit sequences."""
        log2n = int(math.floor(math.log2(n)))
        return cls(
            alpha=alpha,
            block_frequency_m=128 if n >= 12800 else max(20, n // 100 + 1),
            universal_L=None,
            universal_Q=None,
            serial_m=max(2, min(16, log2n - 3)),
            apen_m=max(1, min(10, log2n - 6)),
        )


@dataclass
class TestResult:
    name: str
    p_values: tuple = ()
    labels: tuple = ()
    applicable: bool = True
    reason: str = ""

    __test__ = False

    @property
    def worst_p(self) -> Optional[float]:
        """Smallest p-value of the test (the number reported for multi-p tests)."""
        return min(self.p_values) if self.applicable and self.p_values else None

    def passed(self, alpha: float = 0.01) -> Optional[bool]:
        if not self.applicable:
            return None
        return all(p >= alpha for p in self.p_values)


def _as_bits(bits) -> np.ndarray:
    if hasattr(bits, "bits") and callable(bits.bits):
        bits = bits.bits()
    b = np.asarray(bits, dtype=np.uint8)
    if b.ndim != 1:
        raise ValueError("bit sequence must be one-dimensional")
    return b


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise NotApplicable(message)


def _windows(bits: np.ndarray, m: int, wrap: bool) -> np.ndarray:
    """Integer value (MSB first) of every length-m window.

    With ``wrap`` the sequence is extended by its first m-1 bits so there is
    one window per position; otherwise there are n-m+1 windows.
    """
    b = np.concatenate([bits, bits[: m - 1]]) if wrap else bits
    count = b.size - m + 1
    w = np.zeros(count, dtype=np.int64)
    for k in range(m):
        w = (w << 1) | b[k:k + count]
    return w


# -- 1 ---------------------------------------------------------------------

def monobit_frequency(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    _require(n >= 2, "frequency test needs at least 2 bits")
    s = 2 * int(np.count_nonzero(b)) - n
    s_obs = abs(s) / math.sqrt(n)
    return ["frequency"], [erfc(s_obs / math.sqrt(2.0))]


# -- 2 ---------------------------------------------------------------------

def block_frequency(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    M = params.block_frequency_m
    n = b.size
    N = n // M
    _require(M >= 20 and N >= 1 and n >= 100,
             f"block frequency needs n >= 100 and M >= 20 (n = {n}, M = {M})")
    return ["block_frequency"], [_block_frequency_p(b, M)]


def _block_frequency_p(b: np.ndarray, M: int) -> float:
    N = b.size // M
    pi = b[: N * M].reshape(N, M).sum(axis=1, dtype=np.int64) / M
    chi2 = 4.0 * M * float(np.sum((pi - 0.5) ** 2))
    return igamc(N / 2.0, chi2 / 2.0)


# -- 3 ---------------------------------------------------------------------

def runs(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    _require(n >= 2, "runs test needs at least 2 bits")
    pi = np.count_nonzero(b) / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        # frequency prerequisite failed; the test is not run and scores 0
        return ["runs"], [0.0]
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return ["runs"], [erfc(num / den)]


# -- 4 ---------------------------------------------------------------------

_LONGEST_RUN_TABLES = (
    # (min n, block M, lowest category, pi for categories <=lo, ..., >=hi)
    (750000, 10000, 10, (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6272, 128, 4, (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, 1, (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_runs(blocks: np.ndarray) -> np.ndarray:
    N, M = blocks.shape
    padded = np.zeros((N, M + 2), dtype=np.int8)
    padded[:, 1:-1] = blocks
    d = np.diff(padded.ravel())
    starts = np.nonzero(d == 1)[0]
    ends = np.nonzero(d == -1)[0]
    longest = np.zeros(N, dtype=np.int64)
    np.maximum.at(longest, starts // (M + 2), ends - starts)
    return longest


def longest_run_of_ones(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    _require(n >= 128, "longest-run test needs at least 128 bits")
    for min_n, M, lo, pi in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    K = len(pi) - 1
    N = n // M
    longest = _longest_runs(b[: N * M].reshape(N, M))
    v = np.bincount(np.clip(longest, lo, lo + K) - lo, minlength=K + 1)
    expected = N * np.asarray(pi)
    chi2 = float(np.sum((v - expected) ** 2 / expected))
    return ["longest_run"], [igamc(K / 2.0, chi2 / 2.0)]


# -- 5 ---------------------------------------------------------------------

def rank_probability(r: int, M: int = 32, Q: int = 32) -> float:
    """Probability that a random M x Q GF(2) matrix has rank r."""
    if r == 0:
        return 2.0 ** (-M * Q)
    prod = 1.0
    for i in range(r):
        prod *= (1.0 - 2.0 ** (i - Q)) * (1.0 - 2.0 ** (i - M)) / (1.0 - 2.0 ** (i - r))
    return 2.0 ** (r * (Q + M - r) - M * Q) * prod


def gf2_rank(rows: np.ndarray, width: int) -> np.ndarray:
    """Rank of each matrix; ``rows`` is (count, height) of row bit masks."""
    A = np.array(rows, dtype=np.uint64)
    count, height = A.shape
    rank = np.zeros(count, dtype=np.int64)
    ar = np.arange(count)
    ridx = np.arange(height)[None, :]
    for col in range(width):
        bit = np.uint64(1) << np.uint64(width - 1 - col)
        has = (A & bit) != 0
        eligible = has & (ridx >= rank[:, None])
        found = eligible.any(axis=1)
        if not found.any():
            continue
        piv = np.argmax(eligible, axis=1)
        # move pivot row to position `rank`
        f = ar[found]
        pr, rr = piv[found], rank[found]
        prow = A[f, pr].copy()
        A[f, pr] = A[f, rr]
        A[f, rr] = prow
        has = (A & bit) != 0
        mask = has[f]
        mask[np.arange(f.size), rr] = False
        A[f] ^= np.where(mask, prow[:, None], np.uint64(0))
        rank[f] += 1
    return rank


def binary_matrix_rank(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    M = Q = 32
    N = b.size // (M * Q)
    _require(N >= 38, f"matrix rank test needs >= 38 matrices ({b.size} bits give {N})")
    mats = b[: N * M * Q].reshape(N, M, Q).astype(np.uint64)
    weights = np.uint64(1) << np.arange(Q - 1, -1, -1, dtype=np.uint64)
    rows = (mats * weights).sum(axis=2, dtype=np.uint64)
    ranks = gf2_rank(rows, Q)
    f_full = int(np.count_nonzero(ranks == M))
    f_less = int(np.count_nonzero(ranks == M - 1))
    rest = N - f_full - f_less
    p_full = rank_probability(M, M, Q)
    p_less = rank_probability(M - 1, M, Q)
    p_rest = 1.0 - p_full - p_less
    chi2 = ((f_full - N * p_full) ** 2 / (N * p_full)
            + (f_less - N * p_less) ** 2 / (N * p_less)
            + (rest - N * p_rest) ** 2 / (N * p_rest))
    return ["rank"], [math.exp(-chi2 / 2.0)]


# -- 6 ---------------------------------------------------------------------

def spectral_dft(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    _require(n >= 1000, "spectral test needs at least 1000 bits")
    x = 2.0 * b - 1.0
    mod = np.abs(np.fft.rfft(x))[: n // 2]
    T = math.sqrt(math.log(1.0 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = float(np.count_nonzero(mod < T))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return ["dft"], [erfc(abs(d) / math.sqrt(2.0))]


# -- 7 ---------------------------------------------------------------------

@lru_cache(maxsize=None)
def aperiodic_templates(m: int) -> tuple:
    """All m-bit patterns that cannot overlap a shifted copy of themselves,
    in increasing numeric order (MSB first)."""
    out = []
    for v in range(1 << m):
        s = format(v, f"0{m}b")
        if all(s[k:] != s[: m - k] for k in range(1, m)):
            out.append(v)
    return tuple(out)


def non_overlapping_template(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    m, N = params.template_m, params.template_blocks
    n = b.size
    M = n // N
    _require(2 <= m <= 21 and 1 <= N <= 100 and M > m,
             f"template test needs 2 <= m <= 21, N <= 100 and blocks longer than m")
    _require(M >= 2 ** m, f"block length {M} too short for m = {m} templates")
    templates = np.asarray(aperiodic_templates(m), dtype=np.int64)
    w = _windows(b[: N * M], m, wrap=False)
    counts = np.empty((N, templates.size), dtype=np.int64)
    for j in range(N):
        # an aperiodic template never overlaps itself, so counting every
        # match equals the scan that skips m bits after each hit
        c = np.bincount(w[j * M: j * M + M - m + 1], minlength=1 << m)
        counts[j] = c[templates]
    mu = (M - m + 1) / 2.0 ** m
    var = M * (1.0 / 2.0 ** m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    chi2 = ((counts - mu) ** 2).sum(axis=0) / var
    labels = [format(int(t), f"0{m}b") for t in templates]
    return labels, [igamc(N / 2.0, c / 2.0) for c in chi2]


# -- 8 ---------------------------------------------------------------------

def overlapping_probabilities(m: int, M: int, K: int = 5) -> np.ndarray:
    """Exact probabilities of 0..K-1 and >= K overlapping all-ones m-bit
    matches in a random M-bit block.

    Dynamic program over (trailing run of ones capped at m, hits capped at K).
    """
    P = np.zeros((m + 1, K + 1))
    P[0, 0] = 1.0
    for _ in range(M):
        nxt = np.zeros_like(P)
        nxt[0] += 0.5 * P.sum(axis=0)  # a zero resets the run
        nxt[1:m] += 0.5 * P[0:m - 1]
        ending = 0.5 * (P[m - 1] + P[m])  # run reaches m: one more hit
        nxt[m, 1:] += ending[:-1]
        nxt[m, K] += ending[K]
        P = nxt
    return P.sum(axis=0)


def overlapping_template(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    m, M, K = params.overlapping_m, params.overlapping_block, 5
    n = b.size
    N = n // M
    pi = overlapping_probabilities(m, M, K)
    _require(M > m and N * pi.min() >= 5.0,
             f"overlapping template test needs N * min(pi) >= 5 (N = {N})")
    w = _windows(b[: N * M], m, wrap=False)
    ones = (1 << m) - 1
    valid = (np.arange(w.size) % M) <= M - m  # windows lying inside one block
    hits = (w == ones) & valid
    per_block = np.bincount(np.nonzero(hits)[0] // M, minlength=N)[:N]
    v = np.bincount(np.minimum(per_block, K), minlength=K + 1)
    chi2 = float(np.sum((v - N * pi) ** 2 / (N * pi)))
    return ["overlapping"], [igamc(K / 2.0, chi2 / 2.0)]


# -- 9 ---------------------------------------------------------------------

_UNIVERSAL = {
    # L: (min n, expected value, variance)
    6: (387840, 5.2177052, 2.954),
    7: (904960, 6.1962507, 3.125),
    8: (2068480, 7.1836656, 3.238),
    9: (4654080, 8.1764248, 3.311),
    10: (10342400, 9.1723243, 3.356),
    11: (22753280, 10.170032, 3.384),
    12: (49643520, 11.168765, 3.401),
    13: (107560960, 12.168070, 3.410),
    14: (231669760, 13.167693, 3.416),
    15: (496435200, 14.167488, 3.419),
    16: (1059061760, 15.167379, 3.421),
}


def universal_block_length(n: int) -> Optional[int]:
    best = None
    for L, (min_n, _, _) in _UNIVERSAL.items():
        if n >= min_n:
            best = L
    return best


def universal_maurer(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    L = params.universal_L if params.universal_L is not None else universal_block_length(n)
    _require(L is not None and L in _UNIVERSAL,
             f"universal test needs at least {_UNIVERSAL[6][0]} bits")
    _require(n >= _UNIVERSAL[L][0], f"universal test with L = {L} needs n >= {_UNIVERSAL[L][0]}")
    Q = params.universal_Q if params.universal_Q is not None else 10 * 2 ** L
    blocks = n // L
    K = blocks - Q
    _require(K > 0 and Q >= 10 * 2 ** L, "universal test needs Q >= 10 * 2^L and K > 0")
    v = b[: blocks * L].reshape(blocks, L).astype(np.int64)
    v = (v << np.arange(L - 1, -1, -1)).sum(axis=1)
    order = np.argsort(v, kind="stable")
    sv = v[order]
    prev = np.zeros(blocks, dtype=np.int64)  # 1-based index of the previous hit, 0 if none
    same = sv[1:] == sv[:-1]
    prev[order[1:][same]] = order[:-1][same] + 1
    i = np.arange(Q, blocks)
    fn = float(np.sum(np.log2((i + 1) - prev[Q:]))) / K
    _, expected, variance = _UNIVERSAL[L]
    c = 0.7 - 0.8 / L + (4.0 + 32.0 / L) * K ** (-3.0 / L) / 15.0
    sigma = c * math.sqrt(variance / K)
    return ["universal"], [erfc(abs(fn - expected) / (math.sqrt(2.0) * sigma))]


# -- 10 --------------------------------------------------------------------

def berlekamp_massey(bits) -> int:
    """Length of the shortest LFSR over GF(2) generating ``bits``."""
    s = [int(v) & 1 for v in (bits.bits() if hasattr(bits, "bits") else bits)]
    n = len(s)
    C = [1] + [0] * n
    B = [1] + [0] * n
    L, m = 0, -1
    for N in range(n):
        d = s[N]
        for i in range(1, L + 1):
            d ^= C[i] & s[N - i]
        if d:
            T = C[:]
            shift = N - m
            for i in range(n + 1 - shift):
                C[i + shift] ^= B[i]
            if 2 * L <= N:
                L, m, B = N + 1 - L, N, T
    return L


_LC_PI = np.array([1 / 96, 1 / 32, 1 / 8, 1 / 2, 1 / 4, 1 / 16, 1 / 48])


def linear_complexity(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    M = params.linear_complexity_m
    N = b.size // M
    _require(500 <= M <= 5000 and N >= 200,
             f"linear complexity needs 500 <= M <= 5000 and >= 200 blocks (M = {M}, N = {N})")
    blocks = np.ascontiguousarray(b[: N * M].reshape(N, M))
    L = np.asarray(kernels.bm_blocks(blocks), dtype=np.float64)
    sign = -1.0 if M % 2 else 1.0
    mu = M / 2.0 + (9.0 + (-1.0) ** (M + 1)) / 36.0 - (M / 3.0 + 2.0 / 9.0) / 2.0 ** M
    T = sign * (L - mu) + 2.0 / 9.0
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    v = np.bincount(np.searchsorted(edges, T, side="left"), minlength=7)
    expected = N * _LC_PI
    chi2 = float(np.sum((v - expected) ** 2 / expected))
    return ["linear_complexity"], [igamc(3.0, chi2 / 2.0)]


# -- 11 --------------------------------------------------------------------

def _psi2(w_m: np.ndarray, m: int, n: int) -> float:
    if m <= 0:
        return 0.0
    c = np.bincount(w_m, minlength=1 << m).astype(np.float64)
    return (2.0 ** m / n) * float(np.dot(c, c)) - n


def serial(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    m = params.serial_m
    _require(m >= 2 and n >= 8 and m < int(math.floor(math.log2(n))) - 2,
             f"serial test needs 2 <= m < floor(log2 n) - 2 (m = {m}, n = {n})")
    w = _windows(b, m, wrap=True)
    psi = [_psi2(w >> k, m - k, n) for k in range(3)]
    d1 = psi[0] - psi[1]
    d2 = psi[0] - 2.0 * psi[1] + psi[2]
    return ["serial_1", "serial_2"], [igamc(2.0 ** (m - 2), d1 / 2.0),
                                      igamc(2.0 ** (m - 3), d2 / 2.0)]


# -- 12 --------------------------------------------------------------------

def _phi(w_m: np.ndarray, m: int, n: int) -> float:
    if m <= 0:
        return 0.0
    c = np.bincount(w_m, minlength=1 << m)
    c = c[c > 0] / n
    return float(np.sum(c * np.log(c)))


def approximate_entropy(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    m = params.apen_m
    _require(m >= 1 and m < int(math.floor(math.log2(n))) - 5,
             f"approximate entropy needs 1 <= m < floor(log2 n) - 5 (m = {m}, n = {n})")
    w = _windows(b, m + 1, wrap=True)
    apen = _phi(w >> 1, m, n) - _phi(w, m + 1, n)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    return ["approximate_entropy"], [igamc(2.0 ** (m - 1), chi2 / 2.0)]


# -- 13 --------------------------------------------------------------------

def _cusum_p(z: int, n: int) -> float:
    if z == 0:
        return 1.0
    sq = math.sqrt(n)
    k1 = np.arange(int((-n / z + 1) / 4), math.floor((n / z - 1) / 4) + 1)
    k2 = np.arange(int((-n / z - 3) / 4), math.floor((n / z - 1) / 4) + 1)
    s1 = np.sum(ndtr((4 * k1 + 1) * z / sq) - ndtr((4 * k1 - 1) * z / sq))
    s2 = np.sum(ndtr((4 * k2 + 3) * z / sq) - ndtr((4 * k2 + 1) * z / sq))
    return float(min(1.0, max(0.0, 1.0 - s1 + s2)))


def cumulative_sums(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    n = b.size
    _require(n >= 100, "cumulative sums test needs at least 100 bits")
    x = 2 * b.astype(np.int64) - 1
    fwd = int(np.max(np.abs(np.cumsum(x))))
    bwd = int(np.max(np.abs(np.cumsum(x[::-1]))))
    return ["forward", "backward"], [_cusum_p(fwd, n), _cusum_p(bwd, n)]


# -- 14, 15 ----------------------------------------------------------------

def _excursion_walk(b: np.ndarray, params: TestParams):
    n = b.size
    S = np.cumsum(2 * b.astype(np.int64) - 1)
    walk = np.concatenate([[0], S, [0]])
    zeros = walk == 0
    J = int(np.count_nonzero(zeros)) - 1
    need = max(0.005 * math.sqrt(n), params.excursion_min_cycles)
    _require(J >= need, f"random excursions need J >= {need:g} cycles, got {J}")
    return walk, zeros, J


def excursion_probabilities(x: int) -> np.ndarray:
    a = 1.0 / (2.0 * abs(x))
    pi = [1.0 - a]
    pi += [(1.0 / (4.0 * x * x)) * (1.0 - a) ** (k - 1) for k in range(1, 5)]
    pi.append(a * (1.0 - a) ** 4)
    return np.asarray(pi)


EXCURSION_STATES = (-4, -3, -2, -1, 1, 2, 3, 4)
VARIANT_STATES = tuple(range(-9, 0)) + tuple(range(1, 10))


def random_excursions(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    walk, zeros, J = _excursion_walk(b, params)
    cycle = np.cumsum(zeros) - 1  # cycle index of every walk position
    labels, pv = [], []
    for x in EXCURSION_STATES:
        visits = np.bincount(cycle[walk == x], minlength=J)[:J]
        v = np.bincount(np.minimum(visits, 5), minlength=6)
        expected = J * excursion_probabilities(x)
        chi2 = float(np.sum((v - expected) ** 2 / expected))
        labels.append(f"x={x:+d}")
        pv.append(igamc(2.5, chi2 / 2.0))
    return labels, pv


def random_excursions_variant(bits, params: TestParams = TestParams()):
    b = _as_bits(bits)
    walk, _, J = _excursion_walk(b, params)
    counts = np.bincount(walk + 9, minlength=19) if walk.min() >= -9 else None
    labels, pv = [], []
    for x in VARIANT_STATES:
        xi = int(counts[x + 9]) if counts is not None else int(np.count_nonzero(walk == x))
        pv.append(erfc(abs(xi - J) / math.sqrt(2.0 * J * (4.0 * abs(x) - 2.0))))
        labels.append(f"x={x:+d}")
    return labels, pv


TESTS: dict[str, tuple[str, Callable]] = {
    "monobit_frequency": ("Monobit Frequency", monobit_frequency),
    "block_frequency": ("Block Frequency", block_frequency),
    "runs": ("Runs", runs),
    "longest_run_of_ones": ("Longest Runs Ones", longest_run_of_ones),
    "binary_matrix_rank": ("Binary Matrix Rank", binary_matrix_rank),
    "spectral_dft": ("Spectral", spectral_dft),
    "non_overlapping_template": ("Non-Overlapping Template Matching", non_overlapping_template),
    "overlapping_template": ("Overlapping Template Matching", overlapping_template),
    "universal_maurer": ("Universal Statistic", universal_maurer),
    "linear_complexity": ("Linear Complexity", linear_complexity),
    "serial": ("Serial", serial),
    "approximate_entropy": ("Approximate Entropy", approximate_entropy),
    "cumulative_sums": ("Cumulative Sums", cumulative_sums),
    "random_excursions": ("Random Excursions", random_excursions),
    "random_excursions_variant": ("Random Excursions Variant", random_excursions_variant),
}

TEST_NAMES = tuple(TESTS)


def run_test(name: str, bits, params: TestParams = TestParams()) -> TestResult:
    """Run one test; unknown names raise ``KeyError``."""
    if name not in TESTS:
        raise KeyError(f"unknown test {name!r}; expected one of {', '.join(TEST_NAMES)}")
    fn = TESTS[name][1]
    try:
        labels, pv = fn(bits, params)
    except NotApplicable as exc:
        return TestResult(name, applicable=False, reason=str(exc))
    pv = tuple(float(min(1.0, max(0.0, p))) for p in pv)
    return TestResult(name, pv, tuple(labels))
