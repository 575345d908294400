"""Comparator array, staggered D flip-flops and parity combiner.

At flip-flop ``m`` (0-based here) the edges are
``t_start + k tau + m delta_tau`` with ``delta_tau = tau / M``.  On each edge
the flip-flop latches ``I(t) > I(t - T_m)`` and the parity of all latches is
emitted, giving ``M`` bits per clock period.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels
from .sfm import Trajectory


class TimingError(ValueError):
    """A hard timing inequality of the comparator delays is violated."""

    def __init__(self, message: str, pair: Optional[tuple[int, int]] = None):
        super().__init__(message)
        self.pair = pair


def delay_schedule(M: int) -> np.ndarray:
    """Comparator delays T_m = sqrt(3.2 m - 1) ns for m = 1..M."""
    if M < 1 or int(M) != M:
        raise ValueError(f"M must be a positive integer, got {M!r}")
    m = np.arange(1, int(M) + 1, dtype=np.float64)
    return np.sqrt(3.2 * m - 1.0)


def check_hard_constraints(schedule: Sequence[float], tau: float) -> None:
    T = np.asarray(schedule, dtype=np.float64)
    for i, t in enumerate(T):
        if not t > tau:
            raise TimingError(f"T_{i + 1} = {t} ns is not longer than the clock period {tau} ns",
                              (i + 1, i + 1))
    order = np.argsort(T, kind="stable")
    # the smallest pairwise gap is between neighbours in sorted order
    for a, b in zip(order[:-1], order[1:]):
        if not abs(T[b] - T[a]) > tau:
            i, j = sorted((int(a) + 1, int(b) + 1))
            raise TimingError(
                f"|T_{i} - T_{j}| = {abs(T[b] - T[a])} ns does not exceed tau = {tau} ns", (i, j))


@dataclass(frozen=True)
class ExtractionConfig:
    M: int
    f_c: float  # GHz
    schedule: tuple = ()
    t_start: Optional[float] = None
    tie_rule: int = 0
    discard: int = 0

    def __post_init__(self):
        if self.M < 1 or int(self.M) != self.M:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if not (self.f_c > 0 and math.isfinite(self.f_c)):
            raise ValueError(f"f_c must be > 0 GHz, got {self.f_c!r}")
        if self.tie_rule not in (0, 1):
            raise ValueError("tie_rule must be 0 or 1")
        if self.discard < 0:
            raise ValueError("discard must be >= 0")
        if not self.schedule:
            object.__setattr__(self, "schedule", tuple(delay_schedule(self.M).tolist()))
        if len(self.schedule) != self.M:
            raise ValueError(f"schedule has {len(self.schedule)} delays for M = {self.M}")
        check_hard_constraints(self.schedule, self.tau)

    @property
    def tau(self) -> float:
        """Clock period in ns."""
        return 1.0 / self.f_c

    @property
    def delta_tau(self) -> float:
        return self.tau / self.M

    @property
    def max_delay(self) -> float:
        return max(self.schedule)

    def start_for(self, traj: Trajectory) -> float:
        """First clock edge: explicit ``t_start`` or the earliest edge whose
        delayed lookups stay inside the recorded (post-warm-up) trajectory."""
        if self.t_start is not None:
            return self.t_start
        # two samples of headroom for the cubic stencil
        return traj.t0 + self.max_delay + 2.0 * traj.dt

    def edge_time(self, k: int, m: int, t_start: float) -> float:
        return t_start + float(k) * self.tau + float(m) * self.delta_tau

    def cycles_for(self, duration: float) -> int:
        return int(math.floor(duration / self.tau + 1e-9))


@dataclass
class TimingReport:
    tau: float
    delta_tau: float
    min_delay: float
    min_gap: float
    min_gap_pair: tuple[int, int]
    bandwidth: float
    ratio: float  # delta_tau * B_w
    passes: bool = True  # hard inequalities (always true when constructed)
    advisory: bool = False  # delta_tau * B_w >= 1
    strong: bool = False  # delta_tau * B_w >= 10

    def to_dict(self) -> dict:
        return {
            "tau_ns": self.tau, "delta_tau_ns": self.delta_tau,
            "min_delay_ns": self.min_delay, "min_gap_ns": self.min_gap,
            "min_gap_pair": list(self.min_gap_pair), "bandwidth_GHz": self.bandwidth,
            "delta_tau_times_Bw": self.ratio, "hard_constraints_pass": self.passes,
            "stagger_ok": self.advisory, "stagger_strong": self.strong,
        }


def validate_timing(config: ExtractionConfig, B_w: float) -> TimingReport:
    """Check T_m > tau and pairwise gaps > tau (errors) and report delta_tau * B_w.

    The stagger criterion is advisory: ``advisory`` is set when
    delta_tau * B_w >= 1 and ``strong`` when it is >= 10.
    """
    if not B_w > 0:
        raise ValueError("B_w must be > 0")
    T = np.asarray(config.schedule, dtype=np.float64)
    check_hard_constraints(T, config.tau)
    order = np.argsort(T, kind="stable")
    if T.size > 1:
        gaps = np.diff(T[order])
        g = int(np.argmin(gaps))
        pair = tuple(sorted((int(order[g]) + 1, int(order[g + 1]) + 1)))
        min_gap = float(gaps[g])
    else:
        pair, min_gap = (1, 1), math.inf
    ratio = config.delta_tau * B_w
    return TimingReport(tau=config.tau, delta_tau=config.delta_tau, min_delay=float(T.min()),
                        min_gap=min_gap, min_gap_pair=pair, bandwidth=B_w, ratio=ratio,
                        advisory=ratio >= 1.0, strong=ratio >= 10.0)


def interpolate(traj_values: np.ndarray, t0: float, dt: float, times) -> np.ndarray:
    """4-point Lagrange interpolation of uniform samples at arbitrary times."""
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    return kernels.cubic_interp(np.ascontiguousarray(traj_values, dtype=np.float64),
                                float(t0), float(dt), t)


def comparator_bit(I: np.ndarray, t0: float, dt: float, t: float, T_m: float,
                   tie_rule: int = 0) -> int:
    """1 if I(t) > I(t - T_m), 0 if smaller, ``tie_rule`` on exact equality."""
    a, b = interpolate(I, t0, dt, [t, t - T_m])
    if a > b:
        return 1
    if a == b:
        return int(tie_rule)
    return 0


@dataclass
class BitStream:
    """Packed bits, first-generated bit in the LSB of byte 0."""

    data: bytes
    bit_count: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.data) != (self.bit_count + 7) // 8:
            raise ValueError("byte length does not match bit_count")
        if self.bit_count % 8 and self.data[-1] >> (self.bit_count % 8):
            raise ValueError("trailing bits of the last byte must be zero")

    @classmethod
    def from_bits(cls, bits, meta: Optional[dict] = None) -> "BitStream":
        b = np.asarray(bits, dtype=np.uint8)
        return cls(np.packbits(b, bitorder="little").tobytes(), int(b.size), dict(meta or {}))

    def bits(self) -> np.ndarray:
        arr = np.frombuffer(self.data, dtype=np.uint8)
        return np.unpackbits(arr, bitorder="little", count=self.bit_count)

    def __len__(self) -> int:
        return self.bit_count

    def __eq__(self, other) -> bool:
        return (isinstance(other, BitStream) and self.bit_count == other.bit_count
                and self.data == other.data)

    def concat(self, other: "BitStream") -> "BitStream":
        return BitStream.from_bits(np.concatenate([self.bits(), other.bits()]), self.meta)

    def split(self, length: int, count: Optional[int] = None) -> list["BitStream"]:
        b = self.bits()
        n = b.size // length if count is None else count
        if n * length > b.size:
            raise ValueError(f"{n} sequences of {length} bits need more than {b.size} bits")
        return [BitStream.from_bits(b[i * length:(i + 1) * length], self.meta) for i in range(n)]

    def save(self, path) -> None:
        """Raw packed bytes plus a ``<path>.json`` sidecar header."""
        path = Path(path)
        path.write_bytes(self.data)
        header = dict(self.meta)
        header["bit_count"] = self.bit_count
        with open(sidecar_path(path), "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "BitStream":
        """Read a bit file.

        With a JSON sidecar the header gives ``bit_count``; otherwise an all
        '0'/'1' ASCII file is read character-wise and anything else as packed
        LSB-first bytes.
        """
        path = Path(path)
        raw = path.read_bytes()
        side = sidecar_path(path)
        if side.exists():
            meta = json.loads(side.read_text())
            n = int(meta.pop("bit_count"))
            return cls(raw[: (n + 7) // 8], n, meta)
        text = raw.translate(None, b" \t\r\n")
        if text and not text.translate(None, b"01"):
            return cls.from_bits(np.frombuffer(text, dtype=np.uint8) - ord("0"))
        return cls(raw, 8 * len(raw), {})


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


@dataclass
class LatchState:
    """Flip-flop contents between edges."""

    latches: np.ndarray
    last_edge: int = -1

    @classmethod
    def reset(cls, M: int) -> "LatchState":
        return cls(np.zeros(M, dtype=np.uint8), -1)

    @property
    def parity(self) -> int:
        return int(np.bitwise_xor.reduce(self.latches)) if self.latches.size else 0


@dataclass
class Extraction:
    bits: BitStream
    trace: np.ndarray  # (rows, M) latch contents after each of the first emissions
    trace_times: np.ndarray
    final_state: LatchState


def _check_range(traj: Trajectory, config: ExtractionConfig, t_start: float, K: int) -> None:
    lo = t_start - config.max_delay
    hi = config.edge_time(K - 1, config.M - 1, t_start) if K else t_start
    # the cubic stencil uses one sample before and two after the bracketing pair
    if lo < traj.t0 + traj.dt or hi > traj.t_end - 2.0 * traj.dt:
        raise ValueError(
            f"trajectory [{traj.t0}, {traj.t_end}] ns does not cover the extraction window "
            f"[{lo}, {hi}] ns plus interpolation margin")


def extract(traj: Trajectory, channel: str, config: ExtractionConfig, duration: float,
            trace_rows: int = 0, backend=None) -> Extraction:
    """Run the circuit for ``floor(duration / tau)`` clock periods.

    Emits ``M`` bits per period, one immediately after every flip-flop edge,
    starting from all-zero latches.  The first ``config.discard`` bits are
    dropped from the returned stream (not from the trace).
    """
    kern = backend or kernels
    I = np.ascontiguousarray(traj.channel(channel), dtype=np.float64)
    t_start = config.start_for(traj)
    K = config.cycles_for(duration)
    _check_range(traj, config, t_start, K)
    M = config.M
    total = K * M
    out = np.empty(total, dtype=np.uint8)
    rows = min(trace_rows, total)
    trace = np.zeros((rows, M), dtype=np.uint8)
    T = np.asarray(config.schedule, dtype=np.float64)
    status = kern.extract_events(I, float(traj.t0), float(traj.dt), float(t_start),
                                 float(config.tau), float(config.delta_tau), T, K,
                                 int(config.tie_rule), out, trace)
    if status != 0:
        raise ValueError("extraction edge fell outside the trajectory")
    e = np.arange(rows)
    times = t_start + (e // M).astype(np.float64) * config.tau + (e % M) * config.delta_tau
    if K:
        last = np.asarray([comparator_bit(I, traj.t0, traj.dt,
                                          config.edge_time(K - 1, m, t_start), T[m],
                                          config.tie_rule) for m in range(M)], dtype=np.uint8)
    else:
        last = np.zeros(M, dtype=np.uint8)
    meta = {"channel": channel, "M": M, "f_c_GHz": config.f_c, "t_start_ns": t_start,
            "duration_ns": K * config.tau, "schedule": [float(v) for v in T]}
    stream = BitStream.from_bits(out[config.discard:], meta)
    return Extraction(stream, trace, times, LatchState(last, total - 1))


def extract_reference(traj: Trajectory, channel: str, config: ExtractionConfig,
                      duration: float, chunk: int = 1 << 16) -> BitStream:
    """Naive extractor: at every emission, re-evaluate every flip-flop's last
    latched comparator value and take their parity.  No state is carried from
    one emission to the next."""
    I = np.ascontiguousarray(traj.channel(channel), dtype=np.float64)
    t_start = config.start_for(traj)
    K = config.cycles_for(duration)
    _check_range(traj, config, t_start, K)
    M = config.M
    T = np.asarray(config.schedule, dtype=np.float64)
    total = K * M
    out = np.empty(total, dtype=np.uint8)
    j = np.arange(M)
    for s in range(0, total, chunk):
        e = np.arange(s, min(total, s + chunk))
        k, m = e // M, e % M
        # flip-flop j last fired in this cycle if j <= m, else in the previous one
        kj = k[:, None] - (j[None, :] > m[:, None])
        fired = kj >= 0
        te = t_start + kj.astype(np.float64) * config.tau + j[None, :] * config.delta_tau
        te = np.where(fired, te, t_start)
        flat = te.ravel()
        a = _purepy_interp(I, traj.t0, traj.dt, flat)
        b = _purepy_interp(I, traj.t0, traj.dt, (te - T[None, :]).ravel())
        cmp = np.where(a > b, 1, np.where(a == b, config.tie_rule, 0)).reshape(te.shape)
        cmp = np.where(fired, cmp, 0).astype(np.uint8)
        out[s:s + e.size] = np.bitwise_xor.reduce(cmp, axis=1)
    meta = {"channel": channel, "M": M, "f_c_GHz": config.f_c, "t_start_ns": t_start,
            "duration_ns": K * config.tau, "schedule": [float(v) for v in T]}
    return BitStream.from_bits(out[config.discard:], meta)


def _purepy_interp(v, t0, dt, t):
    from . import _purepy
    return _purepy.cubic_interp(v, t0, dt, t)


def throughput(config: ExtractionConfig, channels: int = 1) -> float:
    """Generated bits per second: channels * M * f_c."""
    if channels not in (1, 2):
        raise ValueError("channels must be 1 or 2")
    return float(channels * config.M * config.f_c * 1e9)


def write_trace_csv(path, extraction: Extraction) -> None:
    """Per-emission latch contents and parity: ``t_ns,ff_1..ff_M,xor``."""
    tr = extraction.trace
    M = tr.shape[1]
    xor = np.bitwise_xor.reduce(tr, axis=1) if tr.size else np.zeros(0, dtype=np.uint8)
    with open(path, "w") as fh:
        fh.write(",".join(["t_ns"] + [f"ff_{m + 1}" for m in range(M)] + ["xor"]) + "\n")
        for t, row, x in zip(extraction.trace_times, tr, xor):
            fh.write(f"{t:.15g}," + ",".join(str(int(v)) for v in row) + f",{int(x)}\n")
