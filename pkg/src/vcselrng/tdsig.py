"""Time-delay signature analysis: autocorrelation, peak detection and the
chaos bandwidth used by the extraction timing check."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy import signal


class AnalysisError(ValueError):
    pass


@dataclass(frozen=True)
class AcfCurve:
    lag_step: float
    values: np.ndarray

    @property
    def lags(self) -> np.ndarray:
        return self.lag_step * np.arange(self.values.shape[0])

    def at(self, lag: float) -> float:
        return float(self.values[int(round(lag / self.lag_step))])

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lag_ns,acf\n")
            np.savetxt(fh, np.column_stack([self.lags, self.values]), fmt="%.15g",
                       delimiter=",")


@dataclass(frozen=True)
class Peak:
    lag: float
    height: float


@dataclass
class TdReport:
    concealed: bool
    threshold: float
    sigma: float
    peaks: list[Peak] = field(default_factory=list)
    scan: tuple[float, float] = (0.0, 0.0)

    def to_dict(self) -> dict:
        return {
            "verdict": "concealed" if self.concealed else "signature",
            "concealed": self.concealed,
            "threshold": self.threshold,
            "sigma": self.sigma,
            "scan_ns": list(self.scan),
            "peaks": [{"lag_ns": p.lag, "height": p.height} for p in self.peaks],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _centered(series) -> np.ndarray:
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] < 2:
        raise AnalysisError("series must be a 1-D array with at least 2 samples")
    x = x - x.mean()
    if not np.any(x):
        raise AnalysisError("zero variance: the series is constant")
    return x


def _max_lag_index(n: int, dt: float, max_lag: float) -> int:
    if not (dt > 0 and max_lag >= 0):
        raise AnalysisError("dt must be > 0 and max_lag >= 0")
    j = int(round(max_lag / dt))
    if n < 2 * j:
        raise AnalysisError(
            f"max_lag = {max_lag} ns is too large for {n} samples (need n >= 2 max_lag/dt)")
    return j


def autocorrelation(series, dt: float, max_lag: float) -> AcfCurve:
    """Normalized autocorrelation for lags 0 .. max_lag via FFT.

    Uses the biased estimator (sums over n - j pairs divided by n), which keeps
    |C| <= 1; C(0) = 1.
    """
    x = _centered(series)
    n = x.shape[0]
    jmax = _max_lag_index(n, dt, max_lag)
    nfft = sfft.next_fast_len(n + jmax + 1, real=True)
    spec = sfft.rfft(x, nfft)
    acov = sfft.irfft(spec.real ** 2 + spec.imag ** 2, nfft)[: jmax + 1]
    return AcfCurve(lag_step=dt, values=acov / acov[0])


def autocorrelation_direct(series, dt: float, max_lag: float) -> AcfCurve:
    """Same estimator as :func:`autocorrelation` by explicit summation (O(n * lags))."""
    x = _centered(series)
    n = x.shape[0]
    jmax = _max_lag_index(n, dt, max_lag)
    var = float(np.dot(x, x))
    vals = np.array([np.dot(x[: n - j], x[j:]) for j in range(jmax + 1)]) / var
    return AcfCurve(lag_step=dt, values=vals)


def decimate_to(series, dt: float, spacing: float) -> tuple[np.ndarray, float]:
    """Keep every k-th sample so the spacing is the multiple of dt closest to ``spacing``."""
    k = max(1, int(round(spacing / dt)))
    return np.asarray(series)[::k], dt * k


def detect_td_peaks(acf: AcfCurve, scan: tuple[float, float] = (0.5, 30.0),
                    threshold_sigma: float = 5.0, floor: float = 0.05,
                    candidates=None, tolerance: float = 0.5) -> TdReport:
    """Find significant local maxima of |C| inside ``scan``.

    The background sigma is the standard deviation of |C| over the window
    after dropping its top 1 %.  A peak must exceed both
    ``threshold_sigma * sigma`` and ``floor``.  When ``candidates`` (delays in
    ns) are given, only peaks within ``tolerance`` of one of them are kept.
    """
    lo, hi = scan
    if not lo > 0:
        raise AnalysisError("scan window must start at a positive lag")
    lags = acf.lags
    if hi > lags[-1] + 0.5 * acf.lag_step:
        raise AnalysisError(f"scan window ends at {hi} ns beyond the ACF range {lags[-1]} ns")
    sel = np.nonzero((lags >= lo - 1e-12) & (lags <= hi + 1e-12))[0]
    if sel.size == 0:
        raise AnalysisError("empty scan window")
    mag = np.abs(acf.values[sel])
    keep = np.sort(mag)[: max(1, int(np.floor(0.99 * mag.size)))]
    sigma = float(keep.std())
    threshold = max(threshold_sigma * sigma, floor)

    peaks = []
    if mag.size >= 3:
        inner = np.nonzero((mag[1:-1] > mag[:-2]) & (mag[1:-1] >= mag[2:])
                           & (mag[1:-1] > threshold))[0] + 1
        for i in inner:
            lag = float(lags[sel[i]])
            if candidates is not None and not any(abs(lag - c) <= tolerance
                                                  for c in candidates):
                continue
            peaks.append(Peak(lag=lag, height=float(acf.values[sel[i]])))
    return TdReport(concealed=not peaks, threshold=threshold, sigma=sigma, peaks=peaks,
                    scan=(float(lo), float(hi)))


@dataclass(frozen=True)
class BandwidthEstimate:
    bandwidth: float  # GHz
    freqs: np.ndarray  # GHz
    psd: np.ndarray


def power_spectrum(series, dt: float, segments: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Averaged Hann-windowed periodogram, ``segments`` segments at 50 % overlap."""
    x = np.asarray(series, dtype=np.float64)
    nperseg = (2 * x.shape[0]) // (segments + 1)
    f, p = signal.welch(x, fs=1.0 / dt, window="hann", nperseg=nperseg,
                        noverlap=nperseg // 2, detrend="constant", scaling="density")
    return f, p


def estimate_bandwidth(series, dt: float, fraction: float = 0.8,
                       min_samples: int = 1 << 14) -> BandwidthEstimate:
    """Smallest f with ``fraction`` of the AC power of the one-sided spectrum in (0, f]."""
    x = np.asarray(series, dtype=np.float64)
    if x.shape[0] < min_samples:
        raise AnalysisError(f"need at least {min_samples} samples, got {x.shape[0]}")
    _centered(x)
    f, p = power_spectrum(x, dt)
    cum = np.cumsum(p[1:])
    if cum[-1] <= 0:
        raise AnalysisError("zero variance: no AC power")
    idx = int(np.searchsorted(cum, fraction * cum[-1]))
    return BandwidthEstimate(bandwidth=float(f[1:][idx]), freqs=f, psd=p)
