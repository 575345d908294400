"""Spin-flip VCSEL model with polarization-rotated optical feedback and
delayed electro-optic phase modulation.

Time is in ns, rates in ns^-1, fields are the dimensionless slowly-varying
amplitudes of the x- and y-polarized modes.  The hot loop lives in the
compiled kernel (see :mod:`vcselrng._backend`); this module owns the
parameters, validation, the history buffer and the reference right-hand side.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ._backend import kernels

ANISOTROPY_READINGS = ("standard", "printed")


class ConfigurationError(ValueError):
    """Inconsistent model or integration settings."""


class IntegrationError(RuntimeError):
    """The integration produced non-finite or unbounded values."""

    def __init__(self, message: str, t: float):
        super().__init__(f"{message} at t = {t:.6f} ns")
        self.t = t


@dataclass(frozen=True)
class VcselParams:
    """Physical constants and feedback/delay settings.

    Defaults are the operating point used for the random bit generator:
    g1 = g2 = 15 ns^-1, tau_o = 6 ns (split 1.5 + 1.5 ns), tau_e = 23.25 ns.

    ``anisotropy`` selects how the linear anisotropies enter the field
    equations.  ``"standard"`` uses the complex coefficient ``g_a + i g_p``
    (dichroism real, birefringence a frequency splitting); ``"printed"`` uses
    the real sum ``g_a + g_p``.
    """

    k: float = 300.0
    alpha: float = 4.0
    g_N: float = 1.0
    g_a: float = 0.5
    g_p: float = 30.0
    g_s: float = 50.0
    beta_sp: float = 1e-6
    mu: float = 4.5
    omega_0: float = 2.2176e15
    g1: float = 15.0
    g2: float = 15.0
    theta_p1: float = math.radians(22.5)
    theta_p2: float = math.radians(22.5)
    tau_o1: float = 1.5
    tau_o2: float = 1.5
    tau_e: float = 23.25
    noise_enabled: bool = False
    anisotropy: str = "standard"

    def __post_init__(self):
        for name in ("k", "g_N", "g_a", "g_p", "g_s", "beta_sp", "g1", "g2", "omega_0"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ConfigurationError(f"{name} must be a finite rate >= 0, got {v!r}")
        if not (math.isfinite(self.mu) and self.mu >= 0):
            raise ConfigurationError(f"mu must be >= 0, got {self.mu!r}")
        for name in ("tau_o1", "tau_o2", "tau_e"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ConfigurationError(f"{name} must be > 0, got {v!r}")
        if self.anisotropy not in ANISOTROPY_READINGS:
            raise ConfigurationError(
                f"anisotropy must be one of {ANISOTROPY_READINGS}, got {self.anisotropy!r}"
            )

    @property
    def tau_o(self) -> float:
        """Optical roundtrip time 2 (tau_o1 + tau_o2)."""
        return 2.0 * (self.tau_o1 + self.tau_o2)

    @property
    def tau_phase(self) -> float:
        """Lag of the phase-modulation signal, tau_e + 2 tau_o1 + tau_o2."""
        return self.tau_e + 2.0 * self.tau_o1 + self.tau_o2

    @property
    def psi_x(self) -> float:
        return math.sin(2.0 * self.theta_p1)

    @property
    def psi_y(self) -> float:
        return math.cos(2.0 * self.theta_p1)

    @property
    def anisotropy_coefficient(self) -> complex:
        if self.anisotropy == "standard":
            return complex(self.g_a, self.g_p)
        return complex(self.g_a + self.g_p, 0.0)

    @property
    def feedback_phase(self) -> complex:
        """Constant feedback phase factor exp(-i omega_0 tau_o)."""
        # tau_o is in ns, omega_0 in rad/s; reduce before exp to keep precision
        arg = math.fmod(self.omega_0 * self.tau_o * 1e-9, 2.0 * math.pi)
        return complex(math.cos(arg), -math.sin(arg))

    def kernel_vector(self) -> np.ndarray:
        """Pack constants in the layout expected by ``kernels.sfm_steps``."""
        c = self.anisotropy_coefficient
        q = self.feedback_phase
        c1 = math.cos(2.0 * self.theta_p1)
        s1 = math.sin(2.0 * self.theta_p1)
        c2 = math.cos(2.0 * self.theta_p2)
        s2 = math.sin(2.0 * self.theta_p2)
        return np.array([
            self.k, self.alpha, self.g_N, c.real, c.imag, self.mu, self.g_s,
            self.g1 * self.psi_x, self.g2 * self.psi_y, c1, s1, c2 * c2, s2 * s2,
            q.real, q.imag,
        ], dtype=np.float64)


@dataclass(frozen=True)
class SimState:
    E_x: complex
    E_y: complex
    N: float
    n: float
    t: float = 0.0

    @property
    def intensities(self) -> tuple[float, float]:
        return abs(self.E_x) ** 2, abs(self.E_y) ** 2

    def as_vector(self) -> np.ndarray:
        return np.array([self.E_x.real, self.E_x.imag, self.E_y.real, self.E_y.imag,
                         self.N, self.n], dtype=np.float64)

    @classmethod
    def from_vector(cls, v, t: float = 0.0) -> "SimState":
        return cls(complex(v[0], v[1]), complex(v[2], v[3]), float(v[4]), float(v[5]), t)


@dataclass
class Derivative:
    dE_x: complex
    dE_y: complex
    dN: float
    dn: float

    def max_norm(self) -> float:
        return max(abs(self.dE_x), abs(self.dE_y), abs(self.dN), abs(self.dn))


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled channel intensities (and optionally the raw state)."""

    dt: float
    t0: float
    I_x: np.ndarray
    I_y: np.ndarray
    E_x: Optional[np.ndarray] = None
    E_y: Optional[np.ndarray] = None
    N: Optional[np.ndarray] = None
    n: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.I_x.shape != self.I_y.shape:
            raise ValueError("I_x and I_y must have equal length")

    def __len__(self) -> int:
        return self.I_x.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (len(self) - 1)

    def channel(self, name: str) -> np.ndarray:
        if name in ("x", "ch0", "0"):
            return self.I_x
        if name in ("y", "ch1", "1"):
            return self.I_y
        raise ValueError(f"unknown channel {name!r}; expected 'x' or 'y'")

    def to_csv(self, path, fields: bool = False) -> None:
        """Write ``t_ns,I_x,I_y`` (plus the field quadratures if requested)."""
        if fields and self.E_x is None:
            raise ValueError("trajectory has no stored fields")
        header = ["t_ns", "I_x", "I_y"]
        cols = [self.times, self.I_x, self.I_y]
        if fields:
            header += ["Re_Ex", "Im_Ex", "Re_Ey", "Im_Ey"]
            cols += [self.E_x.real, self.E_x.imag, self.E_y.real, self.E_y.imag]
        data = np.column_stack(cols)
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            np.savetxt(fh, data, fmt="%.15g", delimiter=",")

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t = data[:, 0]
        dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        kw = {}
        if "Re_Ex" in header:
            kw["E_x"] = data[:, 3] + 1j * data[:, 4]
            kw["E_y"] = data[:, 5] + 1j * data[:, 6]
        return cls(dt=dt, t0=float(t[0]), I_x=data[:, 1].copy(), I_y=data[:, 2].copy(), **kw)

    def save_npz(self, path) -> None:
        arrays = {"dt": np.float64(self.dt), "t0": np.float64(self.t0),
                  "I_x": self.I_x, "I_y": self.I_y}
        for name in ("E_x", "E_y", "N", "n"):
            v = getattr(self, name)
            if v is not None:
                arrays[name] = v
        np.savez(path, **arrays)

    @classmethod
    def load_npz(cls, path) -> "Trajectory":
        with np.load(path) as z:
            kw = {name: z[name] for name in ("E_x", "E_y", "N", "n") if name in z}
            return cls(dt=float(z["dt"]), t0=float(z["t0"]), I_x=z["I_x"], I_y=z["I_y"], **kw)


def phase_signal(E_x: complex, E_y: complex, theta_p1: float) -> float:
    """Electro-optic drive |E_y sin(2 theta_p1) - E_x cos(2 theta_p1)|^2."""
    return abs(E_y * math.sin(2.0 * theta_p1) - E_x * math.cos(2.0 * theta_p1)) ** 2


def feedback_term(Ex_d: complex, Ey_d: complex, phi_d: float, params: VcselParams
                  ) -> tuple[complex, complex]:
    """Polarization-rotated feedback injected into the x and y modes.

    ``Ex_d``/``Ey_d`` are the fields one optical roundtrip ago and ``phi_d``
    the phase-modulator drive at its own (longer) lag.
    """
    c1 = math.cos(2.0 * params.theta_p1)
    s1 = math.sin(2.0 * params.theta_p1)
    c2sq = math.cos(2.0 * params.theta_p2) ** 2
    s2sq = math.sin(2.0 * params.theta_p2) ** 2
    mod = (c2sq + s2sq * complex(math.cos(phi_d), math.sin(phi_d))) * params.feedback_phase
    fx = params.g1 * (c1 * Ey_d - s1 * Ex_d) * params.psi_x * mod
    fy = params.g2 * (c1 * Ey_d + s1 * Ex_d) * params.psi_y * mod
    return fx, fy


def rhs(state: SimState, delayed: tuple[complex, complex, float], params: VcselParams,
        noise: tuple[complex, complex] = (0j, 0j)) -> Derivative:
    """Time derivative of the state.

    ``delayed`` is ``(E_x(t - tau_o), E_y(t - tau_o), phi(t - tau_phase))``.
    ``noise`` is added to the field derivatives as-is; pass zeros for the
    deterministic model.
    """
    Ex, Ey, N, n = state.E_x, state.E_y, state.N, state.n
    Exd, Eyd, phid = delayed
    values = (Ex, Ey, N, n, Exd, Eyd, phid)
    if not all(math.isfinite(abs(v)) for v in values):
        raise IntegrationError("non-finite state or delayed value", state.t)
    gain = params.k * complex(1.0, params.alpha)
    aniso = params.anisotropy_coefficient
    fx, fy = feedback_term(Exd, Eyd, phid, params)
    dEx = gain * ((N - 1.0) * Ex + 1j * n * Ey) - aniso * Ex + fx + noise[0]
    dEy = gain * ((N - 1.0) * Ey - 1j * n * Ex) + aniso * Ey + fy + noise[1]
    Ix, Iy = abs(Ex) ** 2, abs(Ey) ** 2
    # i n (E_x conj(E_y) - conj(E_x) E_y) = -2 n Im(E_x conj(E_y))
    cross = (Ex * Ey.conjugate()).imag
    dN = params.g_N * (params.mu - N * (1.0 + Ix + Iy) - 2.0 * n * cross)
    dn = -params.g_s * n - params.g_N * (n * (Ix + Iy) + 2.0 * N * cross)
    return Derivative(dEx, dEy, dN, dn)


def steady_state_residual(state: SimState, params: VcselParams, omega: float = 0.0) -> float:
    """Max-norm of the right-hand side with delayed values equal to current ones.

    With ``omega`` nonzero the fields are measured in a frame rotating at that
    angular frequency (rad/ns), which is how lasing states with a constant
    intensity become fixed points.
    """
    phi = phase_signal(state.E_x, state.E_y, params.theta_p1)
    d = rhs(state, (state.E_x, state.E_y, phi), params)
    d.dE_x -= 1j * omega * state.E_x
    d.dE_y -= 1j * omega * state.E_y
    return d.max_norm()


def lasing_steady_state(params: VcselParams, mode: str = "y") -> tuple[SimState, float]:
    """Single-mode lasing solution of the feedback-free model.

    Solves rhs = i omega E for a pure x- or y-polarized field with n = 0 and
    returns the state and the lasing angular frequency omega (rad/ns).
    """
    if params.g1 or params.g2:
        raise ConfigurationError("lasing_steady_state needs g1 = g2 = 0")
    from scipy.optimize import fsolve

    c = params.anisotropy_coefficient
    sign = 1.0 if mode == "y" else -1.0

    def equations(z):
        N, I, omega = z
        E = math.sqrt(max(I, 0.0))
        Ex, Ey = (0j, complex(E)) if mode == "y" else (complex(E), 0j)
        st = SimState(Ex, Ey, N, 0.0)
        d = rhs(st, (Ex, Ey, phase_signal(Ex, Ey, params.theta_p1)), params)
        dE = (d.dE_y if mode == "y" else d.dE_x) - 1j * omega * E
        return [dE.real, dE.imag, d.dN]

    N0 = 1.0 - sign * c.real / params.k
    I0 = params.mu / N0 - 1.0
    w0 = params.k * params.alpha * (N0 - 1.0) + sign * c.imag
    N, I, omega = fsolve(equations, [N0, I0, w0], xtol=1e-14)
    E = math.sqrt(I)
    Ex, Ey = (0j, complex(E)) if mode == "y" else (complex(E), 0j)
    return SimState(Ex, Ey, float(N), 0.0), float(omega)


@dataclass
class HistoryBuffer:
    """Ring storage of (E_x, E_y, phi) on the integration grid.

    Column layout: Re E_x, Im E_x, Re E_y, Im E_y, phi, cos phi, sin phi
    (the last two spare the kernel a sin/cos pair per stage).  Global step ``p`` is
    stored at row ``p % capacity``; rows not yet written hold the initial
    condition, which doubles as the pre-history.
    """

    h: float
    capacity: int
    theta_p1: float
    data: np.ndarray = field(init=False, repr=False)

    MARGIN = 4  # rows needed around a lag by the 4-point midpoint interpolant

    @classmethod
    def for_params(cls, params: VcselParams, h: float, extra_lag: float = 0.0) -> "HistoryBuffer":
        longest = max(params.tau_o, params.tau_phase, extra_lag)
        return cls(h=h, capacity=int(math.ceil(longest / h - 1e-9)) + cls.MARGIN,
                   theta_p1=params.theta_p1)

    def __post_init__(self):
        self.data = np.zeros((self.capacity, 7), dtype=np.float64)

    def fill(self, state: SimState) -> None:
        phi = phase_signal(state.E_x, state.E_y, self.theta_p1)
        self.data[:] = [state.E_x.real, state.E_x.imag, state.E_y.real, state.E_y.imag,
                        phi, math.cos(phi), math.sin(phi)]

    def lookup(self, p_now: int, lag_steps: int) -> tuple[complex, complex, float]:
        """Stored (E_x, E_y, phi) ``lag_steps`` grid points before step ``p_now``."""
        if not 0 <= lag_steps < self.capacity - self.MARGIN + 1:
            raise IndexError(f"lag of {lag_steps} steps exceeds buffer capacity")
        row = self.data[(p_now - lag_steps) % self.capacity]
        return complex(row[0], row[1]), complex(row[2], row[3]), float(row[4])


def delay_steps(delay: float, h: float, name: str) -> int:
    """Number of grid steps in ``delay``; raises unless it is an exact multiple."""
    q = delay / h
    r = round(q)
    if r < 2 or abs(q - r) > 1e-6 * max(1.0, q):
        raise ConfigurationError(
            f"{name} = {delay} ns is not an integer multiple (>= 2) of h = {h} ns")
    return int(r)


def initial_state(params: VcselParams, seed: int, amplitude: float = 1e-3,
                  rel_perturbation: float = 1e-6) -> SimState:
    """Seeded initial condition E = amplitude (1 + i), N = mu, n = 0."""
    rng = np.random.default_rng([seed, 0x1C])
    base = np.array([amplitude, amplitude, amplitude, amplitude, params.mu, 0.0])
    # n = 0 gets an absolute perturbation so it is not pinned at exactly zero
    scale = np.where(base != 0.0, np.abs(base), 1.0)
    v = base + rel_perturbation * scale * rng.uniform(-1.0, 1.0, size=6)
    return SimState.from_vector(v)


def integrate(params: VcselParams, ic: Optional[SimState] = None, h: float = 5e-5,
              t_end: float = 1000.0, decimation: int = 20, seed: int = 0,
              warmup: float = 200.0, record_state: bool = False, bound: float = 1e6,
              chunk_steps: int = 1 << 20, backend=None) -> Trajectory:
    """Fixed-step integration from t = 0 to ``t_end`` (ns).

    RK4 on the deterministic system; with ``params.noise_enabled`` an
    Euler-Maruyama increment sqrt(beta_sp h) zeta is added after each step.
    Samples every ``decimation`` steps from ``warmup`` on.  The pre-history
    (t < 0) is held at the initial condition.
    """
    kern = backend or kernels
    if not (h > 0 and math.isfinite(h)):
        raise ConfigurationError(f"step h must be > 0, got {h!r}")
    if decimation < 1 or int(decimation) != decimation:
        raise ConfigurationError(f"decimation must be a positive integer, got {decimation!r}")
    if warmup < 0:
        raise ConfigurationError("warmup must be >= 0")
    if not t_end > warmup:
        raise ConfigurationError(f"t_end = {t_end} ns must exceed the warm-up of {warmup} ns")
    d_opt = delay_steps(params.tau_o, h, "tau_o")
    d_phase = delay_steps(params.tau_phase, h, "tau_e + 2 tau_o1 + tau_o2")
    total = int(round(t_end / h))
    rec_from = int(round(warmup / h))
    if ic is None:
        ic = initial_state(params, seed)

    hist = HistoryBuffer.for_params(params, h)
    hist.fill(ic)
    y = ic.as_vector()
    nsamples = (total - rec_from) // decimation + 1
    width = 8 if record_state else 2
    out = np.empty((nsamples, width), dtype=np.float64)
    pos = 0
    if rec_from == 0:
        out[0, :2] = ic.intensities
        if record_state:
            out[0, 2:] = y
        pos = 1

    prm = params.kernel_vector()
    noise_rng = np.random.default_rng([seed, 0x5E]) if params.noise_enabled else None
    # complex zeta with E|zeta|^2 = 1: each quadrature has variance 1/2
    noise_amp = math.sqrt(params.beta_sp * h / 2.0)
    empty_noise = np.zeros((0, 4), dtype=np.float64)
    p = 0
    while p < total:
        n = min(chunk_steps, total - p)
        noise = noise_rng.standard_normal((n, 4)) if noise_rng is not None else empty_noise
        status, written, fail_at = kern.sfm_steps(
            y, hist.data, p, n, d_opt, d_phase, h, prm, rec_from, decimation,
            out, pos, noise, noise_amp, bound)
        if status != 0:
            raise IntegrationError(f"field magnitude exceeded {bound:g} or became non-finite",
                                   fail_at * h)
        pos += written
        p += n
    assert pos == nsamples, (pos, nsamples)

    kw = {}
    if record_state:
        kw = dict(E_x=out[:, 2] + 1j * out[:, 3], E_y=out[:, 4] + 1j * out[:, 5],
                  N=out[:, 6].copy(), n=out[:, 7].copy())
    return Trajectory(dt=decimation * h, t0=rec_from * h, I_x=out[:, 0].copy(),
                      I_y=out[:, 1].copy(), **kw)


def paper_operating_point(**overrides) -> VcselParams:
    """Operating point with concealed delay signature (g = 15 ns^-1, tau_o = 6 ns,
    tau_e = 23.25 ns, mu = 4.5)."""
    return replace(VcselParams(), **overrides)
