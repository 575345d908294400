"""INI run configuration with strict key checking and cross-field validation."""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .extraction import ExtractionConfig, TimingError
from .nist.battery import TestParams
from .sfm import ConfigurationError, VcselParams, delay_steps


class ConfigError(ValueError):
    """Invalid configuration; ``key`` is ``section.name`` when one field is at fault."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{key}: {message}{where}" if key else f"{message}{where}")
        self.key = key
        self.line = line


REQUIRED = object()
AUTO = "auto"


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {s!r}")


def _int(s: str) -> int:
    v = float(s)
    if not v.is_integer():
        raise ValueError(f"expected an integer, got {s!r}")
    return int(v)


def _float(s: str) -> float:
    v = float(s)
    if not math.isfinite(v):
        raise ValueError(f"expected a finite number, got {s!r}")
    return v


def _auto(conv):
    def parse(s: str):
        return None if s.strip().lower() == AUTO else conv(s)
    return parse


def _floats(s: str) -> tuple:
    return tuple(_float(v) for v in re.split(r"[,\s]+", s.strip()) if v)


def _channels(s: str) -> tuple:
    ch = tuple(v for v in re.split(r"[,\s]+", s.strip().lower()) if v)
    if not ch or len(set(ch)) != len(ch) or any(c not in ("x", "y") for c in ch):
        raise ValueError(f"channels must be x, y or x,y; got {s!r}")
    return ch


def _str(s: str) -> str:
    return s.strip()


# section -> key -> (parser, default)
SCHEMA = {
    "sfm": {
        "k": (_float, 300.0), "alpha": (_float, 4.0), "g_N": (_float, 1.0),
        "g_a": (_float, 0.5), "g_p": (_float, 30.0), "g_s": (_float, 50.0),
        "beta_sp": (_float, 1e-6), "mu": (_float, 4.5), "omega_0": (_float, 2.2176e15),
        "g1": (_float, 15.0), "g2": (_float, 15.0),
        "theta_p1_deg": (_float, 22.5), "theta_p2_deg": (_float, 22.5),
        "tau_o1": (_float, 1.5), "tau_o2": (_float, 1.5), "tau_e": (_float, 23.25),
        "noise": (_bool, False), "anisotropy": (_str, "standard"),
    },
    "integration": {
        "h": (_float, 5e-5), "t_end": (_auto(_float), None), "warmup": (_float, 200.0),
        "decimation": (_int, 20), "seed": (_int, 0),
    },
    "extraction": {
        "M": (_int, REQUIRED), "f_c": (_float, REQUIRED), "channels": (_channels, ("x", "y")),
        "duration": (_auto(_float), None), "tie_rule": (_int, 0), "discard": (_int, 0),
        "schedule": (_floats, ()), "t_start": (_auto(_float), None),
    },
    "analysis": {
        "scan_start": (_float, 0.5), "scan_end": (_float, 30.0), "max_lag": (_float, 40.0),
        "threshold_sigma": (_float, 5.0), "floor": (_float, 0.05),
        "candidates": (_floats, ()), "tolerance": (_float, 0.5),
        "window": (_float, 2000.0), "bandwidth_fraction": (_float, 0.8),
    },
    "nist": {
        "sequence_length": (_int, 1000000), "sequence_count": (_int, 100),
        "workers": (_auto(_int), None), "alpha": (_float, 0.01),
        "block_frequency_m": (_int, None), "template_m": (_int, None),
        "template_blocks": (_int, None), "overlapping_m": (_int, None),
        "overlapping_block": (_int, None), "universal_L": (_auto(_int), AUTO),
        "universal_Q": (_auto(_int), AUTO), "linear_complexity_m": (_int, None),
        "serial_m": (_int, None), "apen_m": (_int, None), "excursion_min_cycles": (_int, None),
    },
    "output": {
        "directory": (_str, "run"), "trace_rows": (_int, 64),
        "save_trajectory": (_bool, True), "trajectory_csv": (_bool, False),
    },
}


@dataclass(frozen=True)
class IntegrationConfig:
    h: float
    t_end: float
    warmup: float
    decimation: int
    seed: int

    @property
    def dt(self) -> float:
        return self.h * self.decimation


@dataclass(frozen=True)
class AnalysisConfig:
    scan: tuple
    max_lag: float
    threshold_sigma: float
    floor: float
    candidates: Optional[tuple]
    tolerance: float
    window: float
    bandwidth_fraction: float


@dataclass(frozen=True)
class NistConfig:
    sequence_length: int
    sequence_count: int
    workers: Optional[int]
    params: TestParams


@dataclass(frozen=True)
class OutputConfig:
    directory: str
    trace_rows: int
    save_trajectory: bool
    trajectory_csv: bool


@dataclass(frozen=True)
class RunConfig:
    vcsel: VcselParams
    integration: IntegrationConfig
    extraction: ExtractionConfig
    channels: tuple
    duration: float
    analysis: AnalysisConfig
    nist: NistConfig
    output: OutputConfig
    source: Optional[str] = None

    def sequences_per_channel(self) -> dict:
        n, k = self.nist.sequence_count, len(self.channels)
        return {c: n // k + (i < n % k) for i, c in enumerate(self.channels)}

    def to_dict(self) -> dict:
        d = {
            "sfm": asdict(self.vcsel),
            "integration": asdict(self.integration),
            "extraction": {"M": self.extraction.M, "f_c": self.extraction.f_c,
                           "schedule": list(self.extraction.schedule),
                           "t_start": self.extraction.t_start,
                           "tie_rule": self.extraction.tie_rule,
                           "discard": self.extraction.discard,
                           "channels": list(self.channels), "duration": self.duration},
            "analysis": asdict(self.analysis),
            "nist": {"sequence_length": self.nist.sequence_length,
                     "sequence_count": self.nist.sequence_count,
                     "params": self.nist.params.to_dict()},
            "output": {"trace_rows": self.output.trace_rows,
                       "save_trajectory": self.output.save_trajectory,
                       "trajectory_csv": self.output.trajectory_csv},
        }
        return json.loads(json.dumps(d))

    def digest(self) -> str:
        """SHA-256 of the validated settings (output directory and worker count excluded)."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def with_output(self, directory) -> "RunConfig":
        return replace(self, output=replace(self.output, directory=str(directory)))


def _key_lines(text: str) -> dict:
    lines, section = {}, None
    for i, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), i)
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and section and not raw[:1].isspace():
            lines[(section, m.group(1).strip())] = i
    return lines


def parse_config(text: str, source: Optional[str] = None) -> RunConfig:
    """Parse and validate configuration text."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="__unused_default__")
    cp.optionxform = str  # keep key case (M, g_N)
    try:
        cp.read_string(text, source=source or "<config>")
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key", f"{exc.section}.{exc.option}",
                          line=exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("text before the first [section] header", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("cannot parse line", line=line) from None

    lines = _key_lines(text)
    raw: dict = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", line=lines.get((section, None)))
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError("unknown key", f"{section}.{key}",
                                  line=lines.get((section, key)))
            parser = SCHEMA[section][key][0]
            try:
                raw[(section, key)] = parser(value)
            except ValueError as exc:
                raise ConfigError(str(exc), f"{section}.{key}",
                                  line=lines.get((section, key))) from None

    def get(section, key):
        if (section, key) in raw:
            return raw[(section, key)]
        default = SCHEMA[section][key][1]
        if default is REQUIRED:
            raise ConfigError("required key is missing", f"{section}.{key}")
        return default

    def fail(key, message):
        section, name = key.split(".")
        return ConfigError(message, key, line=lines.get((section, name)))

    # sfm
    s = {k: get("sfm", k) for k in SCHEMA["sfm"]}
    try:
        vcsel = VcselParams(
            k=s["k"], alpha=s["alpha"], g_N=s["g_N"], g_a=s["g_a"], g_p=s["g_p"], g_s=s["g_s"],
            beta_sp=s["beta_sp"], mu=s["mu"], omega_0=s["omega_0"], g1=s["g1"], g2=s["g2"],
            theta_p1=math.radians(s["theta_p1_deg"]), theta_p2=math.radians(s["theta_p2_deg"]),
            tau_o1=s["tau_o1"], tau_o2=s["tau_o2"], tau_e=s["tau_e"],
            noise_enabled=s["noise"], anisotropy=s["anisotropy"])
    except ConfigurationError as exc:
        name = str(exc).split()[0]
        key = {"theta_p1": "theta_p1_deg", "theta_p2": "theta_p2_deg",
               "noise_enabled": "noise"}.get(name, name)
        raise fail(f"sfm.{key}" if key in SCHEMA["sfm"] else "sfm.k", str(exc)) from None

    # integration
    h, warmup, dec = get("integration", "h"), get("integration", "warmup"), get("integration", "decimation")
    if not h > 0:
        raise fail("integration.h", f"must be > 0, got {h}")
    if dec < 1:
        raise fail("integration.decimation", "must be >= 1")
    if warmup < 0:
        raise fail("integration.warmup", "must be >= 0")
    try:
        delay_steps(vcsel.tau_o, h, "tau_o")
        delay_steps(vcsel.tau_phase, h, "tau_e + 2 tau_o1 + tau_o2")
    except ConfigurationError as exc:
        raise fail("integration.h", str(exc)) from None

    # extraction
    M = get("extraction", "M")
    f_c = get("extraction", "f_c")
    try:
        ext = ExtractionConfig(M=M, f_c=f_c, schedule=get("extraction", "schedule"),
                               t_start=get("extraction", "t_start"),
                               tie_rule=get("extraction", "tie_rule"),
                               discard=get("extraction", "discard"))
    except TimingError as exc:
        raise fail("extraction.schedule", str(exc)) from None
    except ValueError as exc:
        msg = str(exc)
        key = next((k for k in ("M", "f_c", "tie_rule", "discard", "schedule")
                    if msg.startswith(k)), "M")
        raise fail(f"extraction.{key}", msg) from None
    channels = get("extraction", "channels")

    # nist
    seq_len = get("nist", "sequence_length")
    seq_count = get("nist", "sequence_count")
    if seq_len < 1:
        raise fail("nist.sequence_length", "must be >= 1")
    if seq_count < 2:
        raise fail("nist.sequence_count", "the suite needs at least 2 sequences")
    workers = get("nist", "workers")
    if workers is not None and workers < 1:
        raise fail("nist.workers", "must be >= 1")
    try:
        tp = TestParams.for_length(seq_len, alpha=get("nist", "alpha"))
    except ValueError as exc:
        raise fail("nist.alpha", str(exc)) from None
    overrides = {}
    for f in fields(TestParams):
        if f.name == "alpha" or (("nist", f.name) not in raw):
            continue
        v = raw[("nist", f.name)]
        if v is None and f.name not in ("universal_L", "universal_Q"):
            continue
        overrides[f.name] = v
    for name in ("universal_L", "universal_Q"):
        if raw.get(("nist", name), AUTO) is None:
            overrides[name] = None
    tp = replace(tp, **overrides)

    # bits needed from each channel and the run length that provides them
    per_channel = max(
        (seq_count // len(channels) + (i < seq_count % len(channels))) for i in range(len(channels)))
    cycles_needed = -(-(per_channel * seq_len + ext.discard) // M)
    duration = get("extraction", "duration")
    if duration is None:
        duration = cycles_needed * ext.tau
    elif not duration > 0:
        raise fail("extraction.duration", "must be > 0")
    elif ext.cycles_for(duration) < cycles_needed:
        raise fail("extraction.duration",
                   f"{duration} ns yields {ext.cycles_for(duration) * M} bits per channel; "
                   f"the nist block needs {per_channel * seq_len + ext.discard}")

    dt = h * dec
    start_offset = (ext.t_start - warmup) if ext.t_start is not None else ext.max_delay + 2 * dt
    if start_offset < ext.max_delay + dt:
        raise fail("extraction.t_start", "must leave max T_m plus one sample after the warm-up")
    needed = warmup + start_offset + duration + 4 * dt
    t_end = get("integration", "t_end")
    if t_end is None:
        step = h * dec
        t_end = math.ceil(needed / step) * step
    elif t_end < needed:
        raise fail("integration.t_end",
                   f"{t_end} ns is shorter than the {needed:.6g} ns the extraction needs")

    analysis = AnalysisConfig(
        scan=(get("analysis", "scan_start"), get("analysis", "scan_end")),
        max_lag=get("analysis", "max_lag"),
        threshold_sigma=get("analysis", "threshold_sigma"),
        floor=get("analysis", "floor"),
        candidates=get("analysis", "candidates") or None,
        tolerance=get("analysis", "tolerance"),
        window=get("analysis", "window"),
        bandwidth_fraction=get("analysis", "bandwidth_fraction"),
    )
    if not 0 < analysis.scan[0] < analysis.scan[1]:
        raise fail("analysis.scan_end", "scan window must satisfy 0 < scan_start < scan_end")
    if analysis.max_lag < analysis.scan[1]:
        raise fail("analysis.max_lag", "must be >= scan_end")
    if analysis.window < 2 * analysis.max_lag:
        raise fail("analysis.window", "must be at least twice max_lag")
    if not 0 < analysis.bandwidth_fraction < 1:
        raise fail("analysis.bandwidth_fraction", "must lie in (0, 1)")

    output = OutputConfig(directory=get("output", "directory"),
                          trace_rows=get("output", "trace_rows"),
                          save_trajectory=get("output", "save_trajectory"),
                          trajectory_csv=get("output", "trajectory_csv"))
    if output.trace_rows < 0:
        raise fail("output.trace_rows", "must be >= 0")

    return RunConfig(
        vcsel=vcsel,
        integration=IntegrationConfig(h=h, t_end=t_end, warmup=warmup, decimation=dec,
                                      seed=get("integration", "seed")),
        extraction=ext, channels=channels, duration=duration, analysis=analysis,
        nist=NistConfig(seq_len, seq_count, workers, tp), output=output, source=source)


def load_config(path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {str(p)!r} not found")
    return parse_config(p.read_text(), source=str(p))


PRESETS_DIR = Path(__file__).with_name("presets")


def preset_path(name: str) -> Path:
    p = PRESETS_DIR / f"{name}.ini"
    if not p.is_file():
        known = sorted(q.stem for q in PRESETS_DIR.glob("*.ini"))
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(known)}")
    return p
