"""Stage commands wiring simulation, delay-signature analysis, extraction and
the statistical battery into reproducible runs on disk."""

from __future__ import annotations

import hashlib
import json
import platform
import time
import traceback
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from ._backend import BACKEND
from .config import RunConfig
from .extraction import BitStream, extract, throughput, validate_timing, write_trace_csv
from .nist import run_suite
from .sfm import Trajectory, integrate
from .tdsig import autocorrelation, detect_td_peaks, estimate_bandwidth

TRAJECTORY = "trajectory.npz"
EXIT_OK, EXIT_VERDICT, EXIT_ERROR = 0, 1, 2


class StageError(RuntimeError):
    """A required upstream artifact is missing or unusable."""


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _versions() -> dict:
    return {"vcselrng": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "kernels": BACKEND}


def write_manifest(out: Path, name: str, cfg: RunConfig, files: Sequence[Path],
                   wall_time: float) -> Path:
    """Record config hash, versions, seeds, wall time and a SHA-256 per output file."""
    path = out / name
    _write_json(path, {
        "config_sha256": cfg.digest(),
        "config_source": cfg.source,
        "versions": _versions(),
        "seeds": {"integration": cfg.integration.seed},
        "wall_time_s": round(wall_time, 3),
        "files": {str(Path(f).relative_to(out)): _sha256(Path(f)) for f in sorted(set(files))},
    })
    return path


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- stages ----------------------------------------------------------------

def stage_simulate(cfg: RunConfig, out: Path, save: bool = True) -> tuple[Trajectory, list]:
    ic = cfg.integration
    traj = integrate(cfg.vcsel, h=ic.h, t_end=ic.t_end, decimation=ic.decimation,
                     seed=ic.seed, warmup=ic.warmup)
    files = []
    if save:
        traj.save_npz(out / TRAJECTORY)
        files.append(out / TRAJECTORY)
        if cfg.output.trajectory_csv:
            traj.to_csv(out / "trajectory.csv")
            files.append(out / "trajectory.csv")
    return traj, files


def _analysis_window(cfg: RunConfig, traj: Trajectory, channel: str) -> np.ndarray:
    n = int(round(cfg.analysis.window / traj.dt)) + 1
    return traj.channel(channel)[:n]


def bandwidth(cfg: RunConfig, traj: Trajectory, channel: str) -> float:
    return estimate_bandwidth(_analysis_window(cfg, traj, channel), traj.dt,
                              fraction=cfg.analysis.bandwidth_fraction).bandwidth


def stage_acf(cfg: RunConfig, out: Path, traj: Trajectory) -> tuple[dict, list]:
    a = cfg.analysis
    report = {"channels": {}}
    files = []
    for ch in ("x", "y"):
        series = _analysis_window(cfg, traj, ch)
        acf = autocorrelation(series, traj.dt, a.max_lag)
        td = detect_td_peaks(acf, scan=a.scan, threshold_sigma=a.threshold_sigma,
                             floor=a.floor, candidates=a.candidates, tolerance=a.tolerance)
        acf.to_csv(out / f"acf_{ch}.csv")
        files.append(out / f"acf_{ch}.csv")
        entry = td.to_dict()
        entry["bandwidth_GHz"] = estimate_bandwidth(
            series, traj.dt, fraction=a.bandwidth_fraction).bandwidth
        report["channels"][ch] = entry
    concealed = all(c["concealed"] for c in report["channels"].values())
    report["verdict"] = "concealed" if concealed else "signature"
    report["concealed"] = concealed
    _write_json(out / "td_report.json", report)
    files.append(out / "td_report.json")
    return report, files


def stage_extract(cfg: RunConfig, out: Path, traj: Trajectory) -> tuple[dict, dict, list]:
    streams, timing, files = {}, {}, []
    for ch in cfg.channels:
        rep = validate_timing(cfg.extraction, bandwidth(cfg, traj, ch))
        timing[ch] = rep.to_dict()
        res = extract(traj, ch, cfg.extraction, cfg.duration, trace_rows=cfg.output.trace_rows)
        path = out / f"bits_{ch}.bin"
        res.bits.save(path)
        streams[ch] = res.bits
        files += [path, Path(f"{path}.json")]
        if cfg.output.trace_rows:
            write_trace_csv(out / f"latch_trace_{ch}.csv", res)
            files.append(out / f"latch_trace_{ch}.csv")
    constraints = {
        "hard_constraints_pass": all(t["hard_constraints_pass"] for t in timing.values()),
        "channels": timing,
        "throughput_bits_per_s": throughput(cfg.extraction, len(cfg.channels)),
    }
    _write_json(out / "timing.json", constraints)
    files.append(out / "timing.json")
    return streams, constraints, files


def assemble_sequences(cfg: RunConfig, streams: dict) -> list[np.ndarray]:
    """Cut each channel's stream into ``sequence_length`` pieces; channels in order."""
    L = cfg.nist.sequence_length
    per = cfg.sequences_per_channel()
    seqs = []
    for ch in cfg.channels:
        if ch not in streams:
            continue
        bits = streams[ch].bits()
        count = min(per[ch], bits.size // L)
        seqs += [bits[i * L:(i + 1) * L] for i in range(count)]
    return seqs


def sequences_from_files(paths: Sequence, length: int) -> list[np.ndarray]:
    seqs = []
    for p in paths:
        bits = BitStream.load(p).bits()
        seqs += [bits[i * length:(i + 1) * length] for i in range(bits.size // length)]
    return seqs


def stage_nist(cfg: RunConfig, out: Path, sequences: list) -> tuple[dict, list]:
    if len(sequences) < 2:
        raise StageError(f"need at least 2 sequences of {cfg.nist.sequence_length} bits, "
                         f"got {len(sequences)}")
    report = run_suite(sequences, cfg.nist.params, workers=cfg.nist.workers)
    report.to_json(out / "nist_report.json")
    (out / "nist_table.txt").write_text(report.table() + "\n")
    return report.to_dict(), [out / "nist_report.json", out / "nist_table.txt"]


def _load_trajectory(out: Path) -> Trajectory:
    path = out / TRAJECTORY
    if not path.is_file():
        raise StageError(f"{path} not found; run the simulate stage first")
    return Trajectory.load_npz(path)


# -- commands --------------------------------------------------------------

def _guarded(command: str):
    def wrap(fn):
        def run(cfg: RunConfig, **kw) -> int:
            t0 = time.perf_counter()
            out = _outdir(cfg)
            try:
                code, files = fn(cfg, out, **kw)
            except Exception as exc:  # every failure leaves a machine-readable record
                _write_json(out / "error.json", {
                    "command": command, "error": type(exc).__name__, "message": str(exc),
                    "field": getattr(exc, "key", None),
                    "traceback": traceback.format_exc().splitlines()[-3:],
                })
                return EXIT_ERROR
            stale = out / "error.json"
            if stale.exists():
                stale.unlink()
            write_manifest(out, f"manifest_{command}.json", cfg, files, time.perf_counter() - t0)
            return code
        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run
    return wrap


@_guarded("simulate")
def cmd_simulate(cfg: RunConfig, out: Path):
    """Integrate the laser model and write ``trajectory.npz``."""
    _, files = stage_simulate(cfg, out, save=True)
    return EXIT_OK, files


@_guarded("acf")
def cmd_acf(cfg: RunConfig, out: Path):
    """ACF export and delay-signature verdict for both polarizations."""
    report, files = stage_acf(cfg, out, _load_trajectory(out))
    return (EXIT_OK if report["concealed"] else EXIT_VERDICT), files


@_guarded("extract")
def cmd_extract(cfg: RunConfig, out: Path):
    """Bit extraction for the configured channels."""
    _, constraints, files = stage_extract(cfg, out, _load_trajectory(out))
    return (EXIT_OK if constraints["hard_constraints_pass"] else EXIT_VERDICT), files


@_guarded("nist")
def cmd_nist(cfg: RunConfig, out: Path, bits: Optional[Sequence] = None):
    """Statistical battery on extracted streams or on raw bit files given in ``bits``."""
    L = cfg.nist.sequence_length
    if bits:
        seqs = sequences_from_files(bits, L)
    else:
        paths = [out / f"bits_{ch}.bin" for ch in cfg.channels]
        missing = [str(p) for p in paths if not p.is_file()]
        if missing:
            raise StageError(f"{', '.join(missing)} not found; run the extract stage first")
        seqs = assemble_sequences(cfg, {ch: BitStream.load(p)
                                        for ch, p in zip(cfg.channels, paths)})
    seqs = seqs[: cfg.nist.sequence_count]
    report, files = stage_nist(cfg, out, seqs)
    return (EXIT_OK if report["overall"] == "pass" else EXIT_VERDICT), files


@_guarded("pipeline")
def cmd_pipeline(cfg: RunConfig, out: Path):
    """All stages in order plus ``summary.json``."""
    traj, files = stage_simulate(cfg, out, save=cfg.output.save_trajectory)
    td, f = stage_acf(cfg, out, traj)
    files += f
    streams, constraints, f = stage_extract(cfg, out, traj)
    files += f
    del traj
    nist, f = stage_nist(cfg, out, assemble_sequences(cfg, streams))
    files += f
    summary = {
        "td_concealed": td["concealed"],
        "constraints": {"hard_constraints_pass": constraints["hard_constraints_pass"],
                        "stagger_ok": all(c["stagger_ok"]
                                          for c in constraints["channels"].values())},
        "nist_overall": nist["overall"],
        "throughput_bits_per_s": constraints["throughput_bits_per_s"],
    }
    ok = td["concealed"] and constraints["hard_constraints_pass"] and nist["overall"] == "pass"
    summary["verdict"] = "pass" if ok else "fail"
    _write_json(out / "summary.json", summary)
    files.append(out / "summary.json")
    return (EXIT_OK if ok else EXIT_VERDICT), files


COMMANDS = {
    "simulate": cmd_simulate,
    "acf": cmd_acf,
    "extract": cmd_extract,
    "nist": cmd_nist,
    "pipeline": cmd_pipeline,
}
