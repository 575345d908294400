"""The compiled kernels and the pure-Python fallback must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from vcselrng import _backend, _purepy
from vcselrng.extraction import ExtractionConfig, extract
from vcselrng.sfm import integrate, paper_operating_point

core = pytest.importorskip("vcselrng._core")


def test_backend_selected():
    assert _backend.BACKEND in ("cython", "python")
    assert _backend.BACKEND == "cython"


def test_env_forces_fallback():
    code = "from vcselrng._backend import BACKEND; print(BACKEND)"
    env = dict(os.environ, VCSELRNG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                         text=True, check=True)
    assert out.stdout.strip() == "python"


def test_same_names():
    for name in ("sfm_steps", "cubic_interp", "extract_events", "bm_blocks",
                 "STATUS_OK", "STATUS_DIVERGED"):
        assert hasattr(core, name) and hasattr(_purepy, name)


def test_sfm_bitwise_before_phase_path():
    # before the 27.75 ns modulator lag only the optical path is active and both
    # kernels evaluate identical expressions
    p = paper_operating_point()
    a = integrate(p, h=5e-5, t_end=25.0, decimation=50, warmup=0.0, seed=5, backend=core,
                  record_state=True)
    b = integrate(p, h=5e-5, t_end=25.0, decimation=50, warmup=0.0, seed=5,
                  backend=_purepy, record_state=True)
    assert np.array_equal(a.I_x, b.I_x) and np.array_equal(a.N, b.N)


def test_sfm_close_after_phase_path():
    p = paper_operating_point(mu=1.5, g1=0.5, g2=0.5)
    a = integrate(p, h=1e-4, t_end=35.0, decimation=50, warmup=0.0, backend=core)
    b = integrate(p, h=1e-4, t_end=35.0, decimation=50, warmup=0.0, backend=_purepy)
    assert np.allclose(a.I_x, b.I_x, rtol=1e-9, atol=1e-12)


def test_cubic_interp_identical(rng):
    v = rng.normal(size=500)
    t = rng.uniform(0.02, 0.49 - 0.003, size=2000)
    a = core.cubic_interp(v, 0.0, 1e-3, t)
    b = _purepy.cubic_interp(v, 0.0, 1e-3, t)
    assert np.array_equal(np.asarray(a), np.asarray(b))


def test_extract_identical(short_trajectory):
    for M, fc in ((1, 20.0), (4, 10.0), (39, 34.5)):
        cfg = ExtractionConfig(M=M, f_c=fc)
        dur = 40.0
        a = extract(short_trajectory, "y", cfg, dur, trace_rows=10, backend=core)
        b = extract(short_trajectory, "y", cfg, dur, trace_rows=10, backend=_purepy)
        assert a.bits == b.bits
        assert np.array_equal(a.trace, b.trace)


def test_bm_blocks_identical(rng):
    blocks = rng.integers(0, 2, (64, 300), dtype=np.uint8)
    assert np.array_equal(np.asarray(core.bm_blocks(blocks)),
                          np.asarray(_purepy.bm_blocks(blocks)))
