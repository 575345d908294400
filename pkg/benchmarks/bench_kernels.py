"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--steps N] [--bits N]
"""

import argparse
import time

import numpy as np

from vcselrng import _purepy
from vcselrng.extraction import ExtractionConfig, extract
from vcselrng.sfm import integrate, paper_operating_point

try:
    from vcselrng import _core
except ImportError:  # extension not built
    _core = None


def timed(fn, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=20000, help="RK4 steps per integration")
    ap.add_argument("--bits", type=int, default=200000, help="bits per extraction")
    args = ap.parse_args()

    params = paper_operating_point()
    h = 5e-5
    t_end = args.steps * h
    cfg = ExtractionConfig(M=39, f_c=34.5)
    duration = (args.bits // cfg.M) * cfg.tau
    traj = integrate(params, h=h, t_end=200.0 + cfg.max_delay + duration + 1.0,
                     decimation=20, warmup=200.0)
    rng = np.random.default_rng(0)
    blocks = rng.integers(0, 2, (200, 500), dtype=np.uint8)

    backends = [("python", _purepy)] + ([("cython", _core)] if _core is not None else [])
    rows = []
    for name, kern in backends:
        t_sfm, _ = timed(lambda: integrate(params, h=h, t_end=t_end, decimation=20,
                                           warmup=0.0, backend=kern), repeat=1)
        t_ext, res = timed(lambda: extract(traj, "x", cfg, duration, backend=kern), repeat=1)
        t_bm, _ = timed(lambda: kern.bm_blocks(blocks), repeat=1)
        rows.append((name, t_sfm / args.steps * 1e9, t_ext / len(res.bits) * 1e9,
                     t_bm / blocks.shape[0] * 1e6))

    print(f"{'backend':<8} {'RK4 ns/step':>12} {'extract ns/bit':>15} {'BM us/block':>12}")
    for r in rows:
        print(f"{r[0]:<8} {r[1]:>12.1f} {r[2]:>15.1f} {r[3]:>12.1f}")
    if len(rows) == 2:
        p, c = rows
        print(f"{'speedup':<8} {p[1] / c[1]:>12.1f} {p[2] / c[2]:>15.1f} {p[3] / c[3]:>12.1f}")


if __name__ == "__main__":
    main()
