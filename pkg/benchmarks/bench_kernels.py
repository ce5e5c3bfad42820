"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--rigs N] [--seconds S]
"""

import argparse
import sys
import time

import numpy as np

from phavforge._core import _fallback
from phavforge.camera import ANCHOR_HEIGHT_M, initial_state, sample_camera_params
from phavforge.stochastic import SeedPath
from phavforge.timing import SUBSTEPS_PER_FRAME, SUBSTEP_S

try:
    from phavforge._core import _kernels as compiled
except ImportError:
    sys.exit("compiled kernels are not built; run `pip install -e . --no-build-isolation` first")


def timed(fn, *args):
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def bench_camera(rigs, seconds):
    n = int(round(seconds / SUBSTEP_S))
    t = np.arange(n + 1) * SUBSTEP_S
    prot = np.stack([1.5 * t, 0.0 * t, np.full_like(t, ANCHOR_HEIGHT_M)], axis=1)
    totals = {"compiled": 0.0, "fallback": 0.0}
    for i in range(rigs):
        rig = sample_camera_params(SeedPath(0, (("bench", i),)).stream(), "kite")
        s0 = initial_state(rig, (0.0, 0.0, 0.0)).to_vector()
        args = (prot, SUBSTEP_S, rig.kernel_params(), s0, SUBSTEPS_PER_FRAME)
        dc, a = timed(compiled.integrate_kite, *args)
        df, b = timed(_fallback.integrate_kite, *args)
        assert np.array_equal(a[0], b[0]), "backends disagree"
        totals["compiled"] += dc
        totals["fallback"] += df
    return totals


def bench_icdf(n):
    u = SeedPath(0, (("bench-u", 0),)).stream().uniforms(n)
    dc, a = timed(compiled.triangular_icdf, u, 10.0, 16.0, 13.0)
    df, b = timed(_fallback.triangular_icdf, u, 10.0, 16.0, 13.0)
    assert np.array_equal(a, b)
    return {"compiled": dc, "fallback": df}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rigs", type=int, default=10)
    ap.add_argument("--seconds", type=float, default=5.0)
    ap.add_argument("--samples", type=int, default=1_000_000)
    args = ap.parse_args()
    rows = [
        (f"camera: {args.rigs} rigs x {args.seconds:g} s", bench_camera(args.rigs, args.seconds)),
        (f"triangular icdf: {args.samples} draws", bench_icdf(args.samples)),
    ]
    print(f"{'workload':<36}{'compiled s':>12}{'fallback s':>12}{'speedup':>10}")
    for name, t in rows:
        print(f"{name:<36}{t['compiled']:>12.4f}{t['fallback']:>12.4f}{t['fallback'] / t['compiled']:>9.1f}x")


if __name__ == "__main__":
    main()
