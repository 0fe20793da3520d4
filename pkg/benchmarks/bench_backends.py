"""Compare the compiled and pure-Python iteration kernels.

    python benchmarks/bench_backends.py [--repeat N]

Each case runs the same driver on both backends, checks that the final
points agree, and reports the best wall time of ``--repeat`` runs.  With
very tight step tolerances the two backends can stop a few iterations
apart, since matrix products are summed in a different order.
"""
import argparse
import time

import numpy as np

from resavg import _backend, catalog as C
from resavg.operators import AffineMonotone, Order, ResolventAverage, Subdifferential, Weights
from resavg.solvers import StoppingRule, run_alternating, run_composition, run_proximal_point


def cases():
    sd = Subdifferential
    rng = np.random.default_rng(0)
    disk = sd(C.IndicatorBall(np.array([0.0, 2.0]), 1.0))
    line = sd(C.IndicatorAffine.from_directions(np.zeros(2), np.array([[1.0, 0.0]])))
    B = rng.standard_normal((3, 3))
    quad = sd(C.Quadratic(B @ B.T / 30 + 0.01 * np.eye(3), rng.standard_normal(3)))
    box = sd(C.IndicatorBox(-np.ones(3), np.ones(3)))
    S = rng.standard_normal((3, 3))
    rot = AffineMonotone(0.02 * np.eye(3) + (S - S.T), np.zeros(3))
    half = sd(C.IndicatorHalfspace(np.array([1.0, 1.0, 1.0]), -2.0))
    tight = StoppingRule(step_tol=1e-14, max_iters=200_000)
    return {
        "disk/line proximal point": lambda: run_proximal_point(ResolventAverage(disk, line, Weights(0.25)), [5.0, 7.0]),
        "quadratic/box alternating": lambda: run_alternating(quad, box, Weights(0.5), 10 * np.ones(3), tight).trace_x,
        "rotation/halfspace composition": lambda: run_composition(rot, half, Weights(0.3), Order.EF, np.ones(3), tight).trace,
        "fixed 100k steps": lambda: run_proximal_point(
            ResolventAverage(rot, box, Weights(0.5)), np.ones(3),
            StoppingRule(step_tol=1e-300, max_iters=100_000)),
    }


def best_time(fn, repeat):
    best, out = np.inf, None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    backends = _backend.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    before = _backend.get_backend()
    print(f"{'case':<32}{'iters':>12}" + "".join(f"{b:>12}" for b in backends) + ("   speedup" if len(backends) > 1 else ""))
    try:
        for name, fn in cases().items():
            times, traces = {}, {}
            for b in backends:
                _backend.set_backend(b)
                times[b], traces[b] = best_time(fn, args.repeat)
            ref = traces["python"]
            for b, tr in traces.items():
                assert np.allclose(tr.final, ref.final, atol=1e-8), b
            iters = "/".join(sorted({str(tr.iterations_used) for tr in traces.values()}))
            row = f"{name:<32}{iters:>12}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends)
            if "compiled" in times:
                row += f"{times['python'] / times['compiled']:>9.1f}x"
            print(row)
    finally:
        _backend.set_backend(before)


if __name__ == "__main__":
    main()
