"""Compare the numba and pure-numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Timings are best-of-``repeat`` wall clock after one warm-up call, so numba
compilation time is excluded (it is reported separately).
"""
import argparse
import time
import timeit

import numpy as np

from dcgrid import kernels
from dcgrid.coop import build_coop
from dcgrid.sim import RK4, Exact, Scenario, run_scenario
from dcgrid.testing import default_rng, reference_instance


def best(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def cases():
    net, pd, cc = reference_instance()
    Ac = build_coop(net, pd, cc).Ac
    x0 = np.concatenate([np.zeros(3), pd.Ud])
    zero = np.zeros(6)
    h = float(pd.tau.min()) / 50
    rng = default_rng()
    Phi = np.eye(6) + h * Ac
    coeffs = rng.normal(size=(100_000, 6))
    phases = [("PrimaryOnly", 0.5), ("Cooperative", 1.5)]
    return {
        "rk4_trajectory (2 s, dt=tau/50)": lambda name: getattr(kernels, f"rk4_trajectory_{name}")(
            Ac, zero, x0, h, 2000, 5),
        "affine_recurrence (2000 steps)": lambda name: getattr(kernels, f"affine_recurrence_{name}")(
            Phi, zero, x0, 2000),
        "hurwitz_batch (1e5 rows)": lambda name: getattr(kernels, f"hurwitz_batch_{name}")(coeffs),
        "run_scenario Exact (2 s)": lambda name: _scenario(name, Scenario(net, pd, phases, cc, method=Exact())),
        "run_scenario RK4 (2 s)": lambda name: _scenario(name, Scenario(net, pd, phases, cc, method=RK4())),
    }


def _scenario(name, s):
    kernels.set_backend(name)
    return run_scenario(s)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    saved = kernels.get_backend()
    t0 = time.perf_counter()
    for fn in cases().values():
        fn("numba")
    compile_s = time.perf_counter() - t0

    print(f"{'kernel':36s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>9s}")
    try:
        for label, fn in cases().items():
            t_np = best(lambda: fn("numpy"), args.repeat)
            t_nb = best(lambda: fn("numba"), args.repeat)
            print(f"{label:36s} {t_np * 1e3:12.3f} {t_nb * 1e3:12.3f} {t_np / t_nb:8.1f}x")
    finally:
        kernels.set_backend(saved)
    print(f"first-call numba overhead (JIT or cache load): {compile_s:.2f} s")


if __name__ == "__main__":
    main()
