"""Time each hot kernel on its numba and numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Numba timings exclude the first (compiling) call.
"""

import argparse
import math
import time

import numpy as np

from oblimed import _kernels as K
from oblimed._accel import HAVE_NUMBA
from oblimed.generate import generate_random_metric


def cases():
    inst = generate_random_metric(20, 14, seed=0)
    D, w = np.asarray(inst._kd), np.asarray(inst._kw)
    xis = np.random.default_rng(0).random(20_000)
    U = np.arange(1.0, 1001.0)
    T = np.array([10.0, 100.0, 1000.0])
    mu = np.where(np.arange(1, 3063) >= 30, 1.0 / np.arange(1, 3063), 0.0)
    return {
        "best_subset (F=14, k=6)": (K.best_subset_nb, K.best_subset_np, (D, w, 6)),
        "all_subset_costs (F=14)": (K.all_subset_costs_nb, K.all_subset_costs_np, (D, w)),
        "lattice_payment_sums (2e4 trials, U=[1e3])": (
            K.lattice_payment_sums_nb,
            K.lattice_payment_sums_np,
            (math.e, xis, -10, 8, 1 / math.e**2, U, T),
        ),
        "dual_window_max (n=3062)": (K.dual_window_max_nb, K.dual_window_max_np, (mu, 899)),
        "exhaustive_det (n=16)": (K.exhaustive_det_nb, K.exhaustive_det_np, (16,)),
        "det_dp (n=2e4)": (K.det_dp_nb, K.det_dp_py, (20_000, 19, 5)),
    }


def best_of(fn, args, repeat):
    best = math.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        print("numba not installed; numba column runs the plain-Python bodies")
    print(f"{'kernel':<45} {'numba [s]':>10} {'numpy [s]':>10} {'speedup':>8}")
    for name, (nb, np_, a) in cases().items():
        nb(*a)  # compile
        t_nb = best_of(nb, a, args.repeat)
        t_np = best_of(np_, a, args.repeat)
        print(f"{name:<45} {t_nb:>10.4f} {t_np:>10.4f} {t_np / t_nb:>8.1f}")


if __name__ == "__main__":
    main()
