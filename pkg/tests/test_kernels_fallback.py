"""The numba and pure-numpy kernel paths must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from oblimed import _kernels as K
from oblimed._accel import DISABLE_ENV


def test_best_subset_paths_agree():
    rng = np.random.default_rng(0)
    for _ in range(10):
        D = rng.integers(0, 50, size=(9, 7)).astype(np.int64)
        w = rng.integers(1, 4, size=9).astype(np.int64)
        for k in (1, 3, 7):
            a, ca = K.best_subset_nb(D, w, k)
            b, cb = K.best_subset_np(D, w, k)
            assert ca == cb and np.array_equal(a, b)


def test_all_subset_costs_paths_agree():
    rng = np.random.default_rng(1)
    D = rng.integers(0, 50, size=(6, 8)).astype(np.int64)
    w = rng.integers(1, 4, size=6).astype(np.int64)
    a = K.all_subset_costs_nb(D, w)
    b = K.all_subset_costs_np(D, w)
    assert np.array_equal(a[1:], b[1:])
    for mask in (1, 5, 255):
        cols = [j for j in range(8) if mask >> j & 1]
        assert a[mask] == (w * D[:, cols].min(axis=1)).sum()


@pytest.mark.parametrize("universe", [np.empty(0), np.arange(1.0, 301.0)])
def test_lattice_paths_agree(universe):
    xis = np.random.default_rng(2).random(500)
    T = np.array([1.0, 7.0, 50.0, 300.0])
    cut = 1.0 / np.e**2 if universe.size else 1e-3
    args = (np.e, xis, -10, 8, cut, universe, T)
    s1, q1, u1 = K.lattice_payment_sums_nb(*args)
    s2, q2, u2 = K.lattice_payment_sums_np(*args)
    assert u1 == u2 == 0
    assert np.allclose(s1, s2, rtol=1e-12) and np.allclose(q1, q2, rtol=1e-12)


def test_dual_window_paths_agree():
    mu = np.random.default_rng(3).random(200)
    mu[:20] = 0
    R1, a1 = K.dual_window_max_nb(mu, 150)
    R2, a2 = K.dual_window_max_np(mu, 150)
    assert np.allclose(R1, R2, rtol=1e-12) and np.array_equal(a1[:151], a2[:151])


@pytest.mark.parametrize("n", [1, 2, 5, 9, 12])
def test_exhaustive_paths_agree(n):
    assert K.exhaustive_det_nb(n) == K.exhaustive_det_np(n)


def test_det_dp_paths_agree():
    for n, num, den in [(10, 13, 5), (50, 3, 1), (200, 7, 2), (30, 2, 1)]:
        b1, p1 = K.det_dp_nb(n, num, den)
        b2, p2 = K.det_dp_py(n, num, den)
        assert np.array_equal(b1, b2) and np.array_equal(p1, p2)


def test_env_flag_selects_numpy_path():
    code = "from oblimed import _accel; from oblimed.bidding import optimal_det_ratio; print(_accel.USE_NUMBA, optimal_det_ratio(10)[0])"
    env = dict(os.environ, **{DISABLE_ENV: "1"})
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "13/5"]
