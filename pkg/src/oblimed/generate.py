"""Seeded random metric instances."""

from fractions import Fraction

import numpy as np

from .core import InstanceError, MedianInstance


def _metric_closure(D: np.ndarray) -> np.ndarray:
    # d[y, f] <- min_g d'(f, g) + d[y, g] until stable
    D = D.copy()
    while True:
        dp = (D[:, :, None] + D[:, None, :]).min(axis=0)
        new = np.minimum(D, (D[:, None, :] + dp[None, :, :]).min(axis=2))
        if np.array_equal(new, D):
            return D
        D = new


def generate_random_metric(
    n_customers: int,
    n_facilities: int,
    seed: int,
    numeric_mode: str = "rational",
    denominator: int = 10**6,
) -> MedianInstance:
    """Uniform points in the unit square, Euclidean distances rounded to
    ``1/denominator`` and then closed under the facility triangle inequality."""
    if n_customers < 1 or n_facilities < 1:
        raise InstanceError("need at least one customer and one facility")
    if numeric_mode not in ("rational", "f64"):
        raise InstanceError(f"unknown numeric_mode {numeric_mode!r}")
    rng = np.random.default_rng(seed)
    cust = rng.random((n_customers, 2))
    fac = rng.random((n_facilities, 2))
    eu = np.sqrt(((cust[:, None, :] - fac[None, :, :]) ** 2).sum(axis=2))
    num = _metric_closure(np.rint(eu * denominator).astype(np.int64))
    if numeric_mode == "rational":
        dist = [[Fraction(int(v), denominator) for v in row] for row in num]
    else:
        dist = (num / denominator).tolist()
    customers = [f"c{i}" for i in range(n_customers)]
    facilities = [f"f{j}" for j in range(n_facilities)]
    return MedianInstance(customers, facilities, dist, None, numeric_mode)
