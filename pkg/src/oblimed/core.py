"""Median instances, service cost, facility-facility distances, metric checks and
the nearest-subset selection used by the cost-competitive reduction.

Two numeric modes are supported. ``"f64"`` keeps a float64 distance matrix.
``"rational"`` keeps :class:`fractions.Fraction` entries; internally the matrix
is scaled by the least common denominator so every hot loop runs on integers
and nothing is ever rounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Hashable, Iterable, Optional, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]
FacilitySet = frozenset

NUMERIC_MODES = ("f64", "rational")
REL_TOL = 1e-9

# largest magnitude we let the int64 kernels accumulate
_INT64_BUDGET = 2**62


class InstanceError(ValueError):
    """Raised for malformed instances or out-of-domain requests."""


def is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def approx_le(a: Number, b: Number, rel: float = REL_TOL) -> bool:
    """``a <= b``; exact for rationals, relative tolerance for floats."""
    if is_exact(a) and is_exact(b):
        return a <= b
    if math.isinf(b):
        return True
    return float(a) <= float(b) + rel * max(abs(float(b)), 1.0)


def approx_eq(a: Number, b: Number, rel: float = REL_TOL) -> bool:
    return approx_le(a, b, rel) and approx_le(b, a, rel)


def safe_ratio(num: Number, den: Number) -> Number:
    """``num/den`` with 0/0 = 1 and x/0 = inf."""
    if den == 0:
        return Fraction(1) if num == 0 else math.inf
    if is_exact(num) and is_exact(den):
        return Fraction(num) / Fraction(den)
    return float(num) / float(den)


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    L = 1
    for v in values:
        L = math.lcm(L, v.denominator)
    return L


def _as_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, float):
        if not math.isfinite(v):
            raise InstanceError(f"non-finite entry {v!r}")
        return Fraction(v)
    return Fraction(v)


@dataclass(frozen=True, eq=False)
class MedianInstance:
    """Customers, facilities and the customer-to-facility distance matrix.

    Parameters
    ----------
    customers, facilities : sequence of hashable ids
    dist : array-like, shape (n_customers, n_facilities)
        ``dist[u][f]`` is the cost of serving customer ``u`` from facility ``f``.
    weights : array-like, optional
        Non-negative customer weights, default 1.
    numeric_mode : {"f64", "rational"}

    Facility order in ``facilities`` is the id order used for every tie-break.
    """

    customers: tuple
    facilities: tuple
    dist: np.ndarray
    weights: np.ndarray = None
    numeric_mode: str = "f64"
    _kd: np.ndarray = field(init=False, repr=False)
    _kw: np.ndarray = field(init=False, repr=False)
    _dscale: Fraction = field(init=False, repr=False)
    _wscale: Fraction = field(init=False, repr=False)
    _fpos: dict = field(init=False, repr=False)

    def __post_init__(self):
        mode = self.numeric_mode
        if mode not in NUMERIC_MODES:
            raise InstanceError(f"unknown numeric_mode {mode!r}")
        customers = tuple(self.customers)
        facilities = tuple(self.facilities)
        if not customers:
            raise InstanceError("instance needs at least one customer")
        if not facilities:
            raise InstanceError("instance needs at least one facility")
        if len(set(customers)) != len(customers):
            raise InstanceError("duplicate customer ids")
        if len(set(facilities)) != len(facilities):
            raise InstanceError("duplicate facility ids")
        C, F = len(customers), len(facilities)

        raw = np.asarray(self.dist, dtype=object if mode == "rational" else np.float64)
        if raw.shape != (C, F):
            raise InstanceError(f"dist has shape {raw.shape}, expected {(C, F)}")
        w_raw = self.weights
        if w_raw is None:
            w_raw = [1] * C
        w_raw = np.asarray(w_raw, dtype=object if mode == "rational" else np.float64)
        if w_raw.shape != (C,):
            raise InstanceError(f"weights has shape {w_raw.shape}, expected {(C,)}")

        if mode == "f64":
            dist = raw.astype(np.float64)
            weights = w_raw.astype(np.float64)
            if not (np.all(np.isfinite(dist)) and np.all(np.isfinite(weights))):
                raise InstanceError("entries must be finite")
            if (dist < 0).any() or (weights < 0).any():
                raise InstanceError("entries must be non-negative")
            dist.flags.writeable = False
            weights.flags.writeable = False
            kd, kw = dist, weights
            dscale = wscale = Fraction(1)
        else:
            dist = np.vectorize(_as_fraction, otypes=[object])(raw)
            weights = np.array([_as_fraction(x) for x in w_raw], dtype=object)
            if any(x < 0 for x in dist.flat) or any(x < 0 for x in weights):
                raise InstanceError("entries must be non-negative")
            Ld = _lcm_denominators(dist.flat)
            Lw = _lcm_denominators(weights)
            kd = np.array([[int(x * Ld) for x in row] for row in dist], dtype=object)
            kw = np.array([int(x * Lw) for x in weights], dtype=object)
            dmax = max(int(x) for x in kd.flat)
            wsum = sum(int(x) for x in kw)
            if 3 * dmax <= _INT64_BUDGET and dmax * max(wsum, 1) <= _INT64_BUDGET:
                kd = kd.astype(np.int64)
                kw = kw.astype(np.int64)
            dscale, wscale = Fraction(1, Ld), Fraction(1, Lw)
            dist.flags.writeable = False
            weights.flags.writeable = False
        kd.flags.writeable = False
        kw.flags.writeable = False

        set_ = object.__setattr__
        set_(self, "customers", customers)
        set_(self, "facilities", facilities)
        set_(self, "dist", dist)
        set_(self, "weights", weights)
        set_(self, "_kd", kd)
        set_(self, "_kw", kw)
        set_(self, "_dscale", dscale)
        set_(self, "_wscale", wscale)
        set_(self, "_fpos", {f: i for i, f in enumerate(facilities)})

    # -- shape and ids -------------------------------------------------------

    @property
    def n_customers(self) -> int:
        return len(self.customers)

    @property
    def n_facilities(self) -> int:
        return len(self.facilities)

    @property
    def exact(self) -> bool:
        return self.numeric_mode == "rational"

    def index_of(self, f: Hashable) -> int:
        try:
            return self._fpos[f]
        except KeyError:
            raise InstanceError(f"unknown facility {f!r}") from None

    def indices(self, X: Iterable[Hashable]) -> np.ndarray:
        """Sorted facility indices of ``X``."""
        return np.array(sorted({self.index_of(f) for f in X}), dtype=np.int64)

    def ids(self, idx: Iterable[int]) -> FacilitySet:
        return frozenset(self.facilities[int(i)] for i in idx)

    def sort_ids(self, X: Iterable[Hashable]) -> list:
        return sorted(X, key=self.index_of)

    # -- kernel-space numbers --------------------------------------------------
    # Kernel numbers are scaled integers in rational mode and plain floats
    # otherwise; these helpers convert back to user-facing values.

    def distance_value(self, x) -> Number:
        if self.exact:
            return Fraction(int(x)) * self._dscale
        return float(x)

    def cost_value(self, x) -> Number:
        if self.exact:
            return Fraction(int(x)) * self._dscale * self._wscale
        return float(x)

    def kernel_cost(self, idx) -> Union[int, float]:
        """Weighted service cost of a facility index array, in kernel units."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            raise InstanceError("cost of empty facility set undefined")
        return self._kw @ self._kd[:, idx].min(axis=1)

    def service_distances(self, idx) -> np.ndarray:
        """Per-customer ``d_{uX}`` in kernel units."""
        idx = np.asarray(idx, dtype=np.int64)
        return self._kd[:, idx].min(axis=1)

    @cached_property
    def kernel_facility_distances(self) -> np.ndarray:
        kd = self._kd
        out = kd[0][:, None] + kd[0][None, :]
        for x in range(1, kd.shape[0]):
            out = np.minimum(out, kd[x][:, None] + kd[x][None, :])
        out.flags.writeable = False
        return out

    def scaled(self, c: Number) -> "MedianInstance":
        """Copy with every distance multiplied by ``c``."""
        return MedianInstance(
            self.customers,
            self.facilities,
            self.dist * c,
            self.weights,
            self.numeric_mode,
        )


def as_facility_set(instance: MedianInstance, X: Iterable[Hashable]) -> FacilitySet:
    X = frozenset(X)
    for f in X:
        instance.index_of(f)
    return X


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def cost(instance: MedianInstance, X: Iterable[Hashable]) -> Number:
    """Weighted service cost ``sum_u w(u) min_{f in X} d(u, f)``."""
    idx = instance.indices(X)
    if idx.size == 0:
        raise InstanceError("cost of empty facility set undefined")
    return instance.cost_value(instance.kernel_cost(idx))


def facility_distance(instance: MedianInstance, f: Hashable, g: Hashable) -> Number:
    """Distance between two facilities routed through the best customer."""
    i, j = instance.index_of(f), instance.index_of(g)
    return instance.distance_value(instance.kernel_facility_distances[i, j])


@dataclass(frozen=True)
class MetricReport:
    is_metric: bool
    lambda_star: Number
    witness: Optional[tuple] = None  # (f, x, g, y) ids

    def is_lambda_relaxed(self, lam: Number) -> bool:
        return approx_le(self.lambda_star, lam)


def metric_report(instance: MedianInstance) -> MetricReport:
    """Smallest ``lam >= 1`` with ``d(f,y) <= lam (d(f,x) + d(x,g) + d(g,y))``.

    All facility pairs ``f, g`` and customer pairs ``x, y`` are covered. The
    inner minimum over ``x`` is exactly the facility distance ``d'(f, g)``,
    so the scan runs over ``(f, g, y)`` with the best ``x`` recorded as the
    witness; this is the same maximum as the full quadruple scan.
    """
    kd = instance._kd
    dp = instance.kernel_facility_distances  # [f, g]
    # num[y, f, g] = d(y, f); den[y, f, g] = d'(f, g) + d(y, g)
    num = np.broadcast_to(kd[:, :, None], (kd.shape[0],) + dp.shape)
    den = dp[None, :, :] + kd[:, None, :]

    zero_den = den == 0
    bad_zero = zero_den & (num > 0)
    if bad_zero.any():
        y, f, g = (int(v[0]) for v in np.nonzero(bad_zero))
        return MetricReport(False, math.inf, _witness(instance, f, g, y))

    if instance.exact:
        violated = num > den
    else:
        violated = num > den * (1 + REL_TOL)
    if not violated.any():
        return MetricReport(True, Fraction(1) if instance.exact else 1.0, None)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(zero_den, 0.0, num.astype(np.float64) / np.where(zero_den, 1, den).astype(np.float64))
    fmax = float(ratio.max())
    if instance.exact:
        cand = np.argwhere(ratio >= fmax * (1 - 1e-9))
        best, best_at = None, None
        for y, f, g in cand:
            r = Fraction(int(num[y, f, g]), int(den[y, f, g]))
            if best is None or r > best:
                best, best_at = r, (int(y), int(f), int(g))
        lam, (y, f, g) = max(best, Fraction(1)), best_at
    else:
        y, f, g = (int(v) for v in np.unravel_index(int(np.argmax(ratio)), ratio.shape))
        lam = max(fmax, 1.0)
    return MetricReport(False, lam, _witness(instance, f, g, y))


def _witness(instance, f, g, y):
    kd = instance._kd
    x = int(np.argmin(kd[:, f] + kd[:, g]))
    return (
        instance.facilities[f],
        instance.customers[x],
        instance.facilities[g],
        instance.customers[y],
    )


def is_lambda_relaxed(instance: MedianInstance, lam: Number) -> bool:
    return metric_report(instance).is_lambda_relaxed(lam)


def gamma_indices(instance: MedianInstance, A: Sequence[int], B: Sequence[int]) -> np.ndarray:
    """Index-level nearest subset; see :func:`gamma`."""
    A = np.array(sorted(set(int(a) for a in A)), dtype=np.int64)
    B = np.array(sorted(set(int(b) for b in B)), dtype=np.int64)
    if A.size == 0 or B.size == 0:
        raise InstanceError("gamma needs non-empty A and B")
    dp = instance.kernel_facility_distances[np.ix_(A, B)]  # rows: A, cols: B
    target = dp.min(axis=1)
    # argmin returns the first minimum, i.e. the smallest facility index
    chosen = sorted({int(B[int(np.argmin(row))]) for row in dp})
    for g in sorted(chosen, reverse=True):
        rest = [h for h in chosen if h != g]
        if not rest:
            continue
        cols = np.searchsorted(B, rest)
        if np.array_equal(dp[:, cols].min(axis=1), target):
            chosen = rest
    return np.array(chosen, dtype=np.int64)


def gamma(instance: MedianInstance, A: Iterable[Hashable], B: Iterable[Hashable]) -> FacilitySet:
    """Inclusion-minimal ``G`` subset of ``B`` with ``d'(a, G) = d'(a, B)`` for all ``a`` in ``A``.

    Ties go to the smallest facility index: each ``a`` (ascending) picks its
    nearest element of ``B``, then members are dropped in descending index
    order whenever that keeps every nearest distance intact.
    """
    return instance.ids(gamma_indices(instance, instance.indices(A), instance.indices(B)))
