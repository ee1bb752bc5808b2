"""Online bidding: strategies, payments, optimal deterministic ratios and the
randomized lower-bound dual certificate.

A bid set is paid against a threshold ``T`` up to and including the first bid
that reaches ``T``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import _kernels
from .core import Number, is_exact

DET_RATIO_GUARD = 20_000
EXHAUSTIVE_GUARD = 24


class ThresholdUncovered(ValueError):
    """No bid reaches the threshold."""


@dataclass(frozen=True)
class Universe:
    """Either a finite strictly increasing set of positive numbers or the
    positive reals restricted to ``[low, high]`` (``high`` is the horizon)."""

    values: Optional[tuple] = None
    low: Number = 1
    high: Optional[Number] = None

    def __post_init__(self):
        if self.values is not None:
            vals = tuple(self.values)
            if not vals:
                raise ValueError("finite universe must be non-empty")
            if any(v <= 0 for v in vals):
                raise ValueError("universe values must be positive")
            if any(a >= b for a, b in zip(vals, vals[1:])):
                raise ValueError("universe values must be strictly increasing")
            object.__setattr__(self, "values", vals)
        elif self.high is None or not 0 < self.low <= self.high:
            raise ValueError("real universe needs 0 < low <= high")

    @classmethod
    def finite(cls, values) -> "Universe":
        return cls(values=tuple(sorted(set(values))))

    @classmethod
    def integers(cls, n: int) -> "Universe":
        return cls(values=tuple(range(1, n + 1)))

    @classmethod
    def reals(cls, horizon: Number, low: Number = 1) -> "Universe":
        return cls(values=None, low=low, high=horizon)

    @property
    def is_finite(self) -> bool:
        return self.values is not None

    @property
    def minimum(self) -> Number:
        return self.values[0] if self.is_finite else self.low

    @property
    def maximum(self) -> Number:
        return self.values[-1] if self.is_finite else self.high


@dataclass(frozen=True)
class BidSet:
    bids: tuple
    includes_zero_sentinel: bool = True
    _prefix: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bids = tuple(self.bids)
        if not bids:
            raise ValueError("bid set must be non-empty")
        if any(b <= 0 for b in bids):
            raise ValueError("bids must be positive")
        if any(a >= b for a, b in zip(bids, bids[1:])):
            raise ValueError("bids must be strictly increasing")
        prefix, s = [], 0
        for b in bids:
            s = s + b
            prefix.append(s)
        object.__setattr__(self, "bids", bids)
        object.__setattr__(self, "_prefix", tuple(prefix))

    def __iter__(self):
        return iter(self.bids)

    def __len__(self):
        return len(self.bids)

    def __contains__(self, b):
        return b in self.bids

    @property
    def max(self) -> Number:
        return self.bids[-1]

    def paid(self, T: Number) -> tuple:
        """Bids paid against threshold ``T``."""
        return self.bids[: self._cover_index(T) + 1]

    def _cover_index(self, T):
        i = bisect.bisect_left(self.bids, T)
        if i == len(self.bids):
            raise ThresholdUncovered(f"threshold uncovered: no bid >= {T}")
        return i


def restrict(raw: Sequence[Number], universe: Universe) -> BidSet:
    """Replace each bid by the largest universe element not above it.

    Bids with nothing below them are skipped, duplicates are dropped and the
    universe maximum is appended so every threshold is covered.
    """
    U = universe.values
    out = []
    for b in raw:
        i = bisect.bisect_right(U, b) - 1
        if i < 0:
            continue
        if not out or out[-1] != U[i]:
            out.append(U[i])
    if not out or out[-1] != U[-1]:
        out.append(U[-1])
    return BidSet(tuple(out))


def _pow2(j: int) -> Number:
    return 2**j if j >= 0 else Fraction(1, 2**-j)


def _floor_log2(x: Number) -> int:
    j = math.floor(math.log2(float(x)))
    while _pow2(j) > x:
        j -= 1
    while _pow2(j + 1) <= x:
        j += 1
    return j


def _ceil_log2(x: Number) -> int:
    j = _floor_log2(x)
    return j if _pow2(j) == x else j + 1


def doubling_bids(universe: Universe) -> BidSet:
    """Powers of two covering the universe, restricted to it when finite."""
    lo, hi = universe.minimum, universe.maximum
    powers = [_pow2(j) for j in range(_floor_log2(lo), _ceil_log2(hi) + 1)]
    if universe.is_finite:
        return restrict(powers, universe)
    return BidSet(tuple(powers))


def _exp_range(xi: float, cut: float, top: float) -> tuple[int, int]:
    """Index range [i_lo, i_hi] of ``e**(i+xi)`` from the first bid >= cut to the first bid >= top."""
    e = math.e
    i_lo = math.ceil(math.log(cut) - xi) - 1
    while e ** (i_lo + xi) < cut:
        i_lo += 1
    i_hi = max(i_lo, math.ceil(math.log(top) - xi) - 1)
    while e ** (i_hi + xi) < top:
        i_hi += 1
    return i_lo, i_hi


def truncation_cut(universe: Universe) -> float:
    """Bids below ``min/e**2`` are dropped; they cost almost nothing."""
    return float(universe.minimum) / math.e**2


def randomized_bids(universe: Universe, seed: Optional[int] = None, xi: Optional[float] = None) -> BidSet:
    """Randomly shifted powers of e.

    ``xi`` is drawn uniformly from [0, 1) with ``numpy.random.default_rng(seed)``
    unless given. Bids ``e**(i + xi)`` run over all integers ``i`` from the
    truncation cut up to the first bid covering the universe maximum.
    """
    if xi is None:
        xi = float(np.random.default_rng(seed).random())
    cut = truncation_cut(universe)
    i_lo, i_hi = _exp_range(xi, cut, float(universe.maximum))
    raw = [math.e ** (i + xi) for i in range(i_lo, i_hi + 1)]
    if universe.is_finite:
        return restrict(raw, universe)
    return BidSet(tuple(raw))


def payment(bids: BidSet, T: Number) -> Number:
    """Sum of the bids up to and including ``T+ = min{b >= T}``."""
    return bids._prefix[bids._cover_index(T)]


def _ratio(p, T):
    if is_exact(p) and is_exact(T):
        return Fraction(p) / Fraction(T)
    return float(p) / float(T)


def ratio_table(bids: BidSet, universe: Universe) -> list[tuple]:
    """``(T, payment, ratio)`` rows over a finite universe, or over the
    critical probes of a real universe (``T = low`` and ``T -> b+`` for each
    bid ``b`` in ``[low, high)``; the latter reported at ``T = b``)."""
    rows = []
    if universe.is_finite:
        for T in universe.values:
            p = payment(bids, T)
            rows.append((T, p, _ratio(p, T)))
        return rows
    lo, hi = universe.low, universe.high
    p = payment(bids, lo)
    rows.append((lo, p, _ratio(p, lo)))
    for i, b in enumerate(bids.bids):
        if lo <= b < hi:
            if i + 1 == len(bids.bids):
                raise ThresholdUncovered(f"threshold uncovered: no bid above {b}")
            p = bids._prefix[i + 1]
            rows.append((b, p, _ratio(p, b)))
    return rows


def competitive_ratio(bids: BidSet, universe: Universe) -> Number:
    """Worst payment/T over the universe (a supremum on the real line)."""
    return max(r for _, _, r in ratio_table(bids, universe))


def worst_threshold(bids: BidSet, universe: Universe) -> tuple:
    """``(T, payment, ratio)`` at the worst threshold; first one on ties."""
    best = None
    for row in ratio_table(bids, universe):
        if best is None or row[2] > best[2]:
            best = row
    return best


# ---------------------------------------------------------------------------
# Monte-Carlo expected ratios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpectedRatio:
    thresholds: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    trials: int

    @property
    def max_mean(self) -> float:
        return float(self.mean.max())

    @property
    def argmax_T(self) -> float:
        return float(self.thresholds[int(np.argmax(self.mean))])


def trial_xis(trials: int, seed: int) -> np.ndarray:
    """One uniform [0,1) shift per trial, trial ``i`` seeded with ``seed + i``."""
    return np.array([np.random.default_rng(seed + i).random() for i in range(trials)])


Strategy = Union[str, Callable[[Universe, int], BidSet]]


def expected_ratio(
    strategy: Strategy,
    universe: Universe,
    trials: int,
    seed: int = 0,
    thresholds: Optional[Sequence[Number]] = None,
) -> ExpectedRatio:
    """Monte-Carlo estimate of E[payment]/T per threshold.

    ``strategy`` is ``"rand"``, ``"det"`` or a callable ``(universe, seed) -> BidSet``.
    Thresholds default to every element of a finite universe and must be given
    for the real line.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if thresholds is None:
        if not universe.is_finite:
            raise ValueError("thresholds required for a real universe")
        thresholds = universe.values
    Ts = np.asarray([float(t) for t in thresholds])
    if np.any(np.diff(Ts) < 0):
        order = np.argsort(Ts, kind="stable")
        Ts = Ts[order]

    if strategy == "rand":
        xis = trial_xis(trials, seed)
        cut = truncation_cut(universe)
        top = float(universe.maximum)
        i_lo = _exp_range(0.999999999, cut, top)[0] - 1
        i_hi = _exp_range(0.0, cut, top)[1] + 1
        U = np.asarray([float(v) for v in universe.values]) if universe.is_finite else np.empty(0)
        sums, sq, uncovered = _kernels.lattice_payment_sums(math.e, xis, i_lo, i_hi, cut, U, Ts)
        if uncovered:
            raise ThresholdUncovered(f"{uncovered} (trial, threshold) pairs uncovered")
        mean = sums / trials
        var = np.maximum(sq / trials - mean**2, 0.0)
    else:
        if strategy == "det":
            bid_sets = [doubling_bids(universe)]
            weights = [trials]
        else:
            bid_sets = [strategy(universe, seed + i) for i in range(trials)]
            weights = [1] * trials
        sums = np.zeros(Ts.size)
        sq = np.zeros(Ts.size)
        for B, wgt in zip(bid_sets, weights):
            r = np.array([float(payment(B, T)) / T for T in Ts])
            sums += wgt * r
            sq += wgt * r * r
        mean = sums / trials
        var = np.maximum(sq / trials - mean**2, 0.0)
        if strategy == "det":
            var = np.zeros_like(mean)
    stderr = np.sqrt(var / trials) if trials > 1 else np.zeros_like(mean)
    return ExpectedRatio(Ts, mean, stderr, trials)


# ---------------------------------------------------------------------------
# optimal deterministic bidding over [n]
# ---------------------------------------------------------------------------


def det_ratio(bids: Sequence[int]) -> Fraction:
    """Exact competitive ratio of an integer bid set on ``[max(bids)]``.

    The worst threshold for bid ``b_i`` is one above the previous bid.
    """
    s, prev, worst = 0, 0, Fraction(0)
    for b in bids:
        s += b
        worst = max(worst, Fraction(s, prev + 1))
        prev = b
    return worst


def feasible_bids(n: int, r: Fraction) -> Optional[list]:
    """A bid set on ``[n]`` with ratio at most ``r``, or ``None`` if none exists."""
    best, parent = _kernels.det_dp(n, r.numerator, r.denominator)
    if parent[n] < 0:
        return None
    bids, b = [], n
    while b > 0:
        bids.append(int(b))
        b = int(parent[b])
    return bids[::-1]


def optimal_det_ratio(n: int) -> tuple[Fraction, BidSet]:
    """Exact optimal deterministic competitive ratio over ``U = [n]``.

    Bisection on the ratio with :func:`feasible_bids` as the test. Every
    attainable ratio is ``S/(b+1)`` with denominator at most n, so two
    distinct candidates differ by at least ``1/n**2``; once the bracket is
    that narrow the upper end is optimal. Midpoints are snapped to the grid
    ``1/(4 n**2)`` so the integer arithmetic stays within int64.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > DET_RATIO_GUARD:
        raise ValueError(f"n={n} above guard {DET_RATIO_GUARD}")
    lo, hi = Fraction(0), det_ratio(feasible_bids(n, Fraction(4)))
    gap = Fraction(1, n * n)
    grid = 4 * n * n
    while hi - lo >= gap:
        mid = Fraction(math.floor((lo + hi) / 2 * grid), grid)
        bids = feasible_bids(n, mid)
        if bids is None:
            lo = mid
        else:
            hi = det_ratio(bids)
    return hi, BidSet(tuple(feasible_bids(n, hi)))


def exhaustive_det_ratio(n: int) -> tuple[Fraction, BidSet]:
    """Brute force over every bid set containing n; the oracle for :func:`optimal_det_ratio`."""
    if not 1 <= n <= EXHAUSTIVE_GUARD:
        raise ValueError(f"n must be in [1, {EXHAUSTIVE_GUARD}]")
    mask = _kernels.exhaustive_det(n)
    bids = [v for v in range(1, n) if (mask >> (v - 1)) & 1] + [n]
    return det_ratio(bids), BidSet(tuple(bids))


# ---------------------------------------------------------------------------
# dual certificate
# ---------------------------------------------------------------------------

ALPHA_MARGIN = 1e-9


@dataclass(frozen=True)
class DualCertificate:
    """Weights ``mu``, ``pi`` on ``[n]`` (array index ``T-1``)."""

    n: int
    mu: np.ndarray
    pi: np.ndarray
    alpha: Number = 1.0

    @property
    def exact(self) -> bool:
        return any(isinstance(x, Fraction) for x in self.mu) or any(isinstance(x, Fraction) for x in self.pi)

    @property
    def bound(self) -> Number:
        if self.exact:
            sp = sum(Fraction(x) for x in self.pi)
            return sum(Fraction(x) for x in self.mu) / sp if sp else Fraction(0)
        sp = math.fsum(self.pi)
        return math.fsum(self.mu) / sp if sp else 0.0

    def with_alpha(self, alpha: Number) -> "DualCertificate":
        """Same certificate with mu rescaled to a new alpha."""
        mu = np.asarray(self.mu) * (alpha / self.alpha)
        return DualCertificate(self.n, mu, self.pi, alpha)


def _suffix_weighted(pi: np.ndarray) -> np.ndarray:
    """``L[t] = sum_{T >= t} pi(T)/T`` (0-based t)."""
    T = np.arange(1, pi.size + 1, dtype=np.float64)
    return np.cumsum((pi / T)[::-1])[::-1]


def dual_violation(cert: DualCertificate) -> Optional[tuple]:
    """First pair ``(t, b)`` (1-based) violating the feasibility inequality, or ``None``.

    Checks ``sum_{T=t}^{n} pi(T)/T >= (1/b) sum_{T=t}^{b} mu(T)`` for all
    ``1 <= t <= b <= n``; exact when any weight is a Fraction.
    """
    n = cert.n
    if len(cert.mu) != n or len(cert.pi) != n:
        raise ValueError("mu and pi must have length n")
    if cert.exact:
        mu = [Fraction(x) for x in cert.mu]
        pi = [Fraction(x) for x in cert.pi]
        L = [Fraction(0)] * (n + 1)
        for t in range(n - 1, -1, -1):
            L[t] = L[t + 1] + pi[t] / (t + 1)
        for t in range(n):
            s = Fraction(0)
            for b in range(t, n):
                s += mu[b]
                if (b + 1) * L[t] < s:
                    return t + 1, b + 1
        return None
    mu = np.asarray(cert.mu, dtype=np.float64)
    pi = np.asarray(cert.pi, dtype=np.float64)
    nz = np.nonzero(mu)[0]
    if nz.size == 0:
        return None
    R, arg = _kernels.dual_window_max(mu, int(nz[-1]))
    bad = np.nonzero(_suffix_weighted(pi) < R)[0]
    if bad.size == 0:
        return None
    t = int(bad[0])
    return t + 1, int(arg[t]) + 1


def verify_dual_condition(cert: DualCertificate) -> bool:
    return dual_violation(cert) is None


def dual_certificate(U: int) -> DualCertificate:
    """Harmonic certificate on ``[n]`` with ``n = ceil(U**2 ln U)``.

    ``mu(T) = alpha/T`` on ``[U, U**2]`` and ``pi(T) = 1/T`` on ``[U, n]``.
    ``alpha`` is the largest value meeting the feasibility inequality, found
    in closed form from the worst window per start ``t`` and then shrunk by a
    relative ``ALPHA_MARGIN`` so float re-verification is robust.
    """
    if U < 2:
        raise ValueError("U must be >= 2")
    n = math.ceil(U * U * math.log(U))
    T = np.arange(1, n + 1, dtype=np.float64)
    top = min(U * U, n)
    mu0 = np.where((T >= U) & (T <= top), 1.0 / T, 0.0)
    pi = np.where(T >= U, 1.0 / T, 0.0)
    R, _ = _kernels.dual_window_max(mu0, top - 1)
    L = _suffix_weighted(pi)
    pos = R > 0
    alpha_star = float(np.min(L[pos] / R[pos]))
    alpha = alpha_star * (1 - ALPHA_MARGIN)
    return DualCertificate(n, alpha * mu0, pi, alpha)
