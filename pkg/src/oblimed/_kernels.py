"""Hot loops, each in a numba flavour (``*_nb``) and a numpy flavour (``*_np``).

The public names at the bottom dispatch on :data:`oblimed._accel.USE_NUMBA`.
Integer matrices stay exact on both paths. Object-dtype matrices (Python ints
that would overflow int64) always take the numpy path.
"""

import heapq
import itertools
import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# k-median subset enumeration
# ---------------------------------------------------------------------------


@njit
def _subset_cost_nb(D, w, idx):
    total = w[0] * D[0, 0] * 0
    for u in range(D.shape[0]):
        m = D[u, idx[0]]
        for j in range(1, idx.size):
            v = D[u, idx[j]]
            if v < m:
                m = v
        total += w[u] * m
    return total


@njit
def best_subset_nb(D, w, k):
    F = D.shape[1]
    idx = np.arange(k)
    best = idx.copy()
    best_cost = _subset_cost_nb(D, w, idx)
    while True:
        i = k - 1
        while i >= 0 and idx[i] == F - k + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, k):
            idx[j] = idx[j - 1] + 1
        c = _subset_cost_nb(D, w, idx)
        if c < best_cost:
            best_cost = c
            best[:] = idx
    return best, best_cost


def best_subset_np(D, w, k, chunk=2048):
    F = D.shape[1]
    combos = itertools.combinations(range(F), k)
    best, best_cost = None, None
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        costs = w @ D[:, block].min(axis=2)
        j = int(np.argmin(costs))
        if best_cost is None or costs[j] < best_cost:
            best, best_cost = block[j].copy(), costs[j]
    return best, best_cost


@njit
def all_subset_costs_nb(D, w):
    C, F = D.shape
    n = 1 << F
    mins = np.empty((n, C), D.dtype)
    costs = np.zeros(n, D.dtype)
    for j in range(F):
        top = 1 << j
        for r in range(top):
            mask = top + r
            acc = costs[0]
            for u in range(C):
                v = D[u, j]
                if r != 0 and mins[r, u] < v:
                    v = mins[r, u]
                mins[mask, u] = v
                acc += w[u] * v
            costs[mask] = acc
    return costs


def all_subset_costs_np(D, w):
    C, F = D.shape
    mins = np.empty((1 << F, C), dtype=D.dtype)
    for j in range(F):
        top = 1 << j
        mins[top] = D[:, j]
        if top > 1:
            mins[top + 1 : 2 * top] = np.minimum(mins[1:top], D[:, j])
    costs = mins @ w
    costs[0] = 0
    return costs


# ---------------------------------------------------------------------------
# Monte-Carlo payments for geometric ("lattice") bid sets
# ---------------------------------------------------------------------------


@njit
def lattice_payment_sums_nb(base, xis, i_lo, i_hi, cut, universe, thresholds):
    nT = thresholds.size
    sums = np.zeros(nT)
    sums_c = np.zeros(nT)
    sq = np.zeros(nT)
    sq_c = np.zeros(nT)
    uncovered = 0
    bids = np.empty(i_hi - i_lo + 2)
    finite = universe.size > 0
    for trial in range(xis.size):
        xi = xis[trial]
        nb = 0
        for i in range(i_lo, i_hi + 1):
            b = base ** (i + xi)
            if b < cut:
                continue
            if finite:
                pos = np.searchsorted(universe, b, side="right") - 1
                if pos < 0:
                    continue
                b = universe[pos]
                if nb > 0 and bids[nb - 1] == b:
                    continue
            bids[nb] = b
            nb += 1
        if finite and (nb == 0 or bids[nb - 1] < universe[-1]):
            bids[nb] = universe[-1]
            nb += 1
        j = 0
        prefix = 0.0
        for t in range(nT):
            T = thresholds[t]
            while j < nb and bids[j] < T:
                prefix += bids[j]
                j += 1
            if j == nb:
                uncovered += 1
                continue
            r = (prefix + bids[j]) / T
            # Kahan-compensated accumulation
            y = r - sums_c[t]
            s = sums[t] + y
            sums_c[t] = (s - sums[t]) - y
            sums[t] = s
            y = r * r - sq_c[t]
            s = sq[t] + y
            sq_c[t] = (s - sq[t]) - y
            sq[t] = s
    return sums, sq, uncovered


def lattice_payment_sums_np(base, xis, i_lo, i_hi, cut, universe, thresholds, chunk=4096):
    exps = np.arange(i_lo, i_hi + 1, dtype=np.float64)
    finite = universe.size > 0
    nT = thresholds.size
    sum_parts = [[] for _ in range(nT)]
    sq_parts = [[] for _ in range(nT)]
    uncovered = 0
    for start in range(0, xis.size, chunk):
        xi = xis[start : start + chunk]
        bids = base ** (exps[None, :] + xi[:, None])
        above = bids >= cut
        if finite:
            pos = np.searchsorted(universe, bids, side="right") - 1
            pos = np.where(above, pos, -1)
            pos = np.concatenate([pos, np.full((xi.size, 1), universe.size - 1)], axis=1)
            keep = pos >= 0
            # pos is non-decreasing along a row once valid, so a repeat means a duplicate
            keep[:, 1:] &= pos[:, 1:] != np.maximum.accumulate(pos, axis=1)[:, :-1]
            bids = universe[np.clip(pos, 0, None)]
        else:
            keep = above
        for t in range(nT):
            T = thresholds[t]
            t_plus = np.where(keep & (bids >= T), bids, np.inf).min(axis=1)
            ok = np.isfinite(t_plus)
            uncovered += int((~ok).sum())
            paid = np.where(keep & (bids <= t_plus[:, None]), bids, 0.0).sum(axis=1)
            r = paid[ok] / T
            sum_parts[t].append(math.fsum(r))
            sq_parts[t].append(math.fsum(r * r))
    sums = np.array([math.fsum(p) for p in sum_parts])
    sq = np.array([math.fsum(p) for p in sq_parts])
    return sums, sq, uncovered


# ---------------------------------------------------------------------------
# Dual certificate scan
# ---------------------------------------------------------------------------


@njit
def dual_window_max_nb(mu, bmax):
    """For each start t (0-based): max over b in [t, bmax] of sum(mu[t..b])/(b+1)."""
    n = mu.size
    R = np.zeros(n)
    arg = np.arange(n)
    for t in range(min(n, bmax + 1)):
        s = 0.0
        best = 0.0
        bb = t
        for b in range(t, bmax + 1):
            s += mu[b]
            v = s / (b + 1)
            if v > best:
                best = v
                bb = b
        R[t] = best
        arg[t] = bb
    return R, arg


def dual_window_max_np(mu, bmax):
    n = mu.size
    R = np.zeros(n)
    arg = np.arange(n)
    for t in range(min(n, bmax + 1)):
        v = np.cumsum(mu[t : bmax + 1]) / np.arange(t + 1, bmax + 2)
        j = int(np.argmax(v))
        if v[j] > 0:
            R[t] = v[j]
            arg[t] = t + j
    return R, arg


# ---------------------------------------------------------------------------
# Exhaustive deterministic bidding over [n]
# ---------------------------------------------------------------------------


@njit
def exhaustive_det_nb(n):
    best_mask = -1
    best_num = 1
    best_den = 0
    for mask in range(1 << (n - 1)):
        s = 0
        prev = 0
        cur_num = 0
        cur_den = 1
        for v in range(1, n + 1):
            if v == n or (mask >> (v - 1)) & 1:
                s += v
                den = prev + 1
                if s * cur_den > cur_num * den:
                    cur_num = s
                    cur_den = den
                prev = v
        if best_mask < 0 or cur_num * best_den < best_num * cur_den:
            best_mask = mask
            best_num = cur_num
            best_den = cur_den
    return best_mask


def exhaustive_det_np(n, chunk=1 << 16):
    values = np.arange(1, n + 1, dtype=np.int64)
    best_mask, best_ratio = -1, np.inf
    for start in range(0, 1 << (n - 1), chunk):
        masks = np.arange(start, min(start + chunk, 1 << (n - 1)), dtype=np.int64)
        member = ((masks[:, None] >> (values[None, :-1] - 1)) & 1).astype(bool)
        member = np.concatenate([member, np.ones((masks.size, 1), bool)], axis=1)
        vals = np.where(member, values, 0)
        prefix = np.cumsum(vals, axis=1)
        prev = np.maximum.accumulate(vals, axis=1)
        prev = np.concatenate([np.zeros((masks.size, 1), np.int64), prev[:, :-1]], axis=1)
        ratios = np.where(member, prefix / (prev + 1), 0.0).max(axis=1)
        j = int(np.argmin(ratios))
        if ratios[j] < best_ratio:
            best_ratio, best_mask = ratios[j], int(masks[j])
    return best_mask


def _det_dp_body(n, rnum, rden):
    """Minimal prefix sum ``best[b]`` of a valid bid sequence ending at bid b.

    A sequence is valid at ratio r = rnum/rden when every prefix sum through
    bid b_i is at most r (b_{i-1} + 1). For a fixed last bid a smaller prefix
    sum never hurts later bids, so keeping only the minimum is exact. A heap of
    (best, bid) over still-usable predecessors gives O(n log n).
    """
    big = np.iinfo(np.int64).max
    best = np.full(n + 1, big, np.int64)
    parent = np.full(n + 1, -1, np.int64)
    cap = np.zeros(n + 1, np.int64)
    best[0] = 0
    cap[0] = rnum // rden
    heap = [(np.int64(0), np.int64(0))]
    for b in range(1, n + 1):
        while len(heap) > 0 and cap[heap[0][1]] < b:
            heapq.heappop(heap)
        if len(heap) == 0:
            continue
        s, p = heap[0]
        best[b] = s + b
        parent[b] = p
        cap[b] = (rnum * (b + 1)) // rden - best[b]
        if cap[b] > b:
            heapq.heappush(heap, (best[b], np.int64(b)))
    return best, parent


det_dp_nb = njit(_det_dp_body)


def det_dp_py(n, rnum, rden):
    # same recurrence on Python ints; numpy scalars are slow in a scalar loop
    big = np.iinfo(np.int64).max
    best = [big] * (n + 1)
    parent = [-1] * (n + 1)
    cap = [0] * (n + 1)
    best[0] = 0
    cap[0] = rnum // rden
    heap = [(0, 0)]
    pop, push = heapq.heappop, heapq.heappush
    for b in range(1, n + 1):
        while heap and cap[heap[0][1]] < b:
            pop(heap)
        if not heap:
            continue
        s, p = heap[0]
        sb = s + b
        best[b] = sb
        parent[b] = p
        c = (rnum * (b + 1)) // rden - sb
        cap[b] = c
        if c > b:
            push(heap, (sb, b))
    return np.array(best, dtype=np.int64), np.array(parent, dtype=np.int64)


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _numba_ok(*arrays):
    return USE_NUMBA and all(a.dtype != object for a in arrays)


def best_subset(D, w, k):
    if _numba_ok(D, w):
        idx, c = best_subset_nb(D, w, k)
        return idx, c
    return best_subset_np(D, w, k)


def all_subset_costs(D, w):
    if _numba_ok(D, w):
        return all_subset_costs_nb(D, w)
    return all_subset_costs_np(D, w)


def lattice_payment_sums(base, xis, i_lo, i_hi, cut, universe, thresholds):
    args = (
        float(base),
        np.ascontiguousarray(xis, dtype=np.float64),
        int(i_lo),
        int(i_hi),
        float(cut),
        np.ascontiguousarray(universe, dtype=np.float64),
        np.ascontiguousarray(thresholds, dtype=np.float64),
    )
    if USE_NUMBA:
        return lattice_payment_sums_nb(*args)
    return lattice_payment_sums_np(*args)


def dual_window_max(mu, bmax):
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    if USE_NUMBA:
        return dual_window_max_nb(mu, int(bmax))
    return dual_window_max_np(mu, int(bmax))


def exhaustive_det(n):
    if USE_NUMBA:
        return int(exhaustive_det_nb(int(n)))
    return exhaustive_det_np(int(n))


def det_dp(n, rnum, rden):
    if USE_NUMBA:
        return det_dp_nb(int(n), int(rnum), int(rden))
    return det_dp_py(int(n), int(rnum), int(rden))
