"""Independent reference computations used by the tests.

Everything here is deliberately naive (pure Python, exhaustive) and shares
no code with the package.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath


def ladder(T_r, T_d, M):
    return [T_r + i * T_d for i in range(M)]


def frac_log2_power(M, N):
    mpmath.mp.dps = 50
    x = N * mpmath.log(M, 2)
    return x - mpmath.floor(x)


def all_tuple_sums(intervals, N):
    return [(sum(intervals[i] for i in t), t)
            for t in itertools.product(range(len(intervals)), repeat=N)]


def shortest_tuples(intervals, N, k):
    """k shortest N-tuples, ties broken lexicographically (Python sort is stable)."""
    return sorted(all_tuple_sums(intervals, N), key=lambda p: (p[0], p[1]))[:k]


def min_subset_sum(values, k):
    """Minimum sum of exactly k items.

    Literal enumeration of all k-subsets when that is small, otherwise an
    exact cardinality-constrained DP (no sorting involved).
    """
    n = len(values)
    if math.comb(n, k) <= 50_000:
        return min(sum(c) for c in itertools.combinations(values, k))
    INF = float("inf")
    best = [0] + [INF] * k  # best[j]: min sum using j items so far
    for v in values:
        for j in range(min(k, n), 0, -1):
            if best[j - 1] + v < best[j]:
                best[j] = best[j - 1] + v
    return best[k]


def exact_bitrate(intervals, N, L):
    total = sum(s for s, _ in shortest_tuples(intervals, N, 2**L))
    return Fraction(2**L * L * 10**9, total)


def greedy_refractory(events, rho):
    """events: list of (t, pixel). Returns kept set of list positions."""
    last = {}
    kept = set()
    for pos in sorted(range(len(events)), key=lambda i: (events[i][1], events[i][0], i)):
        t, px = events[pos]
        if px not in last or t - last[px] >= rho:
            kept.add(pos)
            last[px] = t
    return kept


def nearest_codeword(received, codewords, intervals):
    """Index of the codeword with the smallest summed |interval difference|; first wins ties."""
    best, best_k = None, None
    for k, cw in enumerate(codewords):
        d = sum(abs(intervals[a] - intervals[b]) for a, b in zip(received, cw))
        if best is None or d < best:
            best, best_k = d, k
    return best_k
