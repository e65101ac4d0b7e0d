"""Brute-force references used by the tests (small inputs only)."""

from functools import lru_cache
from itertools import combinations

import numpy as np


def successive_sampling_subset_probs(w, k):
    """Exact probability of every k-subset under successive sampling proportional to ``w``.

    Items with zero weight are only drawn once positive weight is exhausted,
    then uniformly. Returns ``{frozenset: prob}``.
    """
    w = np.asarray(w, dtype=float)
    n = w.size

    @lru_cache(maxsize=None)
    def reach(mask):
        # probability that the first popcount(mask) draws are exactly the items in mask
        if mask == 0:
            return 1.0
        total = 0.0
        for j in range(n):
            if mask >> j & 1:
                prev = mask & ~(1 << j)
                rest = [i for i in range(n) if not prev >> i & 1]
                wr = w[rest].sum()
                pj = w[j] / wr if wr > 0 else 1.0 / len(rest)
                total += reach(prev) * pj
        return total

    out = {}
    for combo in combinations(range(n), k):
        mask = sum(1 << i for i in combo)
        out[frozenset(combo)] = reach(mask)
    return out


def inclusion_probs(w, k):
    probs = np.zeros(len(w))
    for s, p in successive_sampling_subset_probs(w, k).items():
        for i in s:
            probs[i] += p
    return probs


def boolean_products(mats):
    """Naive O(N^3) boolean matrix chain: nnz after each prefix product."""
    acc = None
    counts = []
    for m in mats:
        m = (np.asarray(m) != 0).astype(np.int64)
        if acc is None:
            acc = m
        else:
            n = acc.shape[0]
            out = np.zeros_like(acc)
            for i in range(n):
                for j in range(n):
                    for t in range(n):
                        if acc[i, t] and m[t, j]:
                            out[i, j] = 1
                            break
            acc = out
        counts.append(int(acc.sum()))
    return counts


def dense_pattern(edge_set, loops):
    n = edge_set.num_nodes
    A = np.zeros((n, n), dtype=np.int64)
    for i, j in edge_set.pairs():
        A[i, j] = A[j, i] = 1
    if loops:
        A += np.eye(n, dtype=np.int64)
    return A
