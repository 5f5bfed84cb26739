"""Independent oracle implementations used to certify the package code.

Everything here is deliberately naive (dense matrices, python loops, full
sorts) and written straight from the definitions, so agreement with the
package's vectorized code is meaningful evidence.
"""

from __future__ import annotations

import math

import numpy as np


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.maximum(np.abs(a) + np.abs(b), 1e-8)
    return float(np.max(np.abs(a - b) / denom))


def dense_normalized_adjacency(m: int, n: int, pairs) -> np.ndarray:
    """D^(-1/2) A D^(-1/2) built with dense arithmetic and explicit loops."""
    N = m + n
    A = np.zeros((N, N))
    for u, i in set(pairs):
        A[u, m + i] = 1.0
        A[m + i, u] = 1.0
    d = A.sum(axis=1)
    S = np.zeros((N, N))
    for r in range(N):
        for c in range(N):
            if A[r, c] != 0 and d[r] > 0 and d[c] > 0:
                S[r, c] = A[r, c] / math.sqrt(d[r] * d[c])
    return S


def brute_force_k_core(pairs: list[tuple[str, str]], k: int) -> set:
    """Delete ONE under-degree node at a time until none remains.

    A different deletion schedule than the implementation's simultaneous
    rounds; the k-core is unique, so results must still agree.
    """
    pairs = list(dict.fromkeys(pairs))
    while True:
        udeg: dict = {}
        ideg: dict = {}
        for u, i in pairs:
            udeg[u] = udeg.get(u, 0) + 1
            ideg[i] = ideg.get(i, 0) + 1
        victim = None
        for u in sorted(udeg):
            if udeg[u] < k:
                victim = ("u", u)
                break
        if victim is None:
            for i in sorted(ideg):
                if ideg[i] < k:
                    victim = ("i", i)
                    break
        if victim is None:
            return set(pairs)
        kind, node = victim
        if kind == "u":
            pairs = [(u, i) for u, i in pairs if u != node]
        else:
            pairs = [(u, i) for u, i in pairs if i != node]


def naive_recall(ranked, test_items, k) -> float:
    hits = 0
    for item in list(ranked)[:k]:
        if item in test_items:
            hits += 1
    return hits / len(test_items)


def naive_ndcg(ranked, test_items, k) -> float:
    dcg = 0.0
    for rank, item in enumerate(list(ranked)[:k]):
        if item in test_items:
            dcg += 1.0 / np.log2(rank + 2)
    idcg = 0.0
    for rank in range(min(len(test_items), k)):
        idcg += 1.0 / np.log2(rank + 2)
    return float(dcg / idcg)


def naive_rank(scores: np.ndarray, exclude, k: int) -> list[int]:
    """Full sort by (-score, index) after dropping excluded items."""
    banned = set(int(i) for i in exclude)
    order = sorted((i for i in range(len(scores)) if i not in banned),
                   key=lambda i: (-scores[i], i))
    return order[:k]


def naive_evaluate(e_star: np.ndarray, split, k: int):
    """Per-user full-sort evaluation; returns (recall, ndcg, users)."""
    m = split.m
    recalls, ndcgs = [], []
    for u in range(m):
        test = split.test[u]
        if not test:
            continue
        scores = np.array([float(np.sum(e_star[u] * e_star[m + i]))
                           for i in range(split.n)])
        top = naive_rank(scores, split.train.user_items(u), k)
        recalls.append(naive_recall(top, set(test), k))
        ndcgs.append(naive_ndcg(top, set(test), k))
    return float(np.mean(recalls)), float(np.mean(ndcgs)), len(recalls)


def naive_smoothness(E: np.ndarray) -> float:
    """O(r^2) pairwise cosine mean over nonzero rows."""
    rows = [r for r in np.asarray(E, dtype=np.float64) if np.linalg.norm(r) > 0]
    total = 0.0
    count = 0
    for a in range(len(rows)):
        for b in range(a + 1, len(rows)):
            total += float(rows[a] @ rows[b]
                           / (np.linalg.norm(rows[a]) * np.linalg.norm(rows[b])))
            count += 1
    return total / count


def random_interactions(rng: np.random.Generator, m: int, n: int,
                        per_user: int) -> list[tuple[int, int]]:
    """Random bipartite pairs with every user getting >= 1 item."""
    pairs = set()
    for u in range(m):
        items = rng.integers(0, n, size=per_user)
        pairs.add((u, int(items[0])))
        for i in items[1:]:
            pairs.add((u, int(i)))
    return sorted(pairs)
