"""Shared brute-force oracles used across the test modules.

Everything here is deliberately naive (enumeration, O(n^2) scans) so the
package code is checked against independently derived answers.
"""

from itertools import combinations

import numpy as np

from paretoal.acquisition import ScoreTable


def make_table(u_raw, m, indices=None) -> ScoreTable:
    """ScoreTable from raw (unnormalized) density scores and [0,1] id_conf."""
    u_raw = np.asarray(u_raw, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    if indices is None:
        indices = np.arange(u_raw.size)
    return ScoreTable(np.asarray(indices, dtype=np.int64),
                      u_raw / u_raw.sum(), m).validate()


def brute_front_mask(u, m) -> np.ndarray:
    """O(n^2) first-front oracle: True where no point strictly dominates."""
    u = np.asarray(u, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    mask = np.ones(u.size, dtype=bool)
    for i in range(u.size):
        dominated = (u >= u[i]) & (m >= m[i]) & ((u > u[i]) | (m > m[i]))
        if dominated.any():
            mask[i] = False
    return mask


def brute_fronts(u, m) -> list:
    """Peel successive non-dominated fronts; sorted index array per front."""
    u = np.asarray(u, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    remaining = np.arange(u.size)
    fronts = []
    while remaining.size:
        mask = brute_front_mask(u[remaining], m[remaining])
        fronts.append(np.sort(remaining[mask]))
        remaining = remaining[~mask]
    return fronts


def enumerate_nondominated(u, m, b) -> dict:
    """Every size-b subset no other subset strictly dominates.

    Returns {index tuple: (o_u, o_m)} over the full enumeration.
    """
    u = np.asarray(u, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    subsets = list(combinations(range(u.size), b))
    objs = [(float(u[list(s)].sum()), float(m[list(s)].sum())) for s in subsets]
    keep = {}
    for s, o in zip(subsets, objs):
        dominated = any(
            o2[0] >= o[0] and o2[1] >= o[1] and (o2[0] > o[0] or o2[1] > o[1])
            for o2 in objs
        )
        if not dominated:
            keep[s] = o
    return keep


def overlap_select(member_tuples):
    """Enumeration oracle for the consensus pick: the member maximizing the
    summed pairwise index overlap (self included), ties to the smallest tuple.
    """
    best = None
    for s in member_tuples:
        total = sum(len(set(s) & set(other)) for other in member_tuples)
        key = (-total, tuple(s))
        if best is None or key < best[0]:
            best = (key, tuple(s))
    return best[1]
