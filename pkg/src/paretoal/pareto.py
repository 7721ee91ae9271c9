"""Monte-Carlo Pareto search over fixed-size query subsets.

A candidate subset of the unlabeled pool is scored by two objectives, both
maximized: the sum of per-sample querying densities (informativeness) and the
sum of normalized ID confidences (distribution fit). The optimizer draws
uniform random subsets, keeps an archive of candidates no archive member
strictly dominates, and removes members a new candidate weakly dominates, so
the archive is always mutually non-dominated.

Convergence is monitored through the kernel distance (MMD) between
consecutive archive snapshots embedded as objective pairs: every
``checkpoint_interval`` iterations the mean and mean squared deviation of the
last ``window_size`` MMD values are recorded, and the run stops early once
``window_size + 1`` consecutive checkpoints agree after rounding to 2
decimals. The reported subset is the archive member with the largest total
index overlap with the archive (ties to the lexicographically smallest index
list).

Everything here is deterministic given the Generator passed in; the chunked
candidate sampling consumes the exact random stream of repeated
:func:`random_subset` calls.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .acquisition import ScoreTable


@dataclass(frozen=True)
class PoalConfig:
    """Knobs of the subset search and its pre-selection stage."""

    max_iterations: int = 100_000
    checkpoint_interval: int = 100
    window_size: int = 20
    early_stop: bool = True
    preselect_threshold: int = 2000
    preselect_multiplier: int = 6

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.checkpoint_interval < 1:
            raise ValueError("checkpoint_interval must be >= 1")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.preselect_threshold < 1:
            raise ValueError("preselect_threshold must be >= 1")
        if self.preselect_multiplier < 1:
            raise ValueError("preselect_multiplier must be >= 1")


@dataclass(frozen=True)
class CandidateSubset:
    """A size-b subset of score-table rows with its cached objective pair."""

    indices: np.ndarray
    density_total: float
    id_total: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        object.__setattr__(self, "indices", idx)
        if idx.ndim != 1 or idx.size < 1:
            raise ValueError("indices must be a non-empty 1-D array")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise ValueError("indices must be strictly increasing")

    @property
    def size(self) -> int:
        return int(self.indices.size)


def objectives(table: ScoreTable, indices) -> CandidateSubset:
    """Candidate for the given table row positions, objectives attached."""
    idx = np.asarray(indices, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= len(table)):
        raise ValueError("subset positions out of table range")
    return CandidateSubset(idx, float(table.density[idx].sum()),
                           float(table.id_conf[idx].sum()))


class Dominance(enum.Enum):
    A_STRICT = "a_strictly_dominates"
    B_STRICT = "b_strictly_dominates"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def weakly_dominates(a: CandidateSubset, b: CandidateSubset) -> bool:
    """True iff b's objectives are <= a's componentwise (b is covered by a)."""
    return a.density_total >= b.density_total and a.id_total >= b.id_total


def strictly_dominates(a: CandidateSubset, b: CandidateSubset) -> bool:
    return weakly_dominates(a, b) and (
        a.density_total > b.density_total or a.id_total > b.id_total
    )


def compare(a: CandidateSubset, b: CandidateSubset) -> Dominance:
    """Classify the objective pair relation; weak-but-not-strict is EQUAL."""
    if strictly_dominates(a, b):
        return Dominance.A_STRICT
    if strictly_dominates(b, a):
        return Dominance.B_STRICT
    if a.density_total == b.density_total and a.id_total == b.id_total:
        return Dominance.EQUAL
    return Dominance.INCOMPARABLE


def archive_insert(members: list, cand: CandidateSubset) -> tuple[list, bool]:
    """Reference insert: reject a strictly dominated candidate, otherwise add
    it and drop every member it weakly dominates.

    Pure: returns a new list on acceptance, the original on rejection.
    Re-inserting an existing index set collapses to one copy because the old
    copy is weakly dominated (equal) and removed.
    """
    for mem in members:
        if strictly_dominates(mem, cand):
            return members, False
    kept = [mem for mem in members if not weakly_dominates(cand, mem)]
    kept.append(cand)
    return kept, True


def random_subset(pool_size: int, subset_size: int, rng) -> np.ndarray:
    """Uniform random subset as sorted positions.

    Implemented as the ``subset_size`` smallest of ``pool_size`` uniform keys,
    which the chunked optimizer reproduces bit-for-bit. ``subset_size ==
    pool_size`` returns the full range (keys are still drawn, keeping the
    stream aligned).
    """
    if not 1 <= subset_size <= pool_size:
        raise ValueError("need 1 <= subset_size <= pool_size")
    rng = np.random.default_rng(rng)
    keys = rng.random(pool_size)
    if subset_size == pool_size:
        return np.arange(pool_size, dtype=np.int64)
    picks = np.argpartition(keys, subset_size)[:subset_size]
    picks.sort()
    return picks.astype(np.int64, copy=False)


def _pairwise_sq(pooled: np.ndarray) -> np.ndarray:
    # elementwise, not BLAS: entries for equal point pairs must be bitwise
    # equal so the V-statistic cancels exactly on identical snapshots
    diff = pooled[:, None, :] - pooled[None, :, :]
    return (diff * diff).sum(axis=-1)


def mmd(feats_a, feats_b) -> float:
    """Multi-kernel maximum mean discrepancy between two objective-pair sets.

    Five RBF kernels with bandwidths geometrically spaced by factor 2 around
    the mean pairwise squared distance of the pooled points (off-diagonal
    mean; falls back to 1 when that mean is 0). Uses the biased V-statistic,
    clamped at 0 before the square root, so identical sets give exactly 0.
    """
    A = np.atleast_2d(np.asarray(feats_a, dtype=np.float64))
    B = np.atleast_2d(np.asarray(feats_b, dtype=np.float64))
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ValueError("MMD needs two non-empty snapshots")
    pooled = np.vstack((A, B))
    sq = _pairwise_sq(pooled)
    n_tot = pooled.shape[0]
    off_pairs = n_tot * n_tot - n_tot
    mean_sq = float(sq.sum()) / off_pairs if off_pairs else 0.0
    base = mean_sq if mean_sq > 0.0 else 1.0
    na = A.shape[0]
    total = 0.0
    for scale in (0.25, 0.5, 1.0, 2.0, 4.0):
        K = np.exp(-sq / (base * scale))
        total += float(K[:na, :na].mean() + K[na:, na:].mean()
                       - 2.0 * K[:na, na:].mean())
    return float(np.sqrt(max(total, 0.0)))


def archive_features(members) -> np.ndarray:
    """Objective-pair embedding of an archive, one row per member."""
    return np.array([[mem.density_total, mem.id_total] for mem in members])


def early_stop_check(checkpoint_stats, window_size: int) -> bool:
    """True once the last ``window_size + 1`` checkpoints agree after
    rounding both statistics to 2 decimals."""
    need = window_size + 1
    if len(checkpoint_stats) < need:
        return False
    tail = checkpoint_stats[-need:]
    rounded = {(round(mean, 2), round(spread, 2)) for mean, spread in tail}
    return len(rounded) == 1


@dataclass(frozen=True)
class ParetoArchive:
    """Search result: mutually non-dominated members plus convergence traces."""

    members: list
    mmd_history: np.ndarray
    checkpoint_stats: list = field(default_factory=list)
    iterations: int = 0
    early_stopped: bool = False


def final_select(archive_or_members) -> CandidateSubset:
    """Archive member with the largest summed index overlap with the archive.

    The overlap count includes the member's own contribution (a constant
    shift). Ties go to the lexicographically smallest index list.
    """
    members = getattr(archive_or_members, "members", archive_or_members)
    if not members:
        raise ValueError("empty archive")
    top = max(int(mem.indices.max()) for mem in members)
    counts = np.bincount(
        np.concatenate([mem.indices for mem in members]), minlength=top + 1
    )
    overlaps = np.array([int(counts[mem.indices].sum()) for mem in members])
    best = int(overlaps.max())
    tied = [mem for mem, val in zip(members, overlaps) if val == best]
    return min(tied, key=lambda mem: tuple(mem.indices.tolist()))


def _front_mask(u: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Boolean mask of the first non-dominated front (both maximized).

    Sort by u descending (m descending within ties); a point survives iff its
    m equals its u-group's max and beats the best m of all strictly larger u.
    Equal points all survive (neither strictly dominates the other).
    """
    order = np.lexsort((-m, -u))
    us = u[order]
    ms = m[order]
    new_group = np.empty(len(us), dtype=bool)
    new_group[0] = True
    new_group[1:] = us[1:] != us[:-1]
    group_id = np.cumsum(new_group) - 1
    group_max = ms[new_group]  # sorted desc within group, so first is max
    prev_best = np.concatenate(([-np.inf], np.maximum.accumulate(group_max)[:-1]))
    in_front = (group_max[group_id] > prev_best[group_id]) & (ms == group_max[group_id])
    mask = np.zeros(len(us), dtype=bool)
    mask[order[in_front]] = True
    return mask


def pre_select(table: ScoreTable, min_keep: int) -> np.ndarray:
    """Peel whole non-dominated fronts of per-sample (density, id_conf) points
    until at least ``min_keep`` rows are kept; returns their sorted positions.

    The first front is always contained in the result, so the restriction
    never discards an optimal trade-off point.
    """
    if min_keep < 1:
        raise ValueError("min_keep must be >= 1")
    n = len(table)
    if n == 0:
        raise ValueError("empty score table")
    remaining = np.arange(n)
    picked: list[np.ndarray] = []
    total = 0
    while total < min_keep and remaining.size:
        mask = _front_mask(table.density[remaining], table.id_conf[remaining])
        front = remaining[mask]
        picked.append(front)
        total += front.size
        remaining = remaining[~mask]
    return np.sort(np.concatenate(picked))


def mc_poal(table: ScoreTable, subset_size: int,
            config: PoalConfig = PoalConfig(), rng=None,
            trace: list | None = None) -> tuple[ParetoArchive, CandidateSubset]:
    """Run the Monte-Carlo archive search and pick the consensus subset.

    Candidates are drawn in chunks of ``checkpoint_interval`` so checkpoint
    boundaries align with chunk ends; a chunk is first screened against the
    archive snapshot (strict dominance by a snapshot member is permanent,
    because members are only ever displaced by candidates that weakly dominate
    them), and only survivors go through the sequential insert. MMD is
    recorded per iteration: 0.0 whenever the archive did not change, including
    re-inserts of an existing member. ``trace``, when given, collects every
    candidate's index array (the shadow log used by the replay tests).
    """
    table.validate()
    u = table.density
    m = table.id_conf
    pool_n = len(table)
    b = subset_size
    if not 1 <= b <= pool_n:
        raise ValueError("need 1 <= subset_size <= pool size")
    rng = np.random.default_rng(rng)
    T = config.max_iterations
    interval = config.checkpoint_interval
    window = config.window_size

    cap = 64
    arc_u = np.empty(cap)
    arc_m = np.empty(cap)
    arc_idx: list[np.ndarray] = []
    mmd_hist = np.zeros(T)
    checkpoints: list[tuple[float, float]] = []
    t = 0
    stopped = False
    full = b == pool_n
    base = np.arange(pool_n, dtype=np.int64)

    while t < T and not stopped:
        n = min(interval, T - t)
        keys = rng.random((n, pool_n))
        if full:
            cand = np.broadcast_to(base, (n, pool_n))
        else:
            cand = np.argpartition(keys, b, axis=1)[:, :b].astype(np.int64)
            cand.sort(axis=1)
        cand_u = u[cand].sum(axis=1)
        cand_m = m[cand].sum(axis=1)
        if trace is not None:
            trace.extend(np.array(row) for row in cand)

        n_mem = len(arc_idx)
        snap_u = arc_u[:n_mem]
        snap_m = arc_m[:n_mem]
        ge_u = snap_u[None, :] >= cand_u[:, None]
        ge_m = snap_m[None, :] >= cand_m[:, None]
        gt = (snap_u[None, :] > cand_u[:, None]) | (snap_m[None, :] > cand_m[:, None])
        rejected = (ge_u & ge_m & gt).any(axis=1)

        for i in np.flatnonzero(~rejected):
            o_u = cand_u[i]
            o_m = cand_m[i]
            n_mem = len(arc_idx)
            live_u = arc_u[:n_mem]
            live_m = arc_m[:n_mem]
            covers = (live_u >= o_u) & (live_m >= o_m)
            if covers.any() and ((live_u[covers] > o_u).any()
                                 or (live_m[covers] > o_m).any()):
                continue  # strictly dominated by a member added this chunk
            weak = (live_u <= o_u) & (live_m <= o_m)
            removed = int(weak.sum())
            if removed == 1:
                j = int(np.flatnonzero(weak)[0])
                if live_u[j] == o_u and live_m[j] == o_m \
                        and np.array_equal(arc_idx[j], cand[i]):
                    continue  # identical re-insert: archive unchanged
            old_feats = None
            if n_mem:
                old_feats = np.column_stack((live_u.copy(), live_m.copy()))
            if removed:
                keep = ~weak
                kept_u = live_u[keep]
                kept_m = live_m[keep]
                arc_idx = [mem for mem, flag in zip(arc_idx, keep) if flag]
                n_mem = len(arc_idx)
                arc_u[:n_mem] = kept_u
                arc_m[:n_mem] = kept_m
            if n_mem == cap:
                cap *= 2
                grow = cap - arc_u.size
                arc_u = np.concatenate((arc_u, np.empty(grow)))
                arc_m = np.concatenate((arc_m, np.empty(grow)))
            arc_u[n_mem] = o_u
            arc_m[n_mem] = o_m
            arc_idx.append(np.array(cand[i]))
            n_mem += 1
            if old_feats is not None:
                new_feats = np.column_stack((arc_u[:n_mem], arc_m[:n_mem]))
                mmd_hist[t + i] = mmd(old_feats, new_feats)

        t += n
        if t % interval == 0 and t >= window:
            recent = mmd_hist[t - window:t]
            mean = float(recent.sum()) / window
            spread = float(((recent - mean) ** 2).sum()) / window
            checkpoints.append((mean, spread))
            if config.early_stop and early_stop_check(checkpoints, window):
                stopped = True

    members = [
        CandidateSubset(arc_idx[j], float(arc_u[j]), float(arc_m[j]))
        for j in range(len(arc_idx))
    ]
    archive = ParetoArchive(members, mmd_hist[:t].copy(), checkpoints,
                            iterations=t, early_stopped=stopped)
    return archive, final_select(archive)
