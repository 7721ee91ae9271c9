"""Batch-selection strategies over a shared ScoreTable interface.

Every selector returns sorted pool row indices (``table.indices`` values).
Strategy names are the user-facing contract: ``poal``, ``ent``, ``maha``,
``margin``, ``rand``, ``weighted:<w_u>:<w_m>``, ``twostage``, ``ideal-ent``.
"""

import numpy as np

from .acquisition import ScoreTable, querying_density
from .errors import ConfigError
from .pareto import PoalConfig, mc_poal, pre_select

STRATEGY_NAMES = ("poal", "ent", "maha", "margin", "rand", "twostage", "ideal-ent")


def parse_strategy(name: str):
    """Split a strategy string into (kind, params); unknown names error."""
    if name in STRATEGY_NAMES:
        return name, ()
    if name.startswith("weighted:"):
        parts = name.split(":")
        if len(parts) != 3:
            raise ConfigError(f"expected weighted:<w_u>:<w_m>, got {name!r}")
        try:
            return "weighted", (float(parts[1]), float(parts[2]))
        except ValueError:
            raise ConfigError(f"non-numeric weights in {name!r}") from None
    raise ConfigError(f"unknown strategy {name!r}")


def acquisition_for(name: str) -> str:
    """Which density source feeds a strategy's score table."""
    kind, _ = parse_strategy(name)
    return {"maha": "maha", "margin": "margin", "rand": "rand"}.get(kind, "ent")


def weights_from_eta(eta: float) -> tuple[float, float]:
    """Scalarization preset: eta on density, 1 - eta on ID confidence."""
    return float(eta), 1.0 - float(eta)


def select_topk(scores, k: int) -> np.ndarray:
    """Positions of the k largest scores, ties to the smallest position."""
    scores = np.asarray(scores, dtype=np.float64)
    if not 1 <= k <= scores.size:
        raise ValueError("need 1 <= k <= len(scores)")
    order = np.lexsort((np.arange(scores.size), -scores))
    return np.sort(order[:k])


def select_poal(table: ScoreTable, batch: int,
                config: PoalConfig = PoalConfig(), rng=None) -> np.ndarray:
    """Pareto-archive search, with front-peeling pre-selection on big pools.

    When the pool exceeds the threshold, the search runs on the peeled rows
    with the density column renormalized (dominance is scale-invariant, so
    only the early-stop statistics see the rescale).
    """
    work = table
    if len(table) > config.preselect_threshold:
        keep = pre_select(table, config.preselect_multiplier * batch)
        density, degenerate = querying_density(table.density[keep])
        work = ScoreTable(table.indices[keep], density, table.id_conf[keep],
                          degenerate_density=degenerate)
    _, chosen = mc_poal(work, batch, config, rng)
    return np.sort(work.indices[chosen.indices])


def select_weighted_sum(table: ScoreTable, batch: int,
                        w_density: float, w_id: float) -> np.ndarray:
    scores = w_density * table.density + w_id * table.id_conf
    return np.sort(table.indices[select_topk(scores, batch)])


def select_two_stage(table: ScoreTable, batch: int) -> np.ndarray:
    """Filter to at-least-mean ID confidence, then rank by density.

    A shortfall (filter too aggressive) is topped up with the highest-
    ID-confidence rejected rows.
    """
    conf = table.id_conf
    kept = np.flatnonzero(conf >= conf.mean())
    if kept.size >= batch:
        positions = kept[select_topk(table.density[kept], batch)]
    else:
        rejected = np.flatnonzero(conf < conf.mean())
        fill = rejected[select_topk(conf[rejected], batch - kept.size)]
        positions = np.concatenate((kept, fill))
    return np.sort(table.indices[positions])


def select_ideal_ent(table: ScoreTable, ood_mask, batch: int) -> np.ndarray:
    """Oracle baseline: density ranking restricted to true-ID rows.

    ``ood_mask`` is the ground-truth OOD flag per table row; it exists only
    for this diagnostic strategy. When fewer than ``batch`` ID rows remain,
    the remainder is filled with OOD rows by density.
    """
    ood_mask = np.asarray(ood_mask, dtype=bool)
    if ood_mask.shape != (len(table),):
        raise ValueError("ood_mask must align with the score table")
    id_pos = np.flatnonzero(~ood_mask)
    if id_pos.size >= batch:
        positions = id_pos[select_topk(table.density[id_pos], batch)]
    else:
        ood_pos = np.flatnonzero(ood_mask)
        fill = ood_pos[select_topk(table.density[ood_pos], batch - id_pos.size)]
        positions = np.concatenate((id_pos, fill))
    return np.sort(table.indices[positions])


def select(name: str, table: ScoreTable, batch: int, *,
           config: PoalConfig = PoalConfig(), rng=None,
           ood_mask=None) -> np.ndarray:
    """Dispatch a strategy by name. ``ood_mask`` is only legal for ideal-ent."""
    kind, params = parse_strategy(name)
    if not 1 <= batch <= len(table):
        raise ValueError("need 1 <= batch <= pool size")
    if kind != "ideal-ent" and ood_mask is not None:
        raise ValueError("ood_mask is reserved for the ideal-ent oracle")
    if kind == "poal":
        return select_poal(table, batch, config, rng)
    if kind == "weighted":
        return select_weighted_sum(table, batch, *params)
    if kind == "twostage":
        return select_two_stage(table, batch)
    if kind == "ideal-ent":
        if ood_mask is None:
            raise ValueError("ideal-ent needs the ground-truth ood_mask")
        return select_ideal_ent(table, ood_mask, batch)
    # ent / maha / margin / rand: plain density ranking over their table
    return np.sort(table.indices[select_topk(table.density, batch)])
