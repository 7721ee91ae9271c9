"""Per-sample acquisition scores and the unlabeled-pool score table."""

import warnings
from dataclasses import dataclass

import numpy as np

from . import idscore, learner
from .data import Dataset, PoolState

ACQUISITIONS = ("ent", "margin", "maha", "rand")


def entropy_scores(probs) -> np.ndarray:
    """Shannon entropy (natural log) per probability row; 0*log(0) = 0."""
    probs = np.asarray(probs, dtype=np.float64)
    if np.any(probs < 0):
        raise ValueError("negative probabilities")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    return np.maximum(-terms.sum(axis=1), 0.0)


def margin_scores(probs) -> np.ndarray:
    """1 - (top probability - runner-up probability); needs >= 2 columns."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 2 or probs.shape[1] < 2:
        raise ValueError("need probability rows with >= 2 classes")
    part = np.partition(probs, probs.shape[1] - 2, axis=1)
    return 1.0 - (part[:, -1] - part[:, -2])


def querying_density(raw) -> tuple[np.ndarray, bool]:
    """Normalize nonnegative acquisition scores into a density.

    Returns (density, degenerate): an all-zero input falls back to the uniform
    density with ``degenerate=True`` and a warning.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.size == 0:
        raise ValueError("empty score vector")
    if np.any(raw < 0):
        raise ValueError("acquisition scores must be >= 0")
    total = float(raw.sum())
    if total == 0.0:
        warnings.warn("all-zero acquisition scores: uniform fallback", stacklevel=2)
        return np.full(raw.shape, 1.0 / raw.size), True
    return raw / total, False


@dataclass(frozen=True)
class ScoreTable:
    """Aligned per-candidate columns over the current unlabeled pool.

    ``density`` is the querying density (sums to 1); ``id_conf`` is the
    min-max-normalized ID confidence in [0, 1]; ``indices`` are pool row ids.
    """

    indices: np.ndarray
    density: np.ndarray
    id_conf: np.ndarray
    degenerate_density: bool = False

    def __post_init__(self):
        if not (len(self.indices) == len(self.density) == len(self.id_conf)):
            raise ValueError("misaligned score table columns")

    def __len__(self) -> int:
        return len(self.indices)

    def validate(self):
        if len(self) == 0:
            raise ValueError("empty score table")
        if np.any(self.density < 0) or abs(float(self.density.sum()) - 1.0) > 1e-9:
            raise ValueError("density column must be a probability vector")
        if np.any(self.id_conf < 0) or np.any(self.id_conf > 1):
            raise ValueError("id_conf column must lie in [0, 1]")
        return self


def _id_scores(id_model, X) -> np.ndarray:
    if isinstance(id_model, idscore.GmmModel):
        return idscore.id_confidence_gmm(id_model, X)
    if isinstance(id_model, idscore.TiedGaussModel):
        return idscore.id_confidence_tied(id_model, X)
    raise TypeError(f"unsupported ID scorer {type(id_model).__name__}")


def build_score_table(model, id_model, ds: Dataset, pool: PoolState,
                      acquisition: str = "ent", rng=None) -> ScoreTable:
    """Score every unlabeled row and assemble the table for one AL round.

    ``acquisition`` picks the density source: classifier entropy, classifier
    margin, the raw ID score shifted to nonnegative (Mahalanobis-as-sampler),
    or seeded uniform draws. The id_conf column always comes from ``id_model``
    normalized over the pool.
    """
    indices = pool.unlabeled_indices()
    if indices.size == 0:
        raise ValueError("no unlabeled rows to score")
    X = ds.features[indices]
    raw_id = _id_scores(id_model, X)
    if acquisition in ("ent", "margin"):
        probs = learner.predict_proba(model, X)
        raw = entropy_scores(probs) if acquisition == "ent" else margin_scores(probs)
    elif acquisition == "maha":
        raw = raw_id - raw_id.min()
    elif acquisition == "rand":
        if rng is None:
            raise ValueError("acquisition 'rand' needs an rng")
        raw = rng.random(indices.size)
    else:
        raise ValueError(f"unknown acquisition {acquisition!r}")
    density, degenerate = querying_density(raw)
    table = ScoreTable(indices, density, idscore.normalize_scores(raw_id),
                       degenerate_density=degenerate)
    return table.validate()
