"""In-distribution confidence scores from class-conditional Gaussian models.

Two scorers share one scale: the negative squared Mahalanobis distance to the
nearest fitted component, maximized over classes (and mixture components), so
larger is more in-distribution and 0 is attained only at a component mean.

The mixture scorer fits one GMM per labeled class by EM, choosing the
component count per class by BIC over 1..max_components. EM is deterministic
given the config seed: means start from farthest-point picks, covariances from
the class sample covariance, weights uniform. Every covariance estimate gets
the floor (1e-6 * trace/d + 1e-10) * I before factorization, and classes with
fewer than d+1 samples fall back to diagonal covariances. The recorded
log-likelihood sequence is non-decreasing within 1e-8: a sweep can only lower
the likelihood when the SPD floor binds on a collapsed component, and such a
sweep is rejected (previous parameters kept, fit stops).

The tied scorer uses class means with one pooled within-class covariance
(scatter divided by the total labeled count), same floor.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

_LOG_2PI = float(np.log(2.0 * np.pi))


def _floor_eps(cov: np.ndarray) -> float:
    d = cov.shape[0]
    return 1e-6 * float(np.trace(cov)) / d + 1e-10


def _floored_chol(cov: np.ndarray) -> np.ndarray:
    cov = cov + _floor_eps(cov) * np.eye(cov.shape[0])
    cov = 0.5 * (cov + cov.T)
    return np.linalg.cholesky(cov)


def mahalanobis_sq(X, mean, chol) -> np.ndarray:
    """Squared Mahalanobis distances via the covariance's Cholesky factor.

    ``chol`` is lower-triangular L with covariance = L @ L.T; distances come
    from one triangular solve, never an explicit inverse.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    diff = (X - np.asarray(mean, dtype=np.float64)).T
    z = solve_triangular(chol, diff, lower=True)
    return np.sum(z * z, axis=0)


@dataclass(frozen=True)
class GmmConfig:
    max_components: int = 3
    max_iter: int = 200
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.max_components < 1:
            raise ValueError("max_components must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


@dataclass(frozen=True)
class GmmModel:
    """Per-class mixtures: class id -> list of (weight, mean, chol) triples."""

    components: dict
    n_features: int
    dropped_classes: tuple = ()
    em_histories: tuple = ()  # one LL-per-iteration array per EM run

    def __post_init__(self):
        if not self.components:
            raise ValueError("model has no fitted classes")


@dataclass(frozen=True)
class TiedGaussModel:
    """Class means with one shared covariance factor."""

    means: dict
    chol: np.ndarray
    dropped_classes: tuple = ()

    def __post_init__(self):
        if not self.means:
            raise ValueError("model has no fitted classes")


def _farthest_point_seeds(X: np.ndarray, k: int, rng) -> np.ndarray:
    first = int(rng.integers(X.shape[0]))
    picks = [first]
    dist = np.sum((X - X[first]) ** 2, axis=1)
    for _ in range(k - 1):
        nxt = int(np.argmax(dist))
        picks.append(nxt)
        dist = np.minimum(dist, np.sum((X - X[nxt]) ** 2, axis=1))
    return X[picks].copy()


def _component_log_pdf(X, mean, chol):
    d = X.shape[1]
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return -0.5 * (mahalanobis_sq(X, mean, chol) + d * _LOG_2PI + log_det)


def _class_cov(X: np.ndarray, diagonal: bool) -> np.ndarray:
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / X.shape[0]
    if diagonal:
        cov = np.diag(np.diag(cov))
    return cov


def _em_fit(X: np.ndarray, k: int, cfg: GmmConfig, rng, diagonal: bool):
    """One EM run; returns (components, final LL, LL history)."""
    n, d = X.shape
    means = _farthest_point_seeds(X, k, rng)
    base_cov = _class_cov(X, diagonal)
    chols = [_floored_chol(base_cov) for _ in range(k)]
    weights = np.full(k, 1.0 / k)
    history = []
    prev_ll = -np.inf
    prev_params = (weights, means, chols)
    for step in range(cfg.max_iter + 1):
        log_joint = np.column_stack([
            np.log(weights[c]) + _component_log_pdf(X, means[c], chols[c])
            for c in range(k)
        ])
        row_max = log_joint.max(axis=1, keepdims=True)
        log_norm = row_max[:, 0] + np.log(np.exp(log_joint - row_max).sum(axis=1))
        ll = float(log_norm.sum())
        if ll < prev_ll - 1e-8:
            # only the SPD floor can push the likelihood down (a component
            # collapsed and the floor binds); keep the better previous fit
            weights, means, chols = prev_params
            break
        history.append(ll)
        converged = np.isfinite(prev_ll) and abs(ll - prev_ll) <= cfg.tol * max(1.0, abs(prev_ll))
        prev_ll = ll
        if converged or step == cfg.max_iter:
            break
        prev_params = (weights, means, chols)
        resp = np.exp(log_joint - log_norm[:, None])
        counts = resp.sum(axis=0)
        weights = counts / n
        safe = np.maximum(counts, 1e-12)
        means = (resp.T @ X) / safe[:, None]
        new_chols = []
        for c in range(k):
            centered = X - means[c]
            cov = (resp[:, c][:, None] * centered).T @ centered / safe[c]
            if diagonal:
                cov = np.diag(np.diag(cov))
            new_chols.append(_floored_chol(cov))
        chols = new_chols
    keep = weights > 1e-9
    if not keep.all():
        weights = weights[keep] / weights[keep].sum()
        means = means[keep]
        chols = [ch for ch, k_ in zip(chols, keep) if k_]
    comps = [(float(w), means[c].copy(), chols[c]) for c, w in enumerate(weights)]
    return comps, prev_ll, np.array(history)


def _bic(ll: float, n: int, k: int, d: int, diagonal: bool) -> float:
    cov_params = k * d if diagonal else k * d * (d + 1) // 2
    p = (k - 1) + k * d + cov_params
    return -2.0 * ll + p * np.log(n)


def fit_gmm_per_class(X, y, n_classes: int, config: GmmConfig = GmmConfig()) -> GmmModel:
    """Fit one BIC-selected GMM per labeled class.

    Classes with no labeled rows are omitted from the model and flagged in
    ``dropped_classes`` (with a warning). Component counts range over
    1..min(max_components, class size). Deterministic given ``config.seed``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with aligned 1-D y")
    d = X.shape[1]
    components: dict = {}
    dropped = []
    histories: list[np.ndarray] = []
    for k in range(n_classes):
        Xk = X[y == k]
        n_k = Xk.shape[0]
        if n_k == 0:
            dropped.append(k)
            continue
        diagonal = n_k < d + 1
        rng = np.random.default_rng((config.seed, k))
        best = None
        for c in range(1, min(config.max_components, n_k) + 1):
            comps, ll, history = _em_fit(Xk, c, config, rng, diagonal)
            histories.append(history)
            score = _bic(ll, n_k, c, d, diagonal)
            if best is None or score < best[0]:
                best = (score, comps)
        components[k] = best[1]
    if dropped:
        warnings.warn(f"classes with no labeled rows omitted: {dropped}", stacklevel=2)
    return GmmModel(components, d, dropped_classes=tuple(dropped),
                    em_histories=tuple(histories))


def id_confidence_gmm(model: GmmModel, X) -> np.ndarray:
    """max over classes and components of -(x-mu)^T Sigma^-1 (x-mu)."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError("feature width mismatch")
    best = np.full(X.shape[0], -np.inf)
    for comps in model.components.values():
        for _, mean, chol in comps:
            np.maximum(best, -mahalanobis_sq(X, mean, chol), out=best)
    return best


def fit_tied_gaussians(X, y, n_classes: int) -> TiedGaussModel:
    """Class means plus one pooled within-class covariance.

    The pooled covariance divides the within-class scatter by the total
    labeled count. Requires >= 2 labeled rows overall; an all-identical
    labeled set degenerates to the regularization floor (warned).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be (n, d) with aligned 1-D y")
    n, d = X.shape
    if n < 2:
        raise ValueError("need at least 2 labeled rows")
    means: dict = {}
    scatter = np.zeros((d, d))
    dropped = []
    for k in range(n_classes):
        Xk = X[y == k]
        if Xk.shape[0] == 0:
            dropped.append(k)
            continue
        mu = Xk.mean(axis=0)
        means[k] = mu
        centered = Xk - mu
        scatter += centered.T @ centered
    cov = scatter / n
    if float(np.trace(cov)) == 0.0:
        warnings.warn("degenerate labeled set: covariance is the floor only",
                      stacklevel=2)
    if dropped:
        warnings.warn(f"classes with no labeled rows omitted: {dropped}", stacklevel=2)
    return TiedGaussModel(means, _floored_chol(cov), dropped_classes=tuple(dropped))


def id_confidence_tied(model: TiedGaussModel, X) -> np.ndarray:
    """max over classes of -(x-mu_k)^T Sigma^-1 (x-mu_k) under the shared factor."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    best = np.full(X.shape[0], -np.inf)
    for mean in model.means.values():
        np.maximum(best, -mahalanobis_sq(X, mean, model.chol), out=best)
    return best


def normalize_scores(scores) -> np.ndarray:
    """Min-max rescale to [0, 1], constant inputs becoming all 0.5.

    Order-preserving: larger stays more in-distribution. Idempotent on inputs
    already spanning [0, 1].
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("empty score vector")
    lo = float(scores.min())
    hi = float(scores.max())
    if hi == lo:
        return np.full(scores.shape, 0.5)
    return (scores - lo) / (hi - lo)
