"""Acquisition scores and assembly of the per-round score table."""

import numpy as np
import pytest

from paretoal.acquisition import (ScoreTable, build_score_table, entropy_scores,
                                  margin_scores, querying_density)
from paretoal.data import PoolState, SyntheticSpec, gen_synthetic, init_pool
from paretoal.idscore import GmmConfig, fit_gmm_per_class, id_confidence_gmm
from paretoal.learner import TrainConfig, fit


# -------------------------------------------------------------- entropy_scores

def test_entropy_closed_forms():
    probs = np.array([[0.5, 0.5], [1.0, 0.0], [0.25, 0.75]])
    out = entropy_scores(probs)
    assert np.isclose(out[0], np.log(2.0), atol=1e-12)
    assert out[1] == 0.0
    assert np.isclose(out[2], -(0.25 * np.log(0.25) + 0.75 * np.log(0.75)))
    quarter = entropy_scores(np.full((1, 4), 0.25))
    assert np.isclose(quarter[0], np.log(4.0), atol=1e-12)


def test_entropy_negative_rejected_and_nonnegative():
    with pytest.raises(ValueError):
        entropy_scores(np.array([[-0.1, 1.1]]))
    out = entropy_scores(np.array([[1.0, 0.0], [1e-300, 1.0]]))
    assert (out >= 0.0).all()


def test_entropy_column_permutation_invariant():
    rng = np.random.default_rng(0)
    probs = rng.dirichlet(np.ones(4), size=10)
    assert np.allclose(entropy_scores(probs),
                       entropy_scores(probs[:, ::-1]), atol=1e-12)


# --------------------------------------------------------------- margin_scores

def test_margin_closed_forms():
    out = margin_scores(np.array([[0.5, 0.5], [1.0, 0.0], [0.7, 0.2, 0.1][:2]]))
    assert np.isclose(out[0], 1.0, atol=1e-12)
    assert np.isclose(out[1], 0.0, atol=1e-12)
    three = margin_scores(np.array([[0.7, 0.2, 0.1]]))
    assert np.isclose(three[0], 0.5, atol=1e-12)  # 1 - (0.7 - 0.2)


def test_margin_needs_two_columns():
    with pytest.raises(ValueError):
        margin_scores(np.ones((3, 1)))
    with pytest.raises(ValueError):
        margin_scores(np.ones(3))


def test_margin_uses_top_two_regardless_of_position():
    probs = np.array([[0.1, 0.6, 0.3], [0.3, 0.1, 0.6]])
    assert np.allclose(margin_scores(probs), [1.0 - 0.3, 1.0 - 0.3])


# ------------------------------------------------------------ querying_density

def test_density_uniform_and_normalization():
    dens, degenerate = querying_density(np.array([1.0, 1.0, 1.0, 1.0]))
    assert np.allclose(dens, 0.25) and not degenerate
    dens, degenerate = querying_density(np.array([0.0, 2.0]))
    assert np.array_equal(dens, [0.0, 1.0]) and not degenerate


def test_density_degenerate_fallback_warns():
    with pytest.warns(UserWarning, match="all-zero"):
        dens, degenerate = querying_density(np.zeros(4))
    assert np.array_equal(dens, [0.25] * 4)
    assert degenerate


def test_density_input_validation():
    with pytest.raises(ValueError):
        querying_density(np.array([-0.1, 1.0]))
    with pytest.raises(ValueError):
        querying_density(np.array([]))


def test_density_order_preserved():
    raw = np.array([3.0, 1.0, 2.0])
    dens, _ = querying_density(raw)
    assert np.array_equal(np.argsort(dens), np.argsort(raw))
    assert np.isclose(dens.sum(), 1.0, atol=1e-12)


# ------------------------------------------------------------------ ScoreTable

def test_score_table_validation():
    idx = np.arange(3)
    good = ScoreTable(idx, np.array([0.2, 0.3, 0.5]), np.array([0.0, 0.5, 1.0]))
    assert good.validate() is good
    assert len(good) == 3
    with pytest.raises(ValueError):
        ScoreTable(idx, np.array([0.2, 0.3]), np.zeros(3))
    with pytest.raises(ValueError):
        ScoreTable(idx, np.array([0.2, 0.3, 0.6]), np.zeros(3)).validate()
    with pytest.raises(ValueError):
        ScoreTable(idx, np.array([0.2, 0.3, 0.5]), np.array([0, 0.5, 1.5])).validate()
    with pytest.raises(ValueError):
        ScoreTable(np.array([], dtype=np.int64), np.array([]), np.array([])).validate()


# ------------------------------------------------------------ build_score_table

def fitted_round(seed=0):
    ds = gen_synthetic(SyntheticSpec(n_id=30, n_ood=10, seed=seed))
    pool = init_pool(ds, 10, seed=seed)
    X_l, y_l = pool.labeled_arrays(ds)
    model = fit(X_l, y_l, ds.n_classes, TrainConfig(max_iter=50))
    gmm = fit_gmm_per_class(X_l, y_l, ds.n_classes, GmmConfig(seed=seed))
    return ds, pool, model, gmm


def test_table_shape_and_invariants():
    ds, pool, model, gmm = fitted_round()
    table = build_score_table(model, gmm, ds, pool, "ent")
    assert len(table) == len(pool.unlabeled)
    assert np.array_equal(table.indices, pool.unlabeled_indices())
    assert np.isclose(table.density.sum(), 1.0, atol=1e-9)
    assert (table.id_conf >= 0).all() and (table.id_conf <= 1).all()


def test_table_rand_is_seeded_and_needs_rng():
    ds, pool, model, gmm = fitted_round()
    a = build_score_table(model, gmm, ds, pool, "rand",
                          rng=np.random.default_rng(5))
    b = build_score_table(model, gmm, ds, pool, "rand",
                          rng=np.random.default_rng(5))
    assert np.array_equal(a.density, b.density)
    with pytest.raises(ValueError, match="rng"):
        build_score_table(model, gmm, ds, pool, "rand")


def test_table_maha_density_from_shifted_id_scores():
    ds, pool, model, gmm = fitted_round()
    table = build_score_table(model, gmm, ds, pool, "maha")
    raw_id = id_confidence_gmm(gmm, ds.features[pool.unlabeled_indices()])
    want, _ = querying_density(raw_id - raw_id.min())
    assert np.allclose(table.density, want, atol=1e-12)


def test_table_uniform_probs_give_uniform_density():
    ds, pool, _, gmm = fitted_round()
    X_l, y_l = pool.labeled_arrays(ds)
    untrained = fit(X_l, y_l, ds.n_classes, TrainConfig(max_iter=0))
    table = build_score_table(untrained, gmm, ds, pool, "ent")
    assert np.allclose(table.density, 1.0 / len(table), atol=1e-12)


def test_table_empty_pool_rejected():
    ds, _, model, gmm = fitted_round()
    drained = PoolState(labeled=[(i, int(ds.labels[i])) for i in range(2)],
                        exhausted=set(), unlabeled=[], budget_spent=0,
                        initial_labeled=2, n_pool=2)
    with pytest.raises(ValueError, match="no unlabeled"):
        build_score_table(model, gmm, ds, drained)


def test_table_unknown_acquisition_rejected():
    ds, pool, model, gmm = fitted_round()
    with pytest.raises(ValueError, match="unknown acquisition"):
        build_score_table(model, gmm, ds, pool, "bogus")


def test_table_rejects_unknown_scorer_type():
    ds, pool, model, _ = fitted_round()
    with pytest.raises(TypeError):
        build_score_table(model, object(), ds, pool, "ent")
