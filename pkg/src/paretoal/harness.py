"""Active-learning experiment loop, metrics, and report files.

One trial alternates fit -> record -> select -> query: the accuracy recorded
at budget x always belongs to the model fit on exactly the labels held at
budget x, so a run with R query rounds produces R+1 records (budgets 0, b,
..., B). The test split is fixed per experiment; the initial label set and
every stochastic strategy choice are seeded per trial as base_seed + trial.

Reports are deterministic: the records CSV (17-significant-digit floats, LF,
UTF-8), the summary JSON, and the resolved-config manifest are byte-identical
across reruns of the same config and seed.
"""

import csv as _csv
import io
import json
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, learner, strategies
from .acquisition import build_score_table
from .config import ExperimentConfig, resolved_dict
from .data import (Dataset, filter_classes, gen_synthetic, init_pool, load_csv,
                   make_ood_split, oracle_query, parse_libsvm, subset_rows)
from .errors import ConfigError
from .idscore import fit_gmm_per_class, fit_tied_gaussians

# Salt streams: fixed split decisions use base_seed, per-trial streams use
# base_seed + trial. Distinct salts keep the streams independent.
_SALT_TEST, _SALT_CAP, _SALT_INIT, _SALT_STRATEGY, _SALT_SCORER = 101, 102, 103, 104, 105

CSV_COLUMNS = ("trial", "round", "budget_spent", "labeled_count",
               "cumulative_ood_selected", "test_accuracy")

AUBC_DEFINITION = ("trapezoidal area under test_accuracy vs budget_spent, "
                   "including the round-0 record, normalized by the spanned budget")


@dataclass(frozen=True)
class RoundRecord:
    trial: int
    round: int
    budget_spent: int
    labeled_count: int
    cumulative_ood_selected: int
    test_accuracy: float
    wall_time: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.budget_spent < 0 or self.labeled_count < 0:
            raise ValueError("negative counters in round record")
        if not 0.0 <= self.test_accuracy <= 1.0:
            raise ValueError("test_accuracy outside [0, 1]")


@dataclass(frozen=True)
class ExperimentResult:
    config: dict                 # resolved config echo
    dataset_meta: dict
    records: list                # RoundRecords, all trials, trial-major order
    aubc_per_trial: list
    summary: dict


def _load_file_dataset(dcfg, path) -> Dataset:
    text = Path(path).read_text(encoding="utf-8")
    if dcfg.format == "libsvm":
        return parse_libsvm(text, name=Path(path).name)
    return load_csv(text, label_col=dcfg.label_col, header=dcfg.header,
                    name=Path(path).name)


def _stratified_rows(labels: np.ndarray, classes, n: int, rng) -> np.ndarray:
    """Round-robin draw of n rows over the given label values."""
    per_class = []
    for value in classes:
        rows = np.flatnonzero(labels == value)
        per_class.append(rng.permutation(rows).tolist())
    total = sum(len(p) for p in per_class)
    if n > total:
        raise ConfigError(f"asked for {n} rows but only {total} available")
    chosen: list[int] = []
    depth = 0
    while len(chosen) < n:
        for p in per_class:
            if depth < len(p):
                chosen.append(p[depth])
                if len(chosen) == n:
                    break
        depth += 1
    return np.sort(np.array(chosen, dtype=np.int64))


def prepare_data(cfg: ExperimentConfig) -> tuple[Dataset, Dataset, dict]:
    """Build the fixed (training pool, ID test set) pair for an experiment."""
    dcfg = cfg.dataset
    if dcfg.synthetic is not None:
        split = gen_synthetic(dcfg.synthetic)
        originals = split.labels  # synthetic categories: 0, 1, OOD
        id_values = list(range(split.n_classes))
    else:
        raw = _load_file_dataset(dcfg, dcfg.path)
        id_set = set(cfg.id_classes) if cfg.id_classes is not None \
            else set(raw.label_values)
        if cfg.ood_classes is not None:
            raw = filter_classes(raw, id_set | set(cfg.ood_classes))
        split = make_ood_split(raw, id_set)
        originals = np.array([raw.label_values[l] if l >= 0 else -1
                              for l in raw.labels.tolist()])
        id_values = sorted(id_set)

    if dcfg.synthetic is None and dcfg.test_path is not None:
        test_raw = _load_file_dataset(dcfg, dcfg.test_path)
        test_split = make_ood_split(test_raw, set(id_values))
        rows = _stratified_rows(test_split.labels,
                                list(range(test_split.n_classes)),
                                cfg.n_test, np.random.default_rng((cfg.base_seed, _SALT_TEST)))
        test_ds = subset_rows(test_split, rows)
        train_rows = np.arange(split.n_samples)
    else:
        rng = np.random.default_rng((cfg.base_seed, _SALT_TEST))
        id_label_space = list(range(split.n_classes))
        test_rows = _stratified_rows(split.labels, id_label_space, cfg.n_test, rng)
        test_ds = subset_rows(split, test_rows)
        mask = np.ones(split.n_samples, dtype=bool)
        mask[test_rows] = False
        train_rows = np.flatnonzero(mask)

    if cfg.per_class_cap is not None:
        rng = np.random.default_rng((cfg.base_seed, _SALT_CAP))
        kept: list[np.ndarray] = []
        train_orig = originals[train_rows]
        for value in sorted(set(train_orig.tolist())):
            rows = train_rows[train_orig == value]
            if rows.size > cfg.per_class_cap:
                rows = rng.choice(rows, size=cfg.per_class_cap, replace=False)
            kept.append(rows)
        train_rows = np.sort(np.concatenate(kept))
    pool_ds = subset_rows(split, train_rows)

    n_unlabeled = pool_ds.n_samples - cfg.n_init
    if cfg.budget > n_unlabeled:
        warnings.warn(
            f"budget {cfg.budget} exceeds the unlabeled pool ({n_unlabeled}); "
            "the loop will stop on pool exhaustion", stacklevel=2)
    meta = {
        "name": split.name,
        "label_values": list(pool_ds.label_values),
        "n_classes": pool_ds.n_classes,
        "n_features": pool_ds.n_features,
        "pool_rows": int(pool_ds.n_samples),
        "pool_id_rows": int(np.count_nonzero(pool_ds.id_mask())),
        "pool_ood_rows": int(np.count_nonzero(~pool_ds.id_mask())),
        "test_rows": int(test_ds.n_samples),
    }
    return pool_ds, test_ds, meta


def _fit_id_model(cfg: ExperimentConfig, X, y, n_classes, seed):
    if cfg.id_scorer == "gmm":
        return fit_gmm_per_class(X, y, n_classes, cfg.gmm_config(seed))
    return fit_tied_gaussians(X, y, n_classes)


def run_trial(cfg: ExperimentConfig, pool_ds: Dataset, test_ds: Dataset,
              trial: int) -> list:
    """One seeded active-learning trial; returns its RoundRecords."""
    seed = cfg.base_seed + trial
    pool = init_pool(pool_ds, cfg.n_init, seed=(seed, _SALT_INIT))
    if len({label for _, label in pool.labeled}) < 2:
        raise ConfigError("initial labeled set holds fewer than 2 classes")
    strategy_rng = np.random.default_rng((seed, _SALT_STRATEGY))
    acq = strategies.acquisition_for(cfg.strategy)
    ideal = strategies.parse_strategy(cfg.strategy)[0] == "ideal-ent"
    test_X = test_ds.features
    test_y = test_ds.labels
    records = []
    round_idx = 0
    while True:
        start = time.perf_counter()
        X_l, y_l = pool.labeled_arrays(pool_ds)
        model = learner.fit(X_l, y_l, pool_ds.n_classes, cfg.learner)
        accuracy = float(np.mean(learner.predict(model, test_X) == test_y))
        done = pool.budget_spent >= cfg.budget or not pool.unlabeled
        if not done:
            batch = min(cfg.batch_size, cfg.budget - pool.budget_spent,
                        len(pool.unlabeled))
            id_model = _fit_id_model(cfg, X_l, y_l, pool_ds.n_classes,
                                     (seed, _SALT_SCORER, round_idx))
            table = build_score_table(model, id_model, pool_ds, pool, acq,
                                      rng=strategy_rng)
            mask = (pool_ds.labels[table.indices] < 0) if ideal else None
            picked = strategies.select(cfg.strategy, table, batch,
                                       config=cfg.pareto, rng=strategy_rng,
                                       ood_mask=mask)
            records.append(RoundRecord(
                trial, round_idx, pool.budget_spent, len(pool.labeled),
                len(pool.exhausted), accuracy,
                wall_time=time.perf_counter() - start))
            for row in picked:
                oracle_query(pool_ds, pool, int(row))
            round_idx += 1
        else:
            records.append(RoundRecord(
                trial, round_idx, pool.budget_spent, len(pool.labeled),
                len(pool.exhausted), accuracy,
                wall_time=time.perf_counter() - start))
            return records


def aubc(records) -> float:
    """Normalized trapezoidal area under accuracy vs budget for one trial."""
    pts = sorted((rec.budget_spent, rec.test_accuracy) for rec in records)
    budgets = np.array([p[0] for p in pts], dtype=np.float64)
    if budgets.size < 2 or budgets[-1] == budgets[0]:
        raise ValueError("AUBC needs >= 2 records at distinct budgets")
    accs = np.array([p[1] for p in pts])
    return float(np.trapezoid(accs, budgets) / (budgets[-1] - budgets[0]))


def run_experiment(cfg: ExperimentConfig) -> ExperimentResult:
    """Run all trials sequentially and aggregate.

    Trials use seeds base_seed + trial index; any trial failure aborts the
    experiment naming the failing seed.
    """
    pool_ds, test_ds, meta = prepare_data(cfg)
    all_records: list = []
    per_trial: list[list] = []
    for trial in range(cfg.trials):
        try:
            recs = run_trial(cfg, pool_ds, test_ds, trial)
        except Exception as exc:
            raise RuntimeError(
                f"trial {trial} (seed {cfg.base_seed + trial}) failed: {exc}"
            ) from exc
        per_trial.append(recs)
        all_records.extend(recs)
    lengths = {len(recs) for recs in per_trial}
    assert len(lengths) == 1, "trials produced different round counts"
    aubc_values = [aubc(recs) for recs in per_trial]
    acc_matrix = np.array([[rec.test_accuracy for rec in recs] for recs in per_trial])
    ood_matrix = np.array([[rec.cumulative_ood_selected for rec in recs]
                           for recs in per_trial])
    budgets = [rec.budget_spent for rec in per_trial[0]]
    resolved = resolved_dict(cfg)
    summary = {
        "name": cfg.name,
        "strategy": cfg.strategy,
        "trials": cfg.trials,
        "seeds": [cfg.base_seed + i for i in range(cfg.trials)],
        "aubc_mean": float(np.mean(aubc_values)),
        "aubc_sd": float(np.std(aubc_values)),  # population SD: 1 trial -> 0
        "aubc_per_trial": [float(v) for v in aubc_values],
        "round_budget": budgets,
        "round_accuracy_mean": [float(v) for v in acc_matrix.mean(axis=0)],
        "round_ood_mean": [float(v) for v in ood_matrix.mean(axis=0)],
        "code_version": __version__,
        "config": resolved,
    }
    return ExperimentResult(resolved, meta, all_records, aubc_values, summary)


def records_csv(records) -> str:
    """Render records as the canonical CSV text (LF, 17 significant digits)."""
    if not records:
        raise ValueError("no records to write")
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for rec in records:
        out.write(f"{rec.trial},{rec.round},{rec.budget_spent},"
                  f"{rec.labeled_count},{rec.cumulative_ood_selected},"
                  f"{rec.test_accuracy:.17g}\n")
    return out.getvalue()


def read_records(source) -> list:
    """Parse a records CSV back into RoundRecords (wall times are not stored)."""
    if hasattr(source, "read"):
        source = source.read()
    elif isinstance(source, Path) or (isinstance(source, str) and "\n" not in source
                                      and source.endswith(".csv")):
        source = Path(source).read_text(encoding="utf-8")
    reader = _csv.DictReader(io.StringIO(source))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV columns: {reader.fieldnames}")
    return [
        RoundRecord(int(row["trial"]), int(row["round"]),
                    int(row["budget_spent"]), int(row["labeled_count"]),
                    int(row["cumulative_ood_selected"]),
                    float(row["test_accuracy"]))
        for row in reader
    ]


def write_report(result: ExperimentResult, out_dir) -> dict:
    """Write records.csv, summary.json, and manifest.json; returns the paths."""
    if not result.records:
        raise ValueError("refusing to write a report with no records")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "records": out / "records.csv",
        "summary": out / "summary.json",
        "manifest": out / "manifest.json",
    }
    paths["records"].write_bytes(records_csv(result.records).encode("utf-8"))
    paths["summary"].write_bytes(
        (json.dumps(result.summary, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    manifest = {
        "config": result.config,
        "dataset": result.dataset_meta,
        "aubc_definition": AUBC_DEFINITION,
        "code_version": __version__,
    }
    paths["manifest"].write_bytes(
        (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8"))
    return paths
