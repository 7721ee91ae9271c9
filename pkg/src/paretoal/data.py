"""Dataset ingestion, ID/OOD splitting, synthetic pools, and the labeling oracle.

A :class:`Dataset` always stores features as a dense float matrix and labels as
contiguous 0-based class ids, with ``-1`` marking out-of-distribution rows.
``label_values`` remembers the original label behind each contiguous id so that
class selections in configs can be written in the source file's label space.
"""

import csv as _csv
import io
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, ParseError

OOD_LABEL = -1


@dataclass(frozen=True)
class Dataset:
    """Immutable labeled sample collection.

    ``labels[i]`` is in ``[0, n_classes)`` for in-distribution rows and
    ``OOD_LABEL`` otherwise. ``label_values[k]`` is the original label that was
    remapped to contiguous id ``k``.
    """

    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    name: str = ""
    label_values: tuple = ()

    def __post_init__(self):
        f = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "features", f)
        object.__setattr__(self, "labels", y)
        if f.ndim != 2 or f.shape[1] < 1:
            raise ValueError("features must be a 2-D matrix with >= 1 column")
        if y.shape != (f.shape[0],):
            raise ValueError("labels must be 1-D and aligned with features rows")
        if y.size and (y.min() < OOD_LABEL or y.max() >= self.n_classes):
            raise ValueError("labels must lie in {-1} U [0, n_classes)")
        present = set(np.unique(y[y >= 0]).tolist())
        missing = sorted(set(range(self.n_classes)) - present)
        if missing:
            raise ValueError(f"ID classes without any row: {missing}")
        if not self.label_values:
            object.__setattr__(self, "label_values", tuple(range(self.n_classes)))
        elif len(self.label_values) != self.n_classes:
            raise ValueError("label_values must have one entry per ID class")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def id_mask(self) -> np.ndarray:
        return self.labels >= 0

    def original_label(self, row: int) -> object:
        """Original (pre-remap) label of a row; OOD rows report OOD_LABEL."""
        lab = int(self.labels[row])
        return self.label_values[lab] if lab >= 0 else OOD_LABEL


def _as_lines(source) -> list[str]:
    if hasattr(source, "read"):
        source = source.read()
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if not isinstance(source, str):
        raise TypeError("expected a string or a readable text stream")
    return source.splitlines()


def parse_libsvm(source, name: str = "") -> Dataset:
    """Parse sparse ``<label> <index>:<value> ...`` rows into a dense Dataset.

    Indices are 1-based and must be strictly increasing within a row; the
    feature dimension is the maximum index seen anywhere. Labels must be
    integer-valued and are remapped to contiguous 0-based ids in sorted
    original order (the mapping is kept in ``label_values``). The label -1 is
    reserved: rows carrying it load as OOD, mirroring how serialize_libsvm
    writes OOD rows, so serialize-then-parse reproduces a dataset exactly.
    Malformed tokens, non-increasing indices, and empty input raise
    :class:`ParseError` naming the 1-based line number.
    """
    rows: list[tuple[int, list[tuple[int, float]]]] = []
    max_index = 0
    for lineno, raw in enumerate(_as_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        try:
            label_f = float(tokens[0])
        except ValueError:
            raise ParseError(f"malformed label {tokens[0]!r}", lineno) from None
        if label_f != int(label_f):
            raise ParseError(f"non-integer label {tokens[0]!r}", lineno)
        pairs: list[tuple[int, float]] = []
        prev_index = 0
        for tok in tokens[1:]:
            head, sep, tail = tok.partition(":")
            if not sep:
                raise ParseError(f"malformed feature token {tok!r}", lineno)
            try:
                index = int(head)
                value = float(tail)
            except ValueError:
                raise ParseError(f"malformed feature token {tok!r}", lineno) from None
            if index < 1:
                raise ParseError(f"feature index {index} must be >= 1", lineno)
            if index <= prev_index:
                raise ParseError(
                    f"feature index {index} not strictly increasing", lineno
                )
            prev_index = index
            pairs.append((index, value))
        max_index = max(max_index, prev_index)
        rows.append((int(label_f), pairs))
    if not rows:
        raise ParseError("empty input: no data rows")
    if max_index == 0:
        raise ParseError("no feature tokens in input")
    features = np.zeros((len(rows), max_index), dtype=np.float64)
    raw_labels = np.empty(len(rows), dtype=np.int64)
    for i, (lab, pairs) in enumerate(rows):
        raw_labels[i] = lab
        for index, value in pairs:
            features[i, index - 1] = value
    values = np.unique(raw_labels[raw_labels != OOD_LABEL])
    remap = {v: k for k, v in enumerate(values.tolist())}
    labels = np.array([OOD_LABEL if v == OOD_LABEL else remap[v]
                       for v in raw_labels.tolist()], dtype=np.int64)
    return Dataset(features, labels, len(values), name=name,
                   label_values=tuple(int(v) for v in values.tolist()))


def serialize_libsvm(ds: Dataset) -> str:
    """Render a Dataset in sparse LIBSVM text form.

    Zero feature values are omitted, so parse(serialize(ds)) reproduces ds
    exactly as long as every trailing column holds at least one nonzero.
    ID rows carry their original labels; OOD rows are written as -1.
    """
    out = io.StringIO()
    for i in range(ds.n_samples):
        lab = ds.labels[i]
        orig = ds.label_values[lab] if lab >= 0 else OOD_LABEL
        parts = [str(int(orig))]
        row = ds.features[i]
        for j in np.flatnonzero(row != 0.0):
            parts.append(f"{j + 1}:{row[j]:.17g}")
        out.write(" ".join(parts))
        out.write("\n")
    return out.getvalue()


def load_csv(source, label_col="label", header: bool = True, name: str = "") -> Dataset:
    """Load a delimited table: one row per sample, one column of labels.

    ``label_col`` selects the label column by header name (requires
    ``header=True``) or by 0-based position. All remaining columns must parse
    as floats. Labels may be integers or arbitrary strings; either way they are
    remapped to contiguous ids in sorted original order. In an integer label
    space the value -1 is reserved and loads as OOD.
    """
    lines = _as_lines(source)
    reader = _csv.reader(lines)
    table = [row for row in reader if row]
    if not table:
        raise ParseError("empty input: no data rows")
    offset = 0
    if header:
        head = table[0]
        table = table[1:]
        offset = 1
        if not table:
            raise ParseError("no data rows after header")
        if isinstance(label_col, str):
            if label_col not in head:
                raise ParseError(f"label column {label_col!r} not in header {head}")
            label_idx = head.index(label_col)
        else:
            label_idx = int(label_col)
    else:
        if isinstance(label_col, str):
            raise ConfigError("label column by name requires header=True")
        label_idx = int(label_col)
    width = len(table[0])
    if not 0 <= label_idx < width:
        raise ParseError(f"label column {label_idx} out of range for width {width}")
    raw_labels: list[object] = []
    feats: list[list[float]] = []
    for i, row in enumerate(table):
        lineno = i + 1 + offset
        if len(row) != width:
            raise ParseError(f"expected {width} columns, found {len(row)}", lineno)
        vals = []
        for j, cell in enumerate(row):
            if j == label_idx:
                continue
            try:
                vals.append(float(cell))
            except ValueError:
                raise ParseError(f"non-numeric feature {cell!r}", lineno) from None
        if not vals:
            raise ParseError("row has no feature columns", lineno)
        feats.append(vals)
        raw_labels.append(row[label_idx].strip())
    # Prefer integer label space when every label token is integral.
    try:
        typed = [int(v) for v in raw_labels]
    except ValueError:
        typed = raw_labels
    values = sorted(set(typed))
    if values and isinstance(values[0], int):
        values = [v for v in values if v != OOD_LABEL]
    remap = {v: k for k, v in enumerate(values)}
    labels = np.array([remap.get(v, OOD_LABEL) for v in typed], dtype=np.int64)
    return Dataset(np.asarray(feats), labels, len(values), name=name,
                   label_values=tuple(values))


def make_ood_split(ds: Dataset, id_classes) -> Dataset:
    """Relabel a dataset so ``id_classes`` (original labels) become the ID set.

    Rows whose original label is in ``id_classes`` get contiguous ids assigned
    in sorted original-label order; every other row becomes OOD (-1). Row order
    and features are preserved.
    """
    wanted = set(id_classes)
    if not wanted:
        raise ConfigError("id_classes must be non-empty")
    observed = set(ds.label_values)
    missing = wanted - observed
    if missing:
        raise ConfigError(f"id_classes not present in dataset: {sorted(missing)}")
    ordered = sorted(wanted)
    remap = {v: k for k, v in enumerate(ordered)}
    labels = np.full(ds.n_samples, OOD_LABEL, dtype=np.int64)
    for k, orig in enumerate(ds.label_values):
        if orig in remap:
            labels[ds.labels == k] = remap[orig]
    return Dataset(ds.features, labels, len(ordered), name=ds.name,
                   label_values=tuple(ordered))


def filter_classes(ds: Dataset, keep) -> Dataset:
    """Drop every row whose original label is outside ``keep``.

    The surviving original labels are re-packed into contiguous ids. OOD rows
    survive only if OOD_LABEL itself is listed in ``keep``.
    """
    wanted = set(keep)
    if not wanted:
        raise ConfigError("keep set must be non-empty")
    keep_ood = OOD_LABEL in wanted
    id_wanted = sorted(v for v in wanted if v != OOD_LABEL)
    unknown = set(id_wanted) - set(ds.label_values)
    if unknown:
        raise ConfigError(f"classes not present in dataset: {sorted(unknown)}")
    orig = np.array(
        [ds.label_values[l] if l >= 0 else OOD_LABEL for l in ds.labels.tolist()]
    )
    mask = np.isin(orig, id_wanted)
    if keep_ood:
        mask |= ds.labels == OOD_LABEL
    remap = {v: k for k, v in enumerate(id_wanted)}
    labels = np.array(
        [remap[v] if v != OOD_LABEL else OOD_LABEL for v in orig[mask].tolist()],
        dtype=np.int64,
    )
    return Dataset(ds.features[mask], labels, len(id_wanted), name=ds.name,
                   label_values=tuple(id_wanted))


def subset_rows(ds: Dataset, rows) -> Dataset:
    """Dataset restricted to the given row indices (order preserved)."""
    rows = np.asarray(rows, dtype=np.int64)
    return Dataset(ds.features[rows], ds.labels[rows], ds.n_classes,
                   name=ds.name, label_values=ds.label_values)


@dataclass(frozen=True)
class SyntheticSpec:
    """Geometry of the synthetic two-class pool with an OOD blob.

    Two interleaved Gaussian-noise arcs form the (non-linearly separable) ID
    classes; an isotropic Gaussian blob forms the OOD cluster. The blob center
    sits at ``centroid + unit(ood_direction) * (ood_offset + r_max)`` where
    ``r_max`` is the largest centroid-to-arc-center distance, which guarantees
    its distance to every arc center is at least ``ood_offset``.

    The defaults are calibrated so a linear softmax learner reproduces the
    qualitative entropy-vs-OOD failure: ``ood_direction`` runs along the
    learner's fitted class boundary, which is the only placement where a far
    cluster keeps near-maximal predictive entropy under a linear model (far
    points off that line get extreme logits and near-zero entropy). A blob on
    the extended boundary is drained early by entropy-greedy selection while
    remaining obvious under Mahalanobis scoring.
    """

    n_id: int | tuple = 100
    n_ood: int = 40
    centers: tuple = ((0.0, 0.0), (1.1, 0.6))
    radius: float = 1.0
    spread: float = 0.18
    ood_offset: float = 3.0
    ood_direction: tuple = (0.95, 0.32)
    ood_spread: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if any(n < 1 for n in self.id_counts):
            raise ConfigError("n_id must be >= 1 per class")
        if self.n_ood < 0:
            raise ConfigError("n_ood must be >= 0")
        if len(self.centers) != 2 or any(len(c) != 2 for c in self.centers):
            raise ConfigError("centers must be two planar points")
        if self.radius <= 0 or self.spread <= 0 or self.ood_spread <= 0:
            raise ConfigError("radius and spreads must be > 0")
        if self.ood_offset < 0:
            raise ConfigError("ood_offset must be >= 0")
        if not any(v != 0 for v in self.ood_direction):
            raise ConfigError("ood_direction must be a nonzero vector")

    @property
    def id_counts(self) -> tuple:
        """Per-class ID row counts; a scalar ``n_id`` means equal classes."""
        if isinstance(self.n_id, (tuple, list)):
            if len(self.n_id) != 2:
                raise ConfigError("n_id must be an int or a pair of ints")
            return int(self.n_id[0]), int(self.n_id[1])
        return int(self.n_id), int(self.n_id)


def ood_center(spec: SyntheticSpec) -> np.ndarray:
    """Deterministic OOD blob center implied by a spec."""
    centers = np.asarray(spec.centers, dtype=np.float64)
    centroid = centers.mean(axis=0)
    direction = np.asarray(spec.ood_direction, dtype=np.float64)
    direction = direction / np.linalg.norm(direction)
    r_max = float(np.linalg.norm(centers - centroid, axis=1).max())
    return centroid + direction * (spec.ood_offset + r_max)


def gen_synthetic(spec: SyntheticSpec) -> Dataset:
    """Sample the synthetic dataset described by ``spec`` (seed-deterministic).

    Class 0 is the upper arc around ``centers[0]``, class 1 the lower arc
    around ``centers[1]``; rows come out grouped class 0, class 1, then OOD.
    """
    rng = np.random.default_rng(spec.seed)
    c0, c1 = (np.asarray(c, dtype=np.float64) for c in spec.centers)
    n0, n1 = spec.id_counts
    theta0 = rng.uniform(0.0, np.pi, n0)
    pts0 = c0 + spec.radius * np.column_stack((np.cos(theta0), np.sin(theta0)))
    pts0 += rng.normal(0.0, spec.spread, size=pts0.shape)
    theta1 = rng.uniform(np.pi, 2.0 * np.pi, n1)
    pts1 = c1 + spec.radius * np.column_stack((np.cos(theta1), np.sin(theta1)))
    pts1 += rng.normal(0.0, spec.spread, size=pts1.shape)
    blocks = [pts0, pts1]
    labels = [np.zeros(n0, dtype=np.int64), np.ones(n1, dtype=np.int64)]
    if spec.n_ood:
        blob = ood_center(spec) + rng.normal(0.0, spec.ood_spread, size=(spec.n_ood, 2))
        blocks.append(blob)
        labels.append(np.full(spec.n_ood, OOD_LABEL, dtype=np.int64))
    return Dataset(np.vstack(blocks), np.concatenate(labels), 2,
                   name="synthetic", label_values=(0, 1))


@dataclass
class PoolState:
    """Mutable bookkeeping of one active-learning run over a fixed pool.

    ``labeled`` holds (row index, label) pairs for queried-and-kept ID rows
    plus the seed set; ``exhausted`` holds rows revealed to be OOD (budget was
    spent but no label was gained); ``unlabeled`` is the remaining candidate
    pool in ascending row order. The three parts always partition the pool.
    """

    labeled: list = field(default_factory=list)
    exhausted: set = field(default_factory=set)
    unlabeled: list = field(default_factory=list)
    budget_spent: int = 0
    initial_labeled: int = 0
    n_pool: int = 0

    def check(self):
        lab = {i for i, _ in self.labeled}
        unl = set(self.unlabeled)
        assert len(lab) == len(self.labeled), "duplicate labeled index"
        assert len(unl) == len(self.unlabeled), "duplicate unlabeled index"
        assert not (lab & self.exhausted), "labeled/exhausted overlap"
        assert not (lab & unl), "labeled/unlabeled overlap"
        assert not (self.exhausted & unl), "exhausted/unlabeled overlap"
        assert lab | self.exhausted | unl == set(range(self.n_pool)), \
            "pool partition broken"
        assert all(l >= 0 for _, l in self.labeled), "OOD row in labeled set"
        assert self.budget_spent == len(self.labeled) + len(self.exhausted) \
            - self.initial_labeled, "budget accounting broken"

    def labeled_arrays(self, ds: Dataset) -> tuple[np.ndarray, np.ndarray]:
        idx = np.array([i for i, _ in self.labeled], dtype=np.int64)
        y = np.array([l for _, l in self.labeled], dtype=np.int64)
        return ds.features[idx], y

    def unlabeled_indices(self) -> np.ndarray:
        return np.array(self.unlabeled, dtype=np.int64)


def init_pool(ds: Dataset, n_init: int, seed) -> PoolState:
    """Draw a stratified initial label set and leave the rest unlabeled.

    Selection is round-robin over classes in class-id order, uniformly random
    within each class, so class counts differ by at most one. Only ID rows are
    eligible. Warns when n_init cannot cover every class.
    """
    if n_init < 1:
        raise ConfigError("n_init must be >= 1")
    id_rows = int(np.count_nonzero(ds.id_mask()))
    if n_init > id_rows:
        raise ConfigError(f"n_init={n_init} exceeds {id_rows} available ID rows")
    if n_init < ds.n_classes:
        warnings.warn(
            f"n_init={n_init} < {ds.n_classes} classes: some class starts unlabeled",
            stacklevel=2,
        )
    rng = np.random.default_rng(seed)
    per_class = []
    for k in range(ds.n_classes):
        rows = np.flatnonzero(ds.labels == k)
        per_class.append(rng.permutation(rows).tolist())
    chosen: list[int] = []
    depth = 0
    while len(chosen) < n_init:
        progressed = False
        for k in range(ds.n_classes):
            if depth < len(per_class[k]):
                chosen.append(per_class[k][depth])
                progressed = True
                if len(chosen) == n_init:
                    break
        depth += 1
        assert progressed, "ran out of ID rows mid-stratification"
    chosen_set = set(chosen)
    labeled = [(i, int(ds.labels[i])) for i in sorted(chosen)]
    unlabeled = [i for i in range(ds.n_samples) if i not in chosen_set]
    pool = PoolState(labeled=labeled, exhausted=set(), unlabeled=unlabeled,
                     budget_spent=0, initial_labeled=n_init, n_pool=ds.n_samples)
    pool.check()
    return pool


def oracle_query(ds: Dataset, pool: PoolState, row: int) -> int:
    """Reveal the label of an unlabeled row, spending one unit of budget.

    ID rows move to the labeled set; OOD rows move to the exhausted set (the
    budget is spent either way). Returns the revealed label (-1 for OOD).
    Querying a row that is not currently unlabeled is a usage error.
    """
    row = int(row)
    try:
        pool.unlabeled.remove(row)
    except ValueError:
        raise ValueError(f"row {row} is not in the unlabeled pool") from None
    label = int(ds.labels[row])
    if label >= 0:
        pool.labeled.append((row, label))
    else:
        pool.exhausted.add(row)
    pool.budget_spent += 1
    pool.check()
    return label
