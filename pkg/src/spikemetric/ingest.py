"""Data loading, group labelling, balanced splits and synthetic datasets.

Recordings and per-bin feature vectors are exchanged as plain CSV so they can
be produced by any external feature-extraction pipeline:

* ``features.csv``: header ``bin,f0,...,f{K-1}``, one row per usable time bin.
* ``labels.csv``:   header ``bin,label`` with label in {-1, 1}.
* ``spikes.csv``:   header ``cell,repeat,bin``, one row per spike event.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientClassCount, MalformedRow, NonFiniteValue


@dataclass(frozen=True)
class SpikeEvents:
    """Sparse spike raster: (cell, repeat, bin) event triples plus bounds."""

    events: tuple
    n_cells: int
    n_repeats: int
    n_bins: int

    def __post_init__(self):
        seen = set()
        for cell, repeat, b in self.events:
            if not (0 <= cell < self.n_cells):
                raise ValueError(f"cell index {cell} out of range")
            if not (0 <= repeat < self.n_repeats):
                raise ValueError(f"repeat index {repeat} out of range")
            if not (0 <= b < self.n_bins):
                raise ValueError(f"bin index {b} out of range")
            key = (cell, repeat, b)
            if key in seen:
                raise ValueError(f"duplicate spike event {key}")
            seen.add(key)


@dataclass(frozen=True)
class GroupLabels:
    """Per-bin binary labels, +1 (some cell fired) or -1 (all silent)."""

    labels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.labels, dtype=int)
        if arr.ndim != 1:
            raise ValueError("labels must be a vector")
        if not np.all(np.isin(arr, (-1, 1))):
            raise ValueError("labels must be exactly -1 or +1")
        object.__setattr__(self, "labels", arr)

    def __len__(self):
        return len(self.labels)


@dataclass(frozen=True)
class FeatureTable:
    """Per-bin feature vectors; one row per usable bin.

    ``batch_size`` records how many preceding frames each feature vector was
    computed from; bins without that many preceding frames carry no row.
    """

    vectors: np.ndarray
    batch_size: int = 1

    def __post_init__(self):
        arr = np.asarray(self.vectors, dtype=float)
        if arr.ndim != 2 or arr.shape[1] < 1:
            raise ValueError("vectors must be an n_bins x K matrix with K >= 1")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteValue("feature table contains non-finite entries")
        object.__setattr__(self, "vectors", arr)

    @property
    def n_bins(self):
        return self.vectors.shape[0]

    @property
    def feature_dim(self):
        return self.vectors.shape[1]


@dataclass(frozen=True)
class Dataset:
    features: FeatureTable
    labels: GroupLabels
    train_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))
    val_ids: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def __post_init__(self):
        tr = np.asarray(self.train_ids, dtype=int)
        va = np.asarray(self.val_ids, dtype=int)
        if set(tr.tolist()) & set(va.tolist()):
            raise ValueError("train and validation splits overlap")
        y = self.labels.labels
        for ids in (tr, va):
            if len(ids) and abs(int(np.sum(y[ids] == 1)) - int(np.sum(y[ids] == -1))) > 1:
                raise ValueError("split is not label-balanced")
        object.__setattr__(self, "train_ids", tr)
        object.__setattr__(self, "val_ids", va)


@dataclass(frozen=True)
class SynthSpec:
    """Parameters for the planted-metric synthetic dataset."""

    K: int
    n_points: int
    n_informative: int
    noise_rate: float = 0.0
    seed: int = 0
    margin: float = 0.1  # minimum |score| kept; larger means cleaner classes

    def __post_init__(self):
        if self.n_informative > self.K or self.n_informative < 1:
            raise ValueError("n_informative must be in [1, K]")
        if not (0.0 <= self.noise_rate < 0.5):
            raise ValueError("noise_rate must be in [0, 0.5)")
        if self.margin < 0:
            raise ValueError("margin must be nonnegative")


@dataclass(frozen=True)
class PlantedTruth:
    """Ground-truth generator state for synthetic data, kept for recovery tests."""

    informative_dims: tuple
    weights: np.ndarray
    flipped: tuple


def group_labels(spikes: SpikeEvents) -> GroupLabels:
    """Collapse the raster to one binary label per bin: +1 iff any cell fired."""
    active = np.full(spikes.n_bins, -1, dtype=int)
    for _cell, _repeat, b in spikes.events:
        active[b] = 1
    return GroupLabels(active)


def firing_stats(spikes: SpikeEvents) -> np.ndarray:
    """Per-cell fraction of bins with at least one event in any repeat."""
    fired = np.zeros((spikes.n_cells, spikes.n_bins), dtype=bool)
    for cell, _repeat, b in spikes.events:
        fired[cell, b] = True
    return fired.sum(axis=1) / float(spikes.n_bins)


def sample_balanced_ids(labels: GroupLabels, size: int, seed, exclude=()):
    """Label-balanced random index sample: ceil(size/2) positives, floor negatives.

    Deterministic given the seed; raises InsufficientClassCount when a label
    pool (after removing excluded indices) runs out.
    """
    rng = np.random.default_rng(seed)
    y = labels.labels
    banned = set(int(i) for i in exclude)
    pos = [i for i in rng.permutation(np.flatnonzero(y == 1)).tolist() if i not in banned]
    neg = [i for i in rng.permutation(np.flatnonzero(y == -1)).tolist() if i not in banned]
    n_pos = (size + 1) // 2
    n_neg = size // 2
    if n_pos > len(pos) or n_neg > len(neg):
        raise InsufficientClassCount(
            f"need {n_pos} positive and {n_neg} negative bins, "
            f"have {len(pos)} and {len(neg)}"
        )
    return np.sort(np.array(pos[:n_pos] + neg[:n_neg], dtype=int))


def split_balanced(labels: GroupLabels, n_train: int, n_val: int, seed: int):
    """Disjoint, label-balanced train/validation index lists, deterministic per seed."""
    train_ids = sample_balanced_ids(labels, n_train, (seed, 0))
    val_ids = sample_balanced_ids(labels, n_val, (seed, 1), exclude=train_ids)
    return train_ids, val_ids


def synth_generate(spec: SynthSpec):
    """Generate a synthetic dataset with a planted linear label rule.

    Features are i.i.d. standard normal.  The label is the sign of a linear
    score over ``n_informative`` randomly chosen dimensions; points whose score
    falls within 10% of the score's standard deviation of zero are resampled so
    the planted rule stays recoverable.  Labels are then flipped independently
    with probability ``noise_rate``.

    Returns (Dataset, PlantedTruth); the dataset carries empty splits.
    """
    rng = np.random.default_rng(spec.seed)
    dims = np.sort(rng.choice(spec.K, size=spec.n_informative, replace=False))
    w = rng.normal(size=spec.n_informative)
    w /= np.linalg.norm(w)

    # std of the score under the generator: w is unit norm, features N(0,1)
    margin = spec.margin
    feats = np.empty((spec.n_points, spec.K))
    scores = np.empty(spec.n_points)
    n_done = 0
    while n_done < spec.n_points:
        block = rng.normal(size=(2 * (spec.n_points - n_done), spec.K))
        s = block[:, dims] @ w
        keep = np.abs(s) >= margin
        kept = block[keep][: spec.n_points - n_done]
        feats[n_done : n_done + len(kept)] = kept
        scores[n_done : n_done + len(kept)] = s[keep][: len(kept)]
        n_done += len(kept)

    y = np.where(scores > 0, 1, -1)
    flips = rng.random(spec.n_points) < spec.noise_rate
    y[flips] = -y[flips]

    dataset = Dataset(FeatureTable(feats), GroupLabels(y))
    truth = PlantedTruth(tuple(int(d) for d in dims), w, tuple(np.flatnonzero(flips).tolist()))
    return dataset, truth


def subsample_features(table: FeatureTable) -> FeatureTable:
    """2:1 feature subsampling: keep even-indexed dimensions."""
    return FeatureTable(table.vectors[:, ::2], batch_size=table.batch_size)


def _read_rows(path):
    try:
        with open(path, newline="") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise MalformedRow(f"cannot read {path}: {exc}") from exc


def load_features(path) -> FeatureTable:
    """Read features.csv: header ``bin,f0,...,f{K-1}``, rows in bin order."""
    rows = _read_rows(path)
    if not rows:
        raise MalformedRow(f"{path}: empty file")
    header = rows[0]
    if len(header) < 2 or header[0] != "bin":
        raise MalformedRow(f"{path}: bad header {header!r}")
    k = len(header) - 1
    vectors = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != k + 1:
            raise MalformedRow(f"{path}:{lineno}: expected {k + 1} columns, got {len(row)}")
        try:
            vals = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
        if not all(np.isfinite(vals)):
            raise NonFiniteValue(f"{path}:{lineno}: non-finite feature value")
        vectors.append(vals)
    if not vectors:
        raise MalformedRow(f"{path}: no data rows")
    return FeatureTable(np.array(vectors))


def load_labels(path):
    """Read labels.csv; returns (bins, labels) arrays in file order."""
    rows = _read_rows(path)
    if not rows or rows[0] != ["bin", "label"]:
        raise MalformedRow(f"{path}: expected header 'bin,label'")
    bins, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise MalformedRow(f"{path}:{lineno}: expected 2 columns")
        try:
            bins.append(int(row[0]))
            labels.append(int(row[1]))
        except ValueError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
        if labels[-1] not in (-1, 1):
            raise MalformedRow(f"{path}:{lineno}: label must be -1 or 1")
    return np.array(bins, dtype=int), np.array(labels, dtype=int)


def load_spikes(path, n_cells=None, n_repeats=None, n_bins=None) -> SpikeEvents:
    """Read spikes.csv; bounds default to max observed index + 1."""
    rows = _read_rows(path)
    if not rows or rows[0] != ["cell", "repeat", "bin"]:
        raise MalformedRow(f"{path}: expected header 'cell,repeat,bin'")
    events = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise MalformedRow(f"{path}:{lineno}: expected 3 columns")
        try:
            events.append((int(row[0]), int(row[1]), int(row[2])))
        except ValueError as exc:
            raise MalformedRow(f"{path}:{lineno}: {exc}") from exc
    if n_cells is None:
        n_cells = 1 + max((e[0] for e in events), default=-1)
    if n_repeats is None:
        n_repeats = 1 + max((e[1] for e in events), default=-1)
    if n_bins is None:
        n_bins = 1 + max((e[2] for e in events), default=-1)
    return SpikeEvents(tuple(events), n_cells, n_repeats, n_bins)


def save_features(table: FeatureTable, path):
    k = table.feature_dim
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin"] + [f"f{i}" for i in range(k)])
        for b, row in enumerate(table.vectors):
            writer.writerow([b] + [repr(float(v)) for v in row])


def save_labels(labels: GroupLabels, path, bins=None):
    if bins is None:
        bins = range(len(labels))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin", "label"])
        for b, y in zip(bins, labels.labels):
            writer.writerow([int(b), int(y)])
