"""End-to-end pipeline and the randomized trial harness.

A "trial" draws a balanced training split (seeded by the train-trial index)
and a disjoint balanced validation split (seeded by both indices), trains a
metric with the requested objective, expands the graph and scores harmonic
inference on the validation nodes.  A "setting" (objective, n_train, topology
mode) is averaged over P_t x P_v such trials.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .gdpa import GdpaConfig, train_gdpa
from .glmnn import build_problem
from .glr import GlrConfig, train_glr
from .graph import (
    MetricMatrix,
    assemble_laplacian,
    build_expanded_topology,
    build_train_topology,
)
from .infer import infer_labels
from .ingest import GroupLabels, sample_balanced_ids
from .oracle import knn_baseline, sdp_reference_solve

OBJECTIVES = ("glr", "glmnn-oracle", "glmnn-gdpa", "knn")


@dataclass(frozen=True)
class RunConfig:
    objective: str = "glr"
    topology_mode: str = "sparse"
    d_t: int = 5
    d_v: int = 5
    d_vt: int = 4
    n_train: int = 20
    n_val: int = 20
    p_t: int = 5
    p_v: int = 5
    seed: int = 0
    knn_k: int = 5
    glr: GlrConfig = field(default_factory=GlrConfig)
    gdpa: GdpaConfig = field(default_factory=GdpaConfig)

    def __post_init__(self):
        if self.objective not in OBJECTIVES:
            raise ValueError(f"objective must be one of {OBJECTIVES}")
        if min(self.n_train, self.n_val, self.p_t, self.p_v) < 1:
            raise ValueError("positive counts required")


@dataclass
class TrialResult:
    setting: str
    trial_t: int
    trial_v: int
    objective: str
    n_train: int
    accuracy: float
    wall_ms: float
    lp_count: int
    objective_final: float


def train_metric(features_train, labels_train, config: RunConfig):
    """Dispatch to the requested trainer; returns (MetricMatrix, lp_count, final_obj)."""
    topology = build_train_topology(len(labels_train), config.topology_mode, config.d_t)
    if config.objective == "glr":
        result = train_glr(topology, features_train, labels_train, config.glr)
        return result.metric, 0, result.objectives[-1], result.converged
    if config.objective == "glmnn-gdpa":
        result = train_gdpa(topology, labels_train, features_train, config.gdpa)
        diag = result.diagnostics
        return result.metric, diag.lp_count, diag.objectives[-1], diag.converged
    if config.objective == "glmnn-oracle":
        problem = build_problem(topology, labels_train, features_train, config.gdpa.glmnn)
        report = sdp_reference_solve(problem)
        return report.metric, 0, report.objective, True
    raise ValueError(f"no trainer for objective {config.objective!r}")


def predict_validation(metric: MetricMatrix, features_train, labels_train,
                       features_val, config: RunConfig, y_true_val=None):
    """Expand the graph with validation nodes and run harmonic inference."""
    train_topo = build_train_topology(len(labels_train), config.topology_mode, config.d_t)
    expanded = build_expanded_topology(
        train_topo, labels_train, len(features_val), config.d_v, config.d_vt, config.seed
    )
    features = np.vstack([features_train, features_val])
    graph = assemble_laplacian(expanded, features, metric)
    return infer_labels(graph, labels_train, y_true_val)


def run_trial(features, labels: GroupLabels, config: RunConfig,
              trial_t: int, trial_v: int, setting: str = "") -> TrialResult:
    train_ids = sample_balanced_ids(labels, config.n_train, (config.seed, trial_t, 0))
    val_ids = sample_balanced_ids(labels, config.n_val, (config.seed, trial_t, trial_v, 1),
                                  exclude=train_ids)
    f_train = features[train_ids]
    f_val = features[val_ids]
    y_train = labels.labels[train_ids]
    y_val = labels.labels[val_ids]

    t0 = time.perf_counter()
    if config.objective == "knn":
        preds = knn_baseline(f_train, y_train, f_val, k=config.knn_k)
        acc = float(np.mean(preds == y_val))
        lp_count, final_obj = 0, 0.0
    else:
        metric, lp_count, final_obj, _converged = train_metric(f_train, y_train, config)
        result = predict_validation(metric, f_train, y_train, f_val, config, y_val)
        acc = result.accuracy
    wall_ms = (time.perf_counter() - t0) * 1e3

    return TrialResult(setting or config.objective, trial_t, trial_v, config.objective,
                       config.n_train, acc, wall_ms, lp_count, final_obj)


def run_setting(features, labels: GroupLabels, config: RunConfig,
                setting: str = "") -> list:
    rows = []
    for t in range(config.p_t):
        for v in range(config.p_v):
            rows.append(run_trial(features, labels, config, t, v, setting))
    return rows


def sweep(features, labels: GroupLabels, base: RunConfig, objectives,
          n_train_values, topology_modes=("sparse",)):
    """Cartesian sweep; returns (trial_rows, summary_dicts)."""
    trial_rows = []
    summaries = []
    for objective in objectives:
        for mode in topology_modes:
            for n_train in n_train_values:
                config = replace(base, objective=objective, topology_mode=mode,
                                 n_train=n_train)
                name = f"{objective}/{mode}/n{n_train}"
                rows = run_setting(features, labels, config, name)
                trial_rows.extend(rows)
                summaries.append(summarize(name, rows))
    return trial_rows, summaries


def summarize(setting: str, rows) -> dict:
    acc = np.array([r.accuracy for r in rows])
    ms = np.array([r.wall_ms for r in rows])
    lps = np.array([r.lp_count for r in rows])
    return {
        "setting": setting,
        "objective": rows[0].objective,
        "n_train": rows[0].n_train,
        "n_trials": len(rows),
        "accuracy_mean": float(acc.mean()),
        "accuracy_std": float(acc.std()),
        "wall_ms_mean": float(ms.mean()),
        "wall_ms_std": float(ms.std()),
        "lp_count_mean": float(lps.mean()),
    }


def write_bench_csv(path, trial_rows, summaries):
    """Per-trial rows followed by one mean-summary row per setting."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting", "trial_t", "trial_v", "objective", "n_train",
                         "accuracy", "wall_ms", "lp_count"])
        for r in sorted(trial_rows, key=lambda r: (r.setting, r.trial_t, r.trial_v)):
            writer.writerow([r.setting, r.trial_t, r.trial_v, r.objective, r.n_train,
                             repr(r.accuracy), repr(r.wall_ms), r.lp_count])
        for s in summaries:
            writer.writerow([s["setting"], "mean", "", s["objective"], s["n_train"],
                             repr(s["accuracy_mean"]), repr(s["wall_ms_mean"]),
                             repr(s["lp_count_mean"])])
