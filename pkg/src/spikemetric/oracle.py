"""Slow, trustworthy reference solvers used by tests and acceptance runs.

These deliberately trade speed for simplicity: a projected subgradient solver
for the convex margin objective over the PSD cone (small instances only), a
grid-refinement minimizer for harmonic inference, and a kNN baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ScaleTooLarge
from .glmnn import GlmnnProblem
from .glr import project_psd
from .graph import MetricMatrix, SimilarityGraph, mahalanobis_distance

MAX_ORACLE_DIM = 12
_TOTAL_ITERS = 50_000


@dataclass
class OracleReport:
    objective: float
    metric: MetricMatrix
    iterations: int
    certified: bool


class _Vectorized:
    """Stacked outer-product arrays so objective/subgradient are single einsums."""

    def __init__(self, problem: GlmnnProblem):
        cfg = problem.config
        cache = problem.cache
        k = problem.k
        self.rho = cfg.rho
        self.gamma = cfg.gamma
        self.base = cfg.eps_trace * np.eye(k)
        for a, b in problem.triplet_set.same_pairs:
            self.base = self.base + cache.get(a, b)
        trips = problem.triplet_set.triplets
        if trips:
            self.gaps_f = np.stack(
                [cache.get(a, b) - cache.get(a, l) for a, b, l in trips]
            )
        else:
            self.gaps_f = np.zeros((0, k, k))

    def objective(self, m):
        lin = float(np.tensordot(self.base, m))
        gaps = np.tensordot(self.gaps_f, m, axes=([1, 2], [0, 1])) + self.gamma
        return lin + self.rho * float(np.sum(np.maximum(gaps, 0.0)))

    def subgradient(self, m):
        gaps = np.tensordot(self.gaps_f, m, axes=([1, 2], [0, 1])) + self.gamma
        # zero branch at the kink: only strictly violated triplets contribute
        active = gaps > 0
        g = self.base.copy()
        if active.any():
            g += self.rho * np.sum(self.gaps_f[active], axis=0)
        return g


def sdp_reference_solve(problem: GlmnnProblem, max_iters: int = _TOTAL_ITERS) -> OracleReport:
    """Projected subgradient descent on the margin objective plus eps*tr(M).

    Runs a diminishing c/sqrt(t) phase followed by geometrically shrinking
    constant-step phases, tracking the best iterate.  The step scale is
    calibrated from the initial objective and subgradient magnitudes.  Only
    desk-scale instances (K <= 12) are accepted.
    """
    k = problem.k
    if k > MAX_ORACLE_DIM:
        raise ScaleTooLarge(f"reference solver capped at K={MAX_ORACLE_DIM}, got {k}")

    vec = _Vectorized(problem)
    m = np.zeros((k, k))
    best_m = m.copy()
    best_obj = vec.objective(m)
    gnorm = max(np.linalg.norm(vec.subgradient(m)), 1e-12)
    c0 = max(best_obj, 1.0) / gnorm
    iters = 0

    # phase A: classic diminishing steps from zero
    phase_a = max_iters // 5
    for t in range(1, phase_a + 1):
        m = project_psd(m - (c0 / np.sqrt(t)) * vec.subgradient(m))
        obj = vec.objective(m)
        if obj < best_obj:
            best_obj, best_m = obj, m.copy()
        iters += 1

    # phase B: constant steps, halved each stage, restarted from the best point
    n_stages = 40
    per_stage = max((max_iters - iters) // n_stages, 1)
    step = c0
    for _stage in range(n_stages):
        if iters >= max_iters:
            break
        m = best_m.copy()
        for _ in range(per_stage):
            m = project_psd(m - step * vec.subgradient(m))
            obj = vec.objective(m)
            if obj < best_obj:
                best_obj, best_m = obj, m.copy()
            iters += 1
        step *= 0.5

    certified = _gradient_mapping_residual(best_m, vec) <= 1e-6
    best_obj = problem.objective(best_m)
    return OracleReport(best_obj, MetricMatrix(project_psd(best_m)), iters, certified)


def _gradient_mapping_residual(m, vec, eta=1e-6):
    return float(np.linalg.norm(project_psd(m - eta * vec.subgradient(m)) - m)) / eta


def brute_force_inference_check(graph: SimilarityGraph, y_train) -> np.ndarray:
    """Minimize y^T L y over the validation entries by grid refinement.

    Evaluates the full quadratic form on a shrinking grid around the best
    candidate, making no use of the linear-system shortcut; limited to at most
    3 validation nodes.
    """
    topo = graph.topology
    m_val = topo.n_val
    if m_val > 3:
        raise ScaleTooLarge("brute-force inference capped at 3 validation nodes")
    y_train = np.asarray(y_train, dtype=float)
    lap = graph.laplacian

    def objective(candidates):
        # candidates: (P, m_val); assemble full label vectors and evaluate
        p = candidates.shape[0]
        ys = np.empty((p, topo.n_nodes))
        ys[:, : topo.n_train] = y_train
        ys[:, topo.n_train:] = candidates
        return np.einsum("pi,ij,pj->p", ys, lap, ys)

    center = np.zeros(m_val)
    radius = 1.5
    grid_1d = np.linspace(-1.0, 1.0, 11)
    for _ in range(60):
        axes = [center[d] + radius * grid_1d for d in range(m_val)]
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m_val)
        vals = objective(mesh)
        center = mesh[int(np.argmin(vals))]
        radius *= 0.35
    return center


def knn_baseline(train_features, train_labels, val_features, k: int = 5,
                 metric: MetricMatrix | None = None) -> np.ndarray:
    """Majority vote over the k nearest training points by Mahalanobis distance."""
    if k < 1 or k % 2 == 0:
        raise ValueError("k must be odd and >= 1")
    train_features = np.asarray(train_features, dtype=float)
    val_features = np.asarray(val_features, dtype=float)
    y = np.asarray(train_labels, dtype=int)
    if metric is None:
        metric = MetricMatrix.identity(train_features.shape[1])
    preds = np.empty(len(val_features), dtype=int)
    for v, f in enumerate(val_features):
        dists = np.array([mahalanobis_distance(f, g, metric) for g in train_features])
        nearest = np.argsort(dists, kind="stable")[: min(k, len(dists))]
        preds[v] = 1 if np.sum(y[nearest]) > 0 else -1
    return preds
