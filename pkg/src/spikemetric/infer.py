"""Harmonic label inference on the expanded graph.

Minimizing y^T L y with the training labels fixed yields the grounded linear
system L_vv y_v = -L_vt y_t; the continuous solution is hard-thresholded at
zero (ties map to -1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .errors import DimensionMismatch, SingularSystem
from .graph import SimilarityGraph

_DIRECT_SOLVE_LIMIT = 2000


@dataclass(frozen=True)
class InferenceResult:
    y_star: np.ndarray      # continuous minimizer over validation nodes
    y_hat: np.ndarray       # thresholded labels in {-1, +1}
    accuracy: float | None  # fraction correct when ground truth supplied


def harmonic_solve(graph: SimilarityGraph, y_train) -> np.ndarray:
    """Continuous validation labels minimizing the expanded graph's GLR."""
    topo = graph.topology
    n, m = topo.n_train, topo.n_val
    y_train = np.asarray(y_train, dtype=float)
    if len(y_train) != n:
        raise DimensionMismatch("y_train length must equal n_train")
    if m == 0:
        return np.empty(0)
    lap = graph.laplacian
    l_vv = lap[n:, n:]
    rhs = -lap[n:, :n] @ y_train

    try:
        if m <= _DIRECT_SOLVE_LIMIT:
            y_v = scipy.linalg.cho_solve(scipy.linalg.cho_factor(l_vv), rhs)
        else:
            y_v, info = scipy.sparse.linalg.cg(l_vv, rhs, rtol=1e-12, maxiter=10 * m)
            if info != 0:
                raise SingularSystem("conjugate gradient failed to converge")
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    except scipy.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc

    residual = np.linalg.norm(l_vv @ y_v - rhs)
    if residual > 1e-10 * max(np.linalg.norm(rhs), 1e-30):
        raise SingularSystem(f"grounded system residual {residual:.3e} too large")
    # maximum principle holds exactly; clip float dust only
    return np.clip(y_v, -1.0, 1.0)


def threshold_labels(y_star) -> np.ndarray:
    """+1 for strictly positive entries, -1 otherwise (zero included)."""
    y_star = np.asarray(y_star, dtype=float)
    if not np.all(np.isfinite(y_star)):
        raise ValueError("non-finite inference values")
    return np.where(y_star > 0, 1, -1).astype(int)


def accuracy(y_hat, y_true) -> float:
    y_hat = np.asarray(y_hat, dtype=int)
    y_true = np.asarray(y_true, dtype=int)
    if y_hat.shape != y_true.shape:
        raise DimensionMismatch("prediction/truth length mismatch")
    if len(y_hat) == 0:
        return 0.0
    return float(np.mean(y_hat == y_true))


def infer_labels(graph: SimilarityGraph, y_train, y_true_val=None) -> InferenceResult:
    y_star = harmonic_solve(graph, y_train)
    y_hat = threshold_labels(y_star)
    acc = accuracy(y_hat, y_true_val) if y_true_val is not None else None
    return InferenceResult(y_star, y_hat, acc)
