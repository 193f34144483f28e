"""Degree-capped graph topologies, metric-dependent weights and Laplacians.

Node indices double as temporal order: training nodes 0..N-1 and validation
nodes N..N+M-1 are each assumed sorted by their time bins, so "temporal
proximity" is index proximity within each set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, LabelPoolEmpty

WEIGHT_FLOOR = 1e-300


@dataclass(frozen=True)
class MetricMatrix:
    """Symmetric, numerically PSD K x K metric matrix."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("metric matrix must be square")
        if not np.all(np.isfinite(m)):
            raise ValueError("metric matrix has non-finite entries")
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise ValueError("metric matrix is not symmetric")
        m = 0.5 * (m + m.T)
        lam = np.linalg.eigvalsh(m)[0]
        if lam < -1e-8:
            raise ValueError(f"metric matrix is not PSD (lambda_min = {lam:.3e})")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self):
        return self.entries.shape[0]

    @classmethod
    def identity(cls, k):
        return cls(np.eye(k))


@dataclass(frozen=True)
class GraphTopology:
    """Edge set over n_train training nodes followed by n_val validation nodes."""

    n_train: int
    n_val: int
    edges: tuple  # unordered pairs (i, j) with i < j

    def __post_init__(self):
        n = self.n_train + self.n_val
        seen = set()
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loop in topology")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i},{j}) out of range")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
        object.__setattr__(self, "edges", tuple(sorted(seen)))

    @property
    def n_nodes(self):
        return self.n_train + self.n_val

    def edge_kind(self, i, j):
        a = i < self.n_train
        b = j < self.n_train
        if a and b:
            return "train-train"
        if not a and not b:
            return "val-val"
        return "train-val"

    def degrees(self):
        deg = np.zeros(self.n_nodes, dtype=int)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg

    def edge_arrays(self):
        if not self.edges:
            return np.empty(0, dtype=int), np.empty(0, dtype=int)
        arr = np.asarray(self.edges, dtype=int)
        return arr[:, 0], arr[:, 1]


@dataclass(frozen=True)
class SimilarityGraph:
    """A topology with exponential-kernel edge weights and its Laplacian."""

    topology: GraphTopology
    weights: np.ndarray  # aligned with topology.edges
    laplacian: np.ndarray


def mahalanobis_distance(f_i, f_j, metric: MetricMatrix) -> float:
    """Squared Mahalanobis distance (f_i - f_j)^T M (f_i - f_j), clamped at 0."""
    f_i = np.asarray(f_i, dtype=float)
    f_j = np.asarray(f_j, dtype=float)
    if f_i.shape != f_j.shape or f_i.shape[0] != metric.dim:
        raise DimensionMismatch(
            f"feature dims {f_i.shape}/{f_j.shape} vs metric dim {metric.dim}"
        )
    diff = f_i - f_j
    # numerically PSD metrics can produce tiny negative quadratic forms
    return max(float(diff @ metric.entries @ diff), 0.0)


def edge_weight(d: float) -> float:
    """exp(-d), floored at 1e-300 so edges never silently vanish."""
    if d < 0:
        raise ValueError("distance must be nonnegative")
    return max(float(np.exp(-min(d, 745.0) if d < np.inf else 745.0)), WEIGHT_FLOOR)


def _temporal_neighbors(t, n, cap):
    """Indices of the `cap` temporally nearest nodes to t among 0..n-1.

    ceil(3*cap/5) are taken from before t and the rest from after; a short side
    overflows onto the other side.  Ties are impossible since offsets differ.
    """
    if cap <= 0:
        return []
    n_before = min(-(-3 * cap // 5), t)
    n_after = min(cap - n_before, n - 1 - t)
    # overflow: top up from whichever side still has nodes
    n_before = min(cap - n_after, t)
    before = list(range(t - n_before, t))
    after = list(range(t + 1, t + 1 + n_after))
    return before + after


def build_train_topology(n_train: int, mode: str = "sparse", d_t: int = 5) -> GraphTopology:
    """Temporal-proximity edges among training nodes.

    sparse: each node links to its d_t nearest nodes in time, biased 3:2
    towards earlier nodes.  complete: all pairs.
    """
    if n_train < 2:
        raise ValueError("need at least 2 training nodes")
    if mode == "complete":
        edges = [(i, j) for i in range(n_train) for j in range(i + 1, n_train)]
        return GraphTopology(n_train, 0, tuple(edges))
    if mode != "sparse":
        raise ValueError(f"unknown topology mode {mode!r}")
    if d_t < 1:
        raise ValueError("sparse mode needs d_t >= 1")
    edges = set()
    for t in range(n_train):
        for u in _temporal_neighbors(t, n_train, d_t):
            edges.add((min(t, u), max(t, u)))
    return GraphTopology(n_train, 0, tuple(sorted(edges)))


def build_expanded_topology(
    train: GraphTopology,
    labels_train,
    n_val: int,
    d_v: int,
    d_vt: int,
    seed: int = 0,
) -> GraphTopology:
    """Add validation nodes to a training topology.

    Validation nodes link to each other by temporal proximity (cap d_v) and to
    d_vt training nodes, half from each label class, nearest in time within the
    class.  Each validation node ends up with at least one neighbor of each
    label, which requires d_vt >= 2.
    """
    del seed  # selection is deterministic; kept for interface stability
    y = np.asarray(labels_train, dtype=int)
    if len(y) != train.n_train:
        raise DimensionMismatch("labels_train length must match n_train")
    n = train.n_train
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == -1)
    if len(pos) == 0 or len(neg) == 0:
        raise LabelPoolEmpty("training set must contain both labels")
    if d_vt < 2:
        raise ValueError("d_vt >= 2 required so each val node sees both labels")

    edges = set(train.edges)
    for v in range(n_val):
        for u in _temporal_neighbors(v, n_val, d_v):
            edges.add((n + min(v, u), n + max(v, u)))
        # anchor the val node at a proportional position on the training axis
        if n_val > 1:
            anchor = v * (n - 1) / (n_val - 1)
        else:
            anchor = (n - 1) / 2.0
        n_pos = (d_vt + 1) // 2
        n_neg = d_vt // 2
        for pool, want in ((pos, n_pos), (neg, n_neg)):
            ranked = sorted(pool.tolist(), key=lambda t: (abs(t - anchor), t))
            for t in ranked[: min(want, len(ranked))]:
                edges.add((t, n + v))
    return GraphTopology(n, n_val, tuple(sorted(edges)))


def edge_distances(topology: GraphTopology, features, metric: MetricMatrix):
    """Vectorized Mahalanobis distances for every edge of the topology."""
    features = np.asarray(features, dtype=float)
    if features.shape[0] < topology.n_nodes:
        raise DimensionMismatch("features must cover all nodes")
    if features.shape[1] != metric.dim:
        raise DimensionMismatch("feature dim does not match metric dim")
    ei, ej = topology.edge_arrays()
    if len(ei) == 0:
        return np.empty(0)
    diffs = features[ei] - features[ej]
    d = np.einsum("ek,kl,el->e", diffs, metric.entries, diffs)
    return np.maximum(d, 0.0)


def assemble_laplacian(topology: GraphTopology, features, metric: MetricMatrix) -> SimilarityGraph:
    """Build the similarity graph and its combinatorial Laplacian under M."""
    d = edge_distances(topology, features, metric)
    w = np.maximum(np.exp(-np.minimum(d, 745.0)), WEIGHT_FLOOR)
    n = topology.n_nodes
    lap = np.zeros((n, n))
    ei, ej = topology.edge_arrays()
    for e in range(len(w)):
        i, j, wij = ei[e], ej[e], w[e]
        lap[i, j] -= wij
        lap[j, i] -= wij
        lap[i, i] += wij
        lap[j, j] += wij
    return SimilarityGraph(topology, w, lap)


def export_edges_csv(graph: SimilarityGraph, path):
    """Debug dump of the weighted edge list as ``i,j,weight``."""
    ei, ej = graph.topology.edge_arrays()
    with open(path, "w") as fh:
        fh.write("i,j,weight\n")
        for e in range(len(graph.weights)):
            fh.write(f"{ei[e]},{ej[e]},{graph.weights[e]!r}\n")
