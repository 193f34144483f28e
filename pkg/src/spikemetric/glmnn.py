"""Large-margin objective data over the training graph.

Same-label edge pairs and opposing triplets drive the objective

    sum_{(i,j): y_i=y_j} d_ij(M)
      + rho * sum_{(i,j),(i,l): y_i=y_j=-y_l} [d_ij(M) + gamma - d_il(M)]_+

with d_ij(M) = tr(M F_ij) and F_ij = (f_i-f_j)(f_i-f_j)^T.  The hinge terms
linearize through auxiliary variables, turning the problem into a linear
objective with linear constraints over the PSD cone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyProblem
from .graph import GraphTopology


@dataclass(frozen=True)
class GlmnnConfig:
    rho: float = 1.0
    gamma: float = 1.0
    eps_trace: float = 1e-3

    def __post_init__(self):
        if self.rho <= 0 or self.gamma <= 0 or self.eps_trace < 0:
            raise ValueError("rho > 0, gamma > 0, eps_trace >= 0 required")


@dataclass(frozen=True)
class TripletSet:
    """Same-label edge pairs (i, j) and opposing triplets (i, j, l).

    A triplet has edges (i,j) and (i,l) with y_i = y_j = -y_l; node i is the
    pivot, so an undirected same-label edge can appear as a pivot pair twice.
    Same pairs are stored unordered with i < j.
    """

    same_pairs: tuple
    triplets: tuple


class OuterProductCache:
    """F_ij = (f_i - f_j)(f_i - f_j)^T for every node pair the objective touches."""

    def __init__(self, features):
        self._features = np.asarray(features, dtype=float)
        self._cache = {}

    @property
    def feature_dim(self):
        return self._features.shape[1]

    def get(self, i, j):
        key = (min(i, j), max(i, j))
        if key not in self._cache:
            diff = self._features[key[0]] - self._features[key[1]]
            self._cache[key] = np.outer(diff, diff)
        return self._cache[key]

    def diff(self, i, j):
        key = (min(i, j), max(i, j))
        return self._features[key[0]] - self._features[key[1]]


def build_triplets(topology: GraphTopology, labels) -> TripletSet:
    """Exhaustively enumerate same-label pairs and opposing triplets over E."""
    y = np.asarray(labels, dtype=int)
    adj = {i: set() for i in range(topology.n_nodes)}
    for i, j in topology.edges:
        adj[i].add(j)
        adj[j].add(i)
    same = set()
    trips = []
    for i in range(topology.n_nodes):
        same_nb = sorted(j for j in adj[i] if y[j] == y[i])
        opp_nb = sorted(l for l in adj[i] if y[l] == -y[i])
        for j in same_nb:
            same.add((min(i, j), max(i, j)))
            for l in opp_nb:
                trips.append((i, j, l))
    return TripletSet(tuple(sorted(same)), tuple(trips))


def trace_form_distance(metric_entries, f_outer) -> float:
    """d_ij = tr(M F_ij); equals the quadratic form on the same pair."""
    m = np.asarray(metric_entries, dtype=float)
    f = np.asarray(f_outer, dtype=float)
    if m.shape != f.shape:
        raise DimensionMismatch(f"shape mismatch {m.shape} vs {f.shape}")
    return float(np.tensordot(m, f))


def glmnn_objective(metric_entries, triplet_set: TripletSet, cache: OuterProductCache,
                    config: GlmnnConfig) -> float:
    """Evaluate the margin objective at M (without the trace regularizer)."""
    m = np.asarray(metric_entries, dtype=float)
    total = 0.0
    for i, j in triplet_set.same_pairs:
        total += trace_form_distance(m, cache.get(i, j))
    hinge = 0.0
    for i, j, l in triplet_set.triplets:
        gap = (trace_form_distance(m, cache.get(i, j)) + config.gamma
               - trace_form_distance(m, cache.get(i, l)))
        if gap > 0:
            hinge += gap
    return total + config.rho * hinge


@dataclass(frozen=True)
class GlmnnProblem:
    """Everything a metric solver needs: triplet data, outer products, knobs."""

    triplet_set: TripletSet
    cache: OuterProductCache
    config: GlmnnConfig

    @property
    def k(self):
        return self.cache.feature_dim

    def objective(self, metric_entries) -> float:
        """Margin objective plus the eps_trace boundedness regularizer."""
        m = np.asarray(metric_entries, dtype=float)
        return (glmnn_objective(m, self.triplet_set, self.cache, self.config)
                + self.config.eps_trace * float(np.trace(m)))


def build_problem(topology: GraphTopology, labels, features,
                  config: GlmnnConfig = GlmnnConfig()) -> GlmnnProblem:
    triplet_set = build_triplets(topology, labels)
    return GlmnnProblem(triplet_set, OuterProductCache(features), config)


@dataclass(frozen=True)
class SdpProblem:
    """Vectorized description of the cone program over (upper-tri M, deltas).

    Variables are the K(K+1)/2 upper-triangle entries of M in row-major (i<=j)
    order followed by one delta per triplet.  Constraint rows encode
    a^T x <= b; delta nonnegativity is a per-variable bound.  The objective
    includes eps_trace on the diagonal entries.
    """

    k: int
    objective: np.ndarray
    constraint_rows: np.ndarray
    constraint_rhs: np.ndarray
    n_deltas: int
    unbounded_risk: bool


def upper_tri_index(k):
    """Map (i, j) with i <= j to the row-major upper-triangle position."""
    idx = {}
    pos = 0
    for i in range(k):
        for j in range(i, k):
            idx[(i, j)] = pos
            pos += 1
    return idx


def _tri_coeffs(f, idx, k):
    """Coefficients of tr(M F) over upper-triangle variables."""
    c = np.zeros(len(idx))
    for i in range(k):
        c[idx[(i, i)]] += f[i, i]
        for j in range(i + 1, k):
            c[idx[(i, j)]] += 2.0 * f[i, j]
    return c


def build_sdp(triplet_set: TripletSet, cache: OuterProductCache,
              config: GlmnnConfig) -> SdpProblem:
    """Emit the linear objective and constraints of the cone form."""
    if not triplet_set.same_pairs and not triplet_set.triplets:
        raise EmptyProblem("no same-label pairs and no triplets")
    k = cache.feature_dim
    idx = upper_tri_index(k)
    n_tri = len(idx)
    n_deltas = len(triplet_set.triplets)
    c = np.zeros(n_tri + n_deltas)
    for i, j in triplet_set.same_pairs:
        c[:n_tri] += _tri_coeffs(cache.get(i, j), idx, k)
    for t in range(n_deltas):
        c[n_tri + t] = config.rho
    for i in range(k):
        c[idx[(i, i)]] += config.eps_trace

    rows = np.zeros((n_deltas, n_tri + n_deltas))
    rhs = np.zeros(n_deltas)
    for t, (i, j, l) in enumerate(triplet_set.triplets):
        g = cache.get(i, j) - cache.get(i, l)
        rows[t, :n_tri] = _tri_coeffs(g, idx, k)
        rows[t, n_tri + t] = -1.0
        rhs[t] = -config.gamma

    unbounded_risk = False
    if config.eps_trace == 0:
        touched = np.zeros(k, dtype=bool)
        pairs = set(triplet_set.same_pairs)
        for i, j, l in triplet_set.triplets:
            pairs.add((min(i, j), max(i, j)))
            pairs.add((min(i, l), max(i, l)))
        for i, j in pairs:
            touched |= np.abs(np.diag(cache.get(i, j))) > 0
        if not touched.all():
            unbounded_risk = True
            warnings.warn(
                "UnboundedRisk: some diagonal entries have zero objective "
                "coefficient and eps_trace is 0",
                stacklevel=2,
            )

    return SdpProblem(k, c, rows, rhs, n_deltas, unbounded_risk)
