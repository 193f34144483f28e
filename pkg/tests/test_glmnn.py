import numpy as np
import pytest

from spikemetric.errors import EmptyProblem
from spikemetric.glmnn import (
    GlmnnConfig,
    OuterProductCache,
    TripletSet,
    build_problem,
    build_sdp,
    build_triplets,
    glmnn_objective,
    trace_form_distance,
    upper_tri_index,
)
from spikemetric.glr import project_psd
from spikemetric.graph import GraphTopology, build_train_topology


def toy_problem(eps=0.1):
    """3 nodes, f = (0,0),(1,0),(0,1), y = (1,1,-1), edges {(0,1),(0,2)}."""
    topo = GraphTopology(3, 0, ((0, 1), (0, 2)))
    f = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    y = np.array([1, 1, -1])
    return build_problem(topo, y, f, GlmnnConfig(rho=1.0, gamma=1.0, eps_trace=eps))


def test_triplet_enumeration_on_toy_graph():
    topo = GraphTopology(3, 0, ((0, 1), (0, 2)))
    ts = build_triplets(topo, [1, 1, -1])
    assert ts.same_pairs == ((0, 1),)
    assert ts.triplets == ((0, 1, 2),)


def test_all_same_labels_no_triplets():
    topo = build_train_topology(5, "complete")
    ts = build_triplets(topo, [1] * 5)
    assert ts.triplets == ()
    assert len(ts.same_pairs) == 10


def test_no_edges_empty_sets():
    ts = build_triplets(GraphTopology(4, 0, ()), [1, -1, 1, -1])
    assert ts.same_pairs == () and ts.triplets == ()


def test_same_edge_can_pivot_twice():
    # path 0-1-2 with y = (1, 1, -1): pair (0,1) pivots at 0 and at 1, but
    # only node 1 has an opposing neighbor
    topo = GraphTopology(3, 0, ((0, 1), (1, 2)))
    ts = build_triplets(topo, [1, 1, -1])
    assert ts.same_pairs == ((0, 1),)
    assert ts.triplets == ((1, 0, 2),)


def test_trace_form_equals_quadratic_form():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((2, 4))
    cache = OuterProductCache(f)
    a = rng.standard_normal((4, 4))
    m = project_psd(a @ a.T)
    diff = f[0] - f[1]
    assert trace_form_distance(m, cache.get(0, 1)) == pytest.approx(
        float(diff @ m @ diff), rel=1e-12, abs=1e-12
    )


def test_objective_hinge_cases():
    # single triplet, control distances directly through diagonal M
    f = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    cache = OuterProductCache(f)
    ts = TripletSet(same_pairs=(), triplets=((0, 1, 2),))
    cfg = GlmnnConfig(rho=1.0, gamma=0.5)
    # d01 = m00, d02 = m11
    assert glmnn_objective(np.diag([1.0, 2.0]), ts, cache, cfg) == 0.0
    assert glmnn_objective(np.diag([1.0, 1.2]), ts, cache, cfg) == pytest.approx(0.3)


def test_objective_at_zero_metric():
    problem = toy_problem()
    cfg = problem.config
    val = glmnn_objective(np.zeros((2, 2)), problem.triplet_set, problem.cache, cfg)
    assert val == pytest.approx(cfg.rho * cfg.gamma * len(problem.triplet_set.triplets))


def test_sdp_shapes_one_triplet():
    problem = toy_problem()
    sdp = build_sdp(problem.triplet_set, problem.cache, problem.config)
    assert sdp.k == 2
    assert len(sdp.objective) == 3 + 1
    assert sdp.constraint_rows.shape == (1, 4)


def test_sdp_objective_matches_hinge_evaluation():
    # at delta_t = hinge_t, the linear objective equals the nonlinear one
    rng = np.random.default_rng(4)
    topo = build_train_topology(8, "sparse", d_t=3)
    f = rng.standard_normal((8, 3))
    y = np.array([1, -1, 1, 1, -1, -1, 1, -1])
    problem = build_problem(topo, y, f, GlmnnConfig(rho=1.3, gamma=0.7, eps_trace=0.0))
    sdp = build_sdp(problem.triplet_set, problem.cache, problem.config)
    idx = upper_tri_index(3)

    a = rng.standard_normal((3, 3))
    m = project_psd(a @ a.T)
    x = np.zeros(len(sdp.objective))
    for (i, j), pos in idx.items():
        x[pos] = m[i, j]
    for t, (a_, b_, l_) in enumerate(problem.triplet_set.triplets):
        gap = (trace_form_distance(m, problem.cache.get(a_, b_))
               + problem.config.gamma
               - trace_form_distance(m, problem.cache.get(a_, l_)))
        x[len(idx) + t] = max(gap, 0.0)
    lin = float(sdp.objective @ x)
    direct = glmnn_objective(m, problem.triplet_set, problem.cache, problem.config)
    assert lin == pytest.approx(direct, rel=1e-10, abs=1e-10)
    # the deltas chosen above satisfy every hinge constraint
    assert np.all(sdp.constraint_rows @ x <= sdp.constraint_rhs + 1e-9)


def test_sdp_unbounded_risk_warning():
    # feature dim 1 never varies across any pair touched by the objective
    topo = GraphTopology(3, 0, ((0, 1), (0, 2)))
    f = np.array([[0.0, 5.0], [1.0, 5.0], [2.0, 5.0]])
    problem = build_problem(topo, [1, 1, -1], f, GlmnnConfig(eps_trace=0.0))
    with pytest.warns(UserWarning, match="UnboundedRisk"):
        sdp = build_sdp(problem.triplet_set, problem.cache, problem.config)
    assert sdp.unbounded_risk


def test_sdp_empty_problem():
    cache = OuterProductCache(np.zeros((2, 2)))
    with pytest.raises(EmptyProblem):
        build_sdp(TripletSet((), ()), cache, GlmnnConfig())


def test_problem_objective_adds_trace_regularizer():
    problem = toy_problem(eps=0.1)
    m = np.diag([0.0, 1.0])
    # same pair d01 = 0, hinge [0 + 1 - 1]+ = 0, trace term 0.1 * 1
    assert problem.objective(m) == pytest.approx(0.1)
