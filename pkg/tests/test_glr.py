import numpy as np
import pytest

from spikemetric.glr import (
    GlrConfig,
    glr_gradient,
    glr_value,
    project_psd,
    train_glr,
)
from spikemetric.graph import GraphTopology, MetricMatrix, build_train_topology


def test_value_same_label_pairs_vanish():
    topo = GraphTopology(2, 0, ((0, 1),))
    f = np.array([[0.0, 0.0], [1.0, 0.0]])
    v = glr_value(topo, f, [1, 1], MetricMatrix.identity(2), mu=0.0)
    assert v == 0.0


def test_value_single_opposing_edge():
    # weight 0.5 from distance ln 2, (y_i - y_j)^2 = 4
    topo = GraphTopology(2, 0, ((0, 1),))
    f = np.array([[0.0], [np.sqrt(np.log(2.0))]])
    v = glr_value(topo, f, [1, -1], MetricMatrix.identity(1), mu=0.0)
    assert v == pytest.approx(2.0)


def test_value_trace_term_only():
    topo = GraphTopology(3, 0, ())
    v = glr_value(topo, np.zeros((3, 3)), [1, 1, -1], MetricMatrix.identity(3), mu=2.0)
    assert v == pytest.approx(6.0)


def test_gradient_same_labels_is_trace_term():
    topo = build_train_topology(4, "complete")
    f = np.random.default_rng(0).standard_normal((4, 3))
    g = glr_gradient(topo, f, [1, 1, 1, 1], MetricMatrix.identity(3), mu=0.7)
    assert np.allclose(g, 0.7 * np.eye(3))


def test_gradient_single_opposing_pair_at_zero_metric():
    topo = GraphTopology(2, 0, ((0, 1),))
    f = np.array([[1.0, 0.0], [0.0, 0.0]])
    g = glr_gradient(topo, f, [1, -1], MetricMatrix(np.zeros((2, 2))), mu=0.0)
    expected = -4.0 * np.outer([1.0, 0.0], [1.0, 0.0])
    assert np.allclose(g, expected)


def test_gradient_matches_central_differences():
    rng = np.random.default_rng(7)
    k, n = 4, 8
    topo = build_train_topology(n, "sparse", d_t=3)
    f = rng.standard_normal((n, k))
    y = np.array([1, -1, 1, 1, -1, -1, 1, -1])
    a = rng.standard_normal((k, k))
    metric = MetricMatrix(project_psd(a @ a.T / k) + 0.1 * np.eye(k))
    mu = 0.3
    grad = glr_gradient(topo, f, y, metric, mu)

    h = 1e-6
    for i in range(k):
        for j in range(i, k):
            step = np.zeros((k, k))
            step[i, j] = step[j, i] = h
            up = glr_value(topo, f, y, MetricMatrix(metric.entries + step), mu)
            dn = glr_value(topo, f, y, MetricMatrix(metric.entries - step), mu)
            fd = (up - dn) / (2 * h)
            analytic = grad[i, j] + grad[j, i] if i != j else grad[i, i]
            assert analytic == pytest.approx(fd, rel=1e-5, abs=1e-7)


def test_project_psd_clips_negative_eigenvalues():
    m = np.array([[1.0, 0.0], [0.0, -2.0]])
    p = project_psd(m)
    assert np.allclose(p, [[1.0, 0.0], [0.0, 0.0]])
    lam = np.linalg.eigvalsh(p)
    assert lam[0] >= -1e-12


def test_train_same_labels_converges_to_zero():
    topo = build_train_topology(6, "sparse", d_t=2)
    f = np.random.default_rng(1).standard_normal((6, 2))
    result = train_glr(topo, f, np.ones(6, dtype=int), GlrConfig(mu=0.5, max_iters=2000))
    assert np.allclose(result.metric.entries, 0.0, atol=1e-3)


def test_train_scalar_stationary_point():
    # one opposing pair with (f_i - f_j)^2 = a: optimum m* = ln(4a/mu)/a
    a, mu = 2.0, 0.5
    topo = GraphTopology(2, 0, ((0, 1),))
    f = np.array([[0.0], [np.sqrt(a)]])
    result = train_glr(topo, f, [1, -1], GlrConfig(mu=mu, max_iters=5000, rel_tol=1e-12))
    m_star = np.log(4 * a / mu) / a
    assert result.metric.entries[0, 0] == pytest.approx(m_star, rel=1e-3)


def test_train_zero_step_returns_init():
    topo = build_train_topology(4, "sparse", d_t=2)
    f = np.random.default_rng(2).standard_normal((4, 2))
    result = train_glr(topo, f, [1, -1, 1, -1], GlrConfig(step=0.0))
    assert np.array_equal(result.metric.entries, np.eye(2))
    assert not result.converged


def test_train_objective_non_increasing_and_psd():
    rng = np.random.default_rng(3)
    topo = build_train_topology(12, "sparse", d_t=4)
    f = rng.standard_normal((12, 5))
    y = np.where(rng.random(12) > 0.5, 1, -1)
    y[:2] = [1, -1]
    result = train_glr(topo, f, y, GlrConfig(mu=0.2))
    objs = np.array(result.objectives)
    assert np.all(np.diff(objs) <= 1e-9)
    assert np.linalg.eigvalsh(result.metric.entries)[0] >= -1e-8
