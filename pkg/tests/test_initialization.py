from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.metrics import adjusted_rand_score

from wsbm.generate import planted_params, sample_network
from wsbm.initialization import (
    UnsplittableGroup,
    absolute_spectral_clustering,
    initial_tau,
    merge_columns,
    merge_init,
    spectral_embedding,
    split_init,
)
from wsbm.models import ModelSpec
from wsbm.network import HardPartition, Network, harden, soften
from wsbm.vem import fit

from conftest import planted


def cliques(size=10):
    n = 2 * size
    w = np.zeros((n, n))
    w[:size, :size] = 1
    w[size:, size:] = 1
    np.fill_diagonal(w, 0)
    return Network(w)


def bipartite(size=10):
    n = 2 * size
    w = np.zeros((n, n))
    w[:size, size:] = 1
    w[size:, :size] = 1
    return Network(w)


def test_single_group():
    assert absolute_spectral_clustering(cliques(), 1).labels.tolist() == [0] * 20


def test_two_cliques_recovered_exactly():
    labels = absolute_spectral_clustering(cliques(), 2, seed=0).labels
    assert labels.tolist() == [0] * 10 + [1] * 10


def test_bipartite_needs_the_negative_eigenvalue():
    net = bipartite()
    # oracle: the normalized adjacency of a complete bipartite graph has spectrum {1, -1, 0...}
    A = net.weights
    d = 1 / np.sqrt(A.sum(1))
    vals = np.linalg.eigvalsh(A * d[:, None] * d[None, :])
    assert vals.min() == pytest.approx(-1.0) and vals.max() == pytest.approx(1.0)
    labels = absolute_spectral_clustering(net, 2, seed=0).labels
    assert labels.tolist() == [0] * 10 + [1] * 10


def test_block_embedding_rows_coincide():
    X = spectral_embedding(cliques(), 2)
    assert np.max(np.abs(X[:10] - X[0])) < 1e-8
    assert np.max(np.abs(X[10:] - X[10])) < 1e-8


def test_spectral_is_deterministic_given_seed():
    _, _, net, _ = planted("poisson", Q=3, n=60, seed=2)
    a = absolute_spectral_clustering(net, 3, seed=5).labels
    b = absolute_spectral_clustering(net, 3, seed=5).labels
    np.testing.assert_array_equal(a, b)


def test_spectral_errors_and_empty_network():
    with pytest.raises(ValueError):
        absolute_spectral_clustering(cliques(2), 5)
    part = absolute_spectral_clustering(Network(np.zeros((6, 6))), 3)
    assert part.labels.tolist() == [0, 1, 2, 0, 1, 2]


def test_initial_tau_without_covariates_clusters_raw_network():
    spec = ModelSpec("poisson")
    _, _, net, _ = planted("poisson", Q=2, n=30, seed=1)
    np.testing.assert_array_equal(initial_tau(net, spec, 2, seed=3),
                                  soften(absolute_spectral_clustering(net, 2, seed=3)))


def test_zero_beta_residual_gives_raw_partition():
    # an all-zero covariate forces beta = 0 in the one-group fit
    _, _, raw, _ = planted("poisson", Q=2, n=30, seed=4)
    net = Network(raw.weights, np.zeros((30, 30, 1)), directed=False)
    tau = initial_tau(net, ModelSpec("poisson", "homogeneous"), 2, seed=0)
    np.testing.assert_array_equal(tau, soften(absolute_spectral_clustering(raw, 2, seed=0)))


def masked_network(seed):
    """Planted groups z plus a covariate 'same attribute s' whose effect dominates raw weights."""
    rng = np.random.default_rng(seed)
    n = 100
    z = rng.integers(0, 2, n)
    s = rng.integers(0, 2, n)
    y = 2.0 * (s[:, None] == s[None, :])
    np.fill_diagonal(y, 0)
    lam = np.where(z[:, None] == z[None, :], 4.0, 1.0) * np.exp(y)
    w = np.triu(rng.poisson(lam), 1)
    return Network((w + w.T).astype(float), y[:, :, None], directed=False), z


def test_residual_clustering_unmasks_planted_groups():
    net, z = masked_network(0)
    spec = ModelSpec("poisson", "homogeneous")
    resid = adjusted_rand_score(z, harden(initial_tau(net, spec, 2, seed=0)).labels)
    raw = adjusted_rand_score(z, absolute_spectral_clustering(net, 2, seed=0).labels)
    assert resid >= 0.8
    assert raw < resid


def _fit_at(net, spec, Q, seed=0):
    return fit(net, spec, Q, initial_tau(net, spec, Q, seed))


def _with_labels(prev, labels, Q):
    return replace(prev, Q=Q, tau=soften(HardPartition(np.asarray(labels), Q)))


def test_split_two_member_group():
    spec, _, net, _ = planted("poisson", Q=2, n=12, seed=3)
    labels = np.zeros(12, int)
    labels[[4, 9]] = 1
    prev = _with_labels(_fit_at(net, spec, 2), labels, 2)
    new = harden(split_init(prev, 1, net, seed=0)).labels
    assert sorted(new[[4, 9]].tolist()) == [1, 2]
    assert np.all(new[labels == 0] == 0)


def test_split_recovers_planted_sub_blocks():
    spec = ModelSpec("poisson")
    params = planted_params(spec, 3, 10.0, 1.0)
    net, part = sample_network(spec, params, 90, seed=6)
    prev = _fit_at(net, spec, 2)
    labels = harden(prev.tau).labels
    # the Q=2 group holding two planted blocks is the one with more distinct plant labels
    g = max(range(2), key=lambda k: np.unique(part.labels[labels == k]).size)
    new = harden(split_init(prev, g, net, seed=0)).labels
    assert adjusted_rand_score(part.labels, new) == pytest.approx(1.0)


def test_split_then_merge_is_identity_on_labels():
    spec, _, net, _ = planted("PRMH", Q=3, n=45, seed=2)
    prev = _fit_at(net, spec, 3)
    labels = harden(prev.tau).labels
    for g in range(3):
        if np.sum(labels == g) < 2:
            continue
        tau = split_init(prev, g, net, seed=1)
        new = harden(tau).labels
        outside = labels != g
        np.testing.assert_array_equal(new[outside], labels[outside])
        assert set(new[~outside]) <= {g, 3}
        merged = merge_columns(tau, g, 3)
        np.testing.assert_array_equal(harden(merged).labels, labels)


def test_split_refuses_singletons():
    spec, _, net, _ = planted("poisson", Q=2, n=10, seed=1)
    labels = np.zeros(10, int)
    labels[0] = 1
    prev = _with_labels(_fit_at(net, spec, 2), labels, 2)
    with pytest.raises(UnsplittableGroup):
        split_init(prev, 1, net)


def test_merge_examples():
    spec, _, net, _ = planted("poisson", Q=2, n=10, seed=0)
    two = _fit_at(net, spec, 2)
    np.testing.assert_allclose(merge_init(two, 0, 1), np.ones((10, 1)), atol=1e-15)
    np.testing.assert_allclose(merge_columns(np.array([[0.6, 0.3, 0.1]]), 1, 2), [[0.6, 0.4]])
    with pytest.raises(ValueError):
        merge_init(two, 1, 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(1, 12), st.data())
def test_merged_tau_stays_on_simplex(Q, n, data):
    raw = np.array(data.draw(st.lists(st.lists(st.floats(0.01, 1), min_size=Q, max_size=Q),
                                      min_size=n, max_size=n)))
    tau = raw / raw.sum(1, keepdims=True)
    a = data.draw(st.integers(0, Q - 1))
    b = data.draw(st.integers(0, Q - 1).filter(lambda x: x != a))
    out = merge_columns(tau, a, b)
    assert out.shape == (n, Q - 1)
    np.testing.assert_allclose(out.sum(1), 1.0, atol=1e-10)
    assert np.all(out >= 0)
