import numpy as np
import pytest

from wsbm.generate import planted_params, sample_network
from wsbm.models import ModelSpec, Parameters, check_support
from wsbm.network import validate

from conftest import ALL_MODELS


def test_single_group_labels():
    spec = ModelSpec("poisson")
    _, part = sample_network(spec, Parameters(np.ones(1), np.array([[2.0]])), 30, seed=1)
    assert part.labels.tolist() == [0] * 30


def test_zero_connectivity_gives_empty_bernoulli_network():
    spec = ModelSpec("bernoulli")
    net, _ = sample_network(spec, Parameters(np.array([0.5, 0.5]), np.zeros((2, 2))), 25, seed=2)
    assert not net.weights.any()


def test_group_frequencies_follow_alpha():
    spec = ModelSpec("bernoulli")
    params = Parameters(np.array([0.3, 0.7]), np.full((2, 2), 0.0))
    _, part = sample_network(spec, params, 10_000, seed=3)
    freq = np.bincount(part.labels, minlength=2) / 10_000
    np.testing.assert_allclose(freq, [0.3, 0.7], atol=0.02)


@pytest.mark.parametrize("directed", [False, True])
@pytest.mark.parametrize("name", ALL_MODELS)
def test_samples_are_valid_networks(name, directed):
    spec = ModelSpec.from_name(name)
    p = 2 if spec.has_covariates else 0
    params = planted_params(spec, 2, *{"bernoulli": (0.5, 0.2), "poisson": (4, 1), "gaussian": (1, 0)}[spec.family],
                            p=p, beta=0.3)
    for sampler in (("normal", "bernoulli") if p else (None,)):
        net, _ = sample_network(spec, params, 25, sampler, directed=directed, seed=4)
        assert validate(net) == []
        check_support(spec, net)
        assert net.p == p and net.directed == directed


def test_same_seed_same_network():
    spec = ModelSpec.from_name("GRMI")
    params = planted_params(spec, 3, 2.0, 0.0, p=2, beta=0.5)
    a, pa = sample_network(spec, params, 30, "normal", seed=9)
    b, pb = sample_network(spec, params, 30, "normal", seed=9)
    assert a == b
    np.testing.assert_array_equal(pa.labels, pb.labels)


def test_block_means_match_parameters():
    spec = ModelSpec("poisson")
    params = Parameters(np.array([0.5, 0.5]), np.array([[6.0, 1.0], [1.0, 3.0]]))
    net, part = sample_network(spec, params, 400, seed=5, directed=True)
    z = part.labels
    off = ~np.eye(400, dtype=bool)
    for q in range(2):
        for l in range(2):
            mask = off & (z[:, None] == q) & (z[None, :] == l)
            assert net.weights[mask].mean() == pytest.approx(params.connectivity[q, l], rel=0.03)


def test_sampler_arguments_checked():
    spec = ModelSpec("poisson", "homogeneous")
    params = planted_params(spec, 2, 4, 1, p=1)
    with pytest.raises(ValueError):
        sample_network(spec, params, 10)
    with pytest.raises(ValueError):
        sample_network(spec, params, 10, "uniform")
    with pytest.raises(ValueError):
        sample_network(ModelSpec("poisson"), planted_params(ModelSpec("poisson"), 2, 4, 1), 10, "normal")
