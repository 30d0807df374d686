import numpy as np
import pytest

from wsbm import kernels
from wsbm.models import log_density

from conftest import ALL_MODELS, planted, random_tau

BACKENDS = sorted(kernels.BACKENDS)


def brute_field(net, spec, params, tau):
    """Direct double loop over dyads using the scalar log-density."""
    n, Q = tau.shape
    field = np.zeros((n, Q))
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j or (not net.directed and j < i):
                continue
            y = net.covariates[i, j] if spec.has_covariates else None
            for q in range(Q):
                for l in range(Q):
                    lf = log_density(spec, net.weights[i, j], q, l, y, params)
                    field[i, q] += tau[j, l] * lf
                    field[j, l] += tau[i, q] * lf
                    total += tau[i, q] * tau[j, l] * lf
    return field, total


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("directed", [False, True])
@pytest.mark.parametrize("name", ALL_MODELS)
def test_dyad_field_matches_brute_force(name, directed, backend):
    spec, params, net, _ = planted(name, Q=3, n=9, seed=5, directed=directed, p=2)
    tau = random_tau(np.random.default_rng(2), net.n, 3)
    field, total = kernels.dyad_field(net, spec, params, tau, backend)
    ref_field, ref_total = brute_field(net, spec, params, tau)
    np.testing.assert_allclose(field, ref_field, rtol=1e-11, atol=1e-11)
    assert total == pytest.approx(ref_total, rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("directed", [False, True])
@pytest.mark.parametrize("name", ["bernoulli", "PRMI", "GRMH"])
def test_node_field_is_a_row_of_dyad_field(name, directed, backend):
    spec, params, net, _ = planted(name, Q=2, n=12, seed=1, directed=directed)
    tau = random_tau(np.random.default_rng(4), net.n, 2)
    field, _ = kernels.dyad_field(net, spec, params, tau, backend)
    for i in range(net.n):
        np.testing.assert_allclose(kernels.node_field(i, net, spec, params, tau, backend), field[i],
                                   rtol=1e-11, atol=1e-10)


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="compiled extension not built")
@pytest.mark.parametrize("name", ALL_MODELS)
def test_backends_agree(name):
    spec, params, net, _ = planted(name, Q=3, n=50, seed=9, directed=True, p=2)
    tau = random_tau(np.random.default_rng(0), net.n, 3)
    fc, tc = kernels.dyad_field(net, spec, params, tau, "cython")
    fp, tp = kernels.dyad_field(net, spec, params, tau, "python")
    np.testing.assert_allclose(fc, fp, rtol=1e-10, atol=1e-9)
    assert tc == pytest.approx(tp, rel=1e-11)


def test_unknown_backend():
    with pytest.raises(ValueError, match="unavailable"):
        kernels.get_backend("fortran")
