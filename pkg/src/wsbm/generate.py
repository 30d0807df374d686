"""Sample synthetic networks from any of the nine edge laws."""
from __future__ import annotations

import numpy as np

from .models import ModelSpec, Parameters, check_parameters, edge_mean
from .network import HardPartition, Network

COVARIATE_SAMPLERS = ("normal", "bernoulli")


def _covariates(rng, sampler, n, p, directed):
    if sampler == "normal":
        y = rng.standard_normal((n, n, p))
    elif sampler == "bernoulli":
        y = (rng.random((n, n, p)) < 0.5).astype(float)
    else:
        raise ValueError(f"unknown covariate sampler {sampler!r}; use one of {COVARIATE_SAMPLERS}")
    if not directed:
        iu = np.triu_indices(n, 1)
        y[iu[1], iu[0]] = y[iu]
    y[np.arange(n), np.arange(n)] = 0.0
    return y


def sample_network(
    spec: ModelSpec,
    params: Parameters,
    n: int,
    covariate_sampler: str | None = None,
    directed: bool = False,
    seed: int = 0,
    p: int | None = None,
) -> tuple[Network, HardPartition]:
    """Draw a network and its ground-truth partition.

    Memberships are i.i.d. multinomial(alpha); each dyad then gets a
    covariate vector (if the model uses covariates) and a weight from its
    block's law. Undirected dyads share one covariate draw and one weight.
    Deterministic given ``seed``.
    """
    if spec.has_covariates:
        if covariate_sampler is None:
            raise ValueError(f"model {spec.name} needs a covariate sampler")
        if p is None:
            p = params.beta.size if params.beta is not None else params.beta_blocks.shape[2]
    else:
        if covariate_sampler is not None:
            raise ValueError(f"model {spec.name} takes no covariates")
        p = 0
    check_parameters(spec, params, p)
    rng = np.random.default_rng(seed)
    Q = params.Q
    labels = rng.choice(Q, size=n, p=params.alpha)
    y = _covariates(rng, covariate_sampler, n, p, directed) if p else np.zeros((n, n, 0))

    c = params.connectivity[labels[:, None], labels[None, :]]
    if spec.has_covariates:
        b = params.beta_tensor(p)[labels[:, None], labels[None, :]]
        eta = np.einsum("ijk,ijk->ij", y, b)
    else:
        eta = np.zeros((n, n))
    mean = edge_mean(spec, c, eta)
    if spec.family == "bernoulli":
        w = (rng.random((n, n)) < mean).astype(float)
    elif spec.family == "poisson":
        w = rng.poisson(mean).astype(float)
    else:
        w = mean + np.sqrt(params.sigma2) * rng.standard_normal((n, n))
    w[np.arange(n), np.arange(n)] = 0.0
    if not directed:
        upper = np.triu(w, 1)
        w = upper + upper.T
    net = Network(w, y if p else None, directed)
    return net, HardPartition(labels, Q)


def planted_params(spec: ModelSpec, Q: int, within: float, between: float, p: int = 0,
                   beta: float = 0.0, sigma2: float = 1.0) -> Parameters:
    """Uniform-alpha parameters with constant within/between connectivity."""
    conn = np.full((Q, Q), between)
    np.fill_diagonal(conn, within)
    alpha = np.full(Q, 1.0 / Q)
    kw = {}
    if spec.family == "gaussian":
        kw["sigma2"] = sigma2
    if spec.covariate_mode == "homogeneous":
        kw["beta"] = np.full(p, beta)
    elif spec.covariate_mode == "heterogeneous":
        kw["beta_blocks"] = np.full((Q, Q, p), beta)
    return Parameters(alpha, conn, **kw)
