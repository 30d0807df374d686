"""Starting memberships: absolute-value spectral clustering plus the
split/merge derivations used when re-initializing fits."""
from __future__ import annotations

import logging
import warnings

import numpy as np
from scipy.cluster.vq import kmeans2

from .models import ModelSpec
from .mstep import m_step
from .network import HardPartition, Network, harden, residual_network, soften

log = logging.getLogger(__name__)

DEGREE_FLOOR = 1e-10
KMEANS_RESTARTS = 10
# kmeans2 has no convergence test and always runs this many Lloyd steps
KMEANS_ITER = 20


class UnsplittableGroup(ValueError):
    pass


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Relabel groups in order of first appearance."""
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty(order.size, dtype=int)
    remap[order] = np.arange(order.size)
    return remap[np.unique(labels, return_inverse=True)[1]]


def spectral_embedding(network: Network, Q: int) -> np.ndarray:
    """Row-normalized top-|eigenvalue| eigenvectors of ``D^-1/2 A D^-1/2``.

    ``A`` is the weight matrix, symmetrized as ``(A + A')/2`` when directed;
    degrees use absolute weights so signed (Gaussian) networks stay finite.
    The symmetric normalized adjacency is the swap point if another operator
    is wanted.
    """
    A = network.weights
    if network.directed:
        A = 0.5 * (A + A.T)
    deg = np.maximum(np.abs(A).sum(axis=1), DEGREE_FLOOR)
    d = 1.0 / np.sqrt(deg)
    L = A * d[:, None] * d[None, :]
    vals, vecs = np.linalg.eigh(L)
    # |eigenvalue| descending, then eigenvalue descending, then index
    order = np.lexsort((np.arange(vals.size), -vals, -np.abs(vals)))[:Q]
    X = vecs[:, order]
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    return np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)


def _kmeans(X: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    best, best_cost = None, np.inf
    for _ in range(KMEANS_RESTARTS):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            centers, labels = kmeans2(X, k, minit="++", seed=rng, iter=KMEANS_ITER, check_finite=False)
        cost = float(np.sum((X - centers[labels]) ** 2))
        if cost < best_cost - 1e-12:
            best, best_cost = labels, cost
    return best


def absolute_spectral_clustering(network: Network, Q: int, seed: int = 0) -> HardPartition:
    """Cluster nodes with k-means on the absolute-value spectral embedding.

    An all-zero network has no spectral signal; the nodes are then dealt
    round-robin into the Q groups and a warning is logged.
    """
    n = network.n
    if Q > n:
        raise ValueError(f"cannot form {Q} groups from {n} nodes")
    if Q == 1:
        return HardPartition(np.zeros(n, dtype=int), 1)
    if not np.any(network.weights):
        log.warning("all-zero network; returning a uniform partition")
        return HardPartition(np.arange(n) % Q, Q)
    X = spectral_embedding(network, Q)
    labels = _canonical(_kmeans(X, Q, seed))
    return HardPartition(labels, Q)


def _one_group_beta(network, spec):
    tau = np.ones((network.n, 1))
    params = m_step(spec, network, tau)
    if params.beta is not None:
        return params.beta
    return params.beta_blocks[0, 0]


def covariate_free_view(network: Network, spec: ModelSpec, beta=None) -> Network:
    """The network spectral clustering should see: raw, or residual after
    regressing out the covariates with a one-group fit."""
    if not spec.has_covariates:
        return network
    if beta is None:
        beta = _one_group_beta(network, spec)
    return residual_network(network, beta, spec.family)


def initial_tau(network: Network, spec: ModelSpec, Q: int, seed: int = 0) -> np.ndarray:
    view = covariate_free_view(network, spec)
    return soften(absolute_spectral_clustering(view, Q, seed))


def _fit_beta(fit, group):
    if fit.params.beta is not None:
        return fit.params.beta
    if fit.params.beta_blocks is not None:
        return fit.params.beta_blocks[group, group]
    return None


def split_init(previous, target_group: int, network: Network, seed: int = 0) -> np.ndarray:
    """Soft assignment at Q = previous.Q + 1 splitting one group in two.

    Members of ``target_group`` are re-clustered into two halves by spectral
    clustering of their (residual) subnetwork; the second half becomes the new
    last group. All other nodes keep their hardened group.
    """
    labels = harden(previous.tau).labels.copy()
    members = np.flatnonzero(labels == target_group)
    if members.size < 2:
        raise UnsplittableGroup(f"group {target_group} has {members.size} member(s)")
    spec = previous.spec
    view = network
    if spec.has_covariates:
        view = covariate_free_view(network, spec, _fit_beta(previous, target_group))
    sub = view.subnetwork(members)
    halves = absolute_spectral_clustering(sub, 2, seed).labels
    if np.unique(halves).size < 2:
        halves = (np.arange(members.size) >= members.size // 2).astype(int)
    Q = previous.Q + 1
    labels[members[halves == 1]] = Q - 1
    return soften(HardPartition(labels, Q))


def merge_init(previous, group_a: int, group_b: int) -> np.ndarray:
    """Soft assignment at Q = previous.Q - 1 with two groups' columns summed."""
    Q = previous.Q
    if group_a == group_b or not (0 <= group_a < Q and 0 <= group_b < Q):
        raise ValueError("merge needs two distinct valid groups")
    return merge_columns(previous.tau, group_a, group_b)


def merge_columns(tau: np.ndarray, a: int, b: int) -> np.ndarray:
    lo, hi = min(a, b), max(a, b)
    out = np.delete(tau, hi, axis=1)
    out[:, lo] = tau[:, lo] + tau[:, hi]
    return out
