"""Pure numpy implementation of the dyad kernels.

Same contract as the compiled ``_kernels`` module; selected by
:mod:`wsbm.kernels` when the extension is unavailable.
"""
import numpy as np

from .models import logf

_FAMILY = ("bernoulli", "poisson", "gaussian")


def _block_logf(W, Y, logfact, conn, beta, sigma2, family, has_cov, q, l):
    eta = Y @ beta[q, l] if Y.shape[2] else np.zeros(W.shape)
    return logf(_FAMILY[family], has_cov, W, conn[q, l], eta, sigma2, logfact)


def dyad_field(W, Y, logfact, tau, conn, beta, sigma2, family, has_cov, directed):
    """Mean-field input for every node plus the expected dyad log-likelihood.

    Returns ``(field, total)`` where ``field[i, q]`` is the derivative of the
    expected dyad log-likelihood with respect to ``tau[i, q]`` and ``total`` is
    that expected log-likelihood, summed over ordered pairs ``i != j`` when
    directed and pairs ``i < j`` otherwise.
    """
    n, Q = tau.shape
    if directed:
        mask = ~np.eye(n, dtype=bool)
    else:
        mask = np.triu(np.ones((n, n), dtype=bool), k=1)
    field = np.zeros((n, Q))
    total = 0.0
    for q in range(Q):
        for l in range(Q):
            lf = np.where(mask, _block_logf(W, Y, logfact, conn, beta, sigma2, family, has_cov, q, l), 0.0)
            field[:, q] += lf @ tau[:, l]
            field[:, l] += lf.T @ tau[:, q]
            total += tau[:, q] @ lf @ tau[:, l]
    return field, float(total)


def node_field(i, W, Y, logfact, tau, conn, beta, sigma2, family, has_cov, directed):
    """Row ``i`` of :func:`dyad_field`'s field, computed from scratch."""
    n, Q = tau.shape
    keep = np.ones(n, dtype=bool)
    keep[i] = False
    fam = _FAMILY[family]
    p = Y.shape[2]
    out = np.zeros(Q)
    for q in range(Q):
        for l in range(Q):
            eta = Y[i, keep] @ beta[q, l] if p else 0.0
            row = logf(fam, has_cov, W[i, keep], conn[q, l], eta, sigma2, logfact[i, keep])
            out[q] += row @ tau[keep, l]
            if directed:
                eta = Y[keep, i] @ beta[l, q] if p else 0.0
                col = logf(fam, has_cov, W[keep, i], conn[l, q], eta, sigma2, logfact[keep, i])
                out[q] += col @ tau[keep, l]
    return out
