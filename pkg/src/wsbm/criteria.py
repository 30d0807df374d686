"""Objective and model-choice criteria shared by the fitter and the sweep."""
from __future__ import annotations

import numpy as np

from .kernels import dyad_field
from .models import parameter_count
from .network import harden


def _xlogy(x, y):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, y, 1.0)), 0.0)


def pseudo_likelihood(network, spec, params, tau, backend=None) -> float:
    """Variational lower bound J at ``(params, tau)``.

    ``J = sum tau log alpha - sum tau log tau + sum_dyads sum_ql tau_iq tau_jl log f_ql``.
    ``tau`` is used as given (no flooring), so one-hot input yields the
    complete-data log-likelihood.
    """
    tau = np.asarray(tau, dtype=np.float64)
    _, dyad = dyad_field(network, spec, params, tau, backend)
    mix = float(np.sum(_xlogy(tau, np.broadcast_to(params.alpha, tau.shape))))
    ent = float(np.sum(_xlogy(tau, tau)))
    return mix - ent + dyad


def complete_log_likelihood(network, spec, params, labels, backend=None) -> float:
    Q = params.Q
    z = np.zeros((network.n, Q))
    z[np.arange(network.n), labels] = 1.0
    return pseudo_likelihood(network, spec, params, z, backend)


def icl_penalty(spec, Q: int, network) -> float:
    k = parameter_count(spec, Q, network.p, network.directed)
    M = network.n_dyads
    pen = 0.5 * (Q - 1) * np.log(network.n)
    if M > 0:
        pen += 0.5 * k * np.log(M)
    return float(pen)


def icl(fit, network, backend=None) -> float:
    """Integrated completed likelihood of a fit.

    Complete-data log-likelihood at the MAP memberships, minus
    ``(k/2) log M + ((Q-1)/2) log n`` with ``k`` the edge-law parameter
    count and ``M`` the number of modeled dyads.
    """
    labels = harden(fit.tau).labels
    ll = complete_log_likelihood(network, fit.spec, fit.params, labels, backend)
    return ll - icl_penalty(fit.spec, fit.Q, network)
