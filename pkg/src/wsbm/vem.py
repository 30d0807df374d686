"""Variational EM for one (model, Q) pair."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .criteria import icl, pseudo_likelihood
from .kernels import dyad_field, node_field
from .models import ModelSpec, Parameters, check_support
from .mstep import GLMConvergenceError, degenerate_groups, m_step
from .network import normalize_tau

log = logging.getLogger(__name__)

# A completed EM iteration may lower J by at most this much before the fit
# is stopped and the previous state kept.
DECREASE_SLACK = 1e-8


@dataclass(frozen=True)
class FitConfig:
    max_em_iterations: int = 200
    em_tolerance: float = 1e-6
    e_step_max_iterations: int = 50
    e_step_tolerance: float = 1e-5
    tau_floor: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.em_tolerance <= 0 or self.e_step_tolerance <= 0 or self.tau_floor <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_em_iterations < 1 or self.e_step_max_iterations < 1:
            raise ValueError("iteration caps must be at least 1")


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    Q: int
    params: Parameters
    tau: np.ndarray
    objective: float
    icl: float
    iterations: int
    converged: bool
    degenerate: bool
    init_source: str = "spectral"
    trace: tuple = field(default=(), repr=False)
    network_fingerprint: str = field(default="", repr=False)
    p: int = 0
    directed: bool = False

    @property
    def labels(self) -> np.ndarray:
        return np.argmax(self.tau, axis=1)


def _objective(tau, log_alpha, dyad):
    return float(np.sum(tau * log_alpha) - np.sum(tau * np.log(tau)) + dyad)


def _update_rows(log_alpha, field_, floor):
    logits = log_alpha + field_
    e = np.exp(logits - logits.max(axis=-1, keepdims=True))
    return normalize_tau(e / e.sum(axis=-1, keepdims=True), floor)


def _sequential_sweep(network, spec, params, tau, log_alpha, floor, backend):
    """Node-by-node coordinate ascent; each accepted row raises J."""
    tau = tau.copy()
    for i in range(tau.shape[0]):
        fi = node_field(i, network, spec, params, tau, backend)
        cur = tau[i]
        new = _update_rows(log_alpha, fi[None, :], floor)[0]
        base = log_alpha + fi
        if new @ base - new @ np.log(new) > cur @ base - cur @ np.log(cur):
            tau[i] = new
    return tau


def _e_step(network, spec, params, tau_init, config, backend=None):
    floor = config.tau_floor
    tau = normalize_tau(tau_init, floor)
    log_alpha = np.log(np.maximum(params.alpha, np.finfo(float).tiny))
    field_, dyad = dyad_field(network, spec, params, tau, backend)
    J = _objective(tau, log_alpha, dyad)
    if tau.shape[1] == 1:
        return tau, True, J
    for _ in range(config.e_step_max_iterations):
        new = _update_rows(log_alpha, field_, floor)
        new_field, new_dyad = dyad_field(network, spec, params, new, backend)
        new_J = _objective(new, log_alpha, new_dyad)
        if new_J < J:
            # synchronous sweeps can overshoot; fall back to guaranteed ascent
            new = _sequential_sweep(network, spec, params, tau, log_alpha, floor, backend)
            new_field, new_dyad = dyad_field(network, spec, params, new, backend)
            new_J = _objective(new, log_alpha, new_dyad)
        change = float(np.max(np.abs(new - tau)))
        tau, field_, J = new, new_field, new_J
        if change < config.e_step_tolerance:
            return tau, True, J
    return tau, False, J


def e_step(network, spec: ModelSpec, params: Parameters, tau_init, config: FitConfig | None = None,
           backend=None):
    """Mean-field fixed point for the memberships at fixed parameters.

    Synchronous sweeps ``log tau_iq <- log alpha_q + field_iq`` with row-wise
    log-sum-exp normalization and flooring. A sweep that would lower the
    objective is replaced by a node-by-node sweep.

    Returns
    -------
    tau : ndarray, shape (n, Q)
    converged : bool
        False if ``e_step_max_iterations`` was reached first.
    """
    tau, converged, _ = _e_step(network, spec, params, tau_init, config or FitConfig(), backend)
    return tau, converged


def _m_step(spec, network, tau, warm):
    """M-step that reports trouble instead of raising."""
    try:
        params = m_step(spec, network, tau, warm)
        failed = False
    except GLMConvergenceError as exc:
        log.warning("%s; continuing from best iterate", exc)
        params, failed = exc.params, True
    return params, failed or degenerate_groups(tau).size > 0


def fit(network, spec: ModelSpec, Q: int, tau_init, config: FitConfig | None = None,
        init_source: str = "spectral", backend=None) -> FitResult:
    """Run variational EM from ``tau_init`` until J stabilizes.

    Each iteration is an M-step followed by an E-step. The fit stops when the
    relative change of J drops below ``em_tolerance``, or, flagged as not
    converged, when an iteration lowers J or the cap is hit.
    """
    config = config or FitConfig()
    check_support(spec, network)
    if Q < 1:
        raise ValueError("Q must be at least 1")
    tau = normalize_tau(np.asarray(tau_init, dtype=np.float64), config.tau_floor)
    if tau.shape != (network.n, Q):
        raise ValueError(f"tau_init has shape {tau.shape}, expected {(network.n, Q)}")

    params, degenerate = _m_step(spec, network, tau, None)
    tau, _, J = _e_step(network, spec, params, tau, config, backend)
    trace = [J]
    iterations, converged = 1, False
    for it in range(2, config.max_em_iterations + 1):
        new_params, deg = _m_step(spec, network, tau, params)
        new_tau, _, new_J = _e_step(network, spec, new_params, tau, config, backend)
        trace.append(new_J)
        if new_J < J - DECREASE_SLACK:
            log.debug("Q=%d: J decreased by %.3g at iteration %d; stopping", Q, J - new_J, it)
            break
        degenerate |= deg
        params, tau, iterations = new_params, new_tau, it
        done = abs(new_J - J) <= config.em_tolerance * abs(J)
        J = new_J
        if done:
            converged = True
            break

    result = FitResult(
        spec=spec,
        Q=Q,
        params=params,
        tau=tau,
        objective=J,
        icl=float("nan"),
        iterations=iterations,
        converged=converged,
        degenerate=bool(degenerate),
        init_source=init_source,
        trace=tuple(trace),
        network_fingerprint=network.fingerprint,
        p=network.p if spec.has_covariates else 0,
        directed=network.directed,
    )
    return replace(result, icl=icl(result, network, backend))


__all__ = ["FitConfig", "FitResult", "e_step", "fit", "pseudo_likelihood"]
