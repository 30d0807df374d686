"""The nine conditional edge laws: Bernoulli, Poisson and Gaussian, each
without covariates or with homogeneous / heterogeneous covariate effects."""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.special import expit, gammaln

FAMILIES = ("bernoulli", "poisson", "gaussian")
COVARIATE_MODES = ("none", "homogeneous", "heterogeneous")
PROB_FLOOR = 1e-12

# CLI name -> (family, covariate mode)
MODEL_NAMES = {
    "bernoulli": ("bernoulli", "none"),
    "BH": ("bernoulli", "homogeneous"),
    "BI": ("bernoulli", "heterogeneous"),
    "poisson": ("poisson", "none"),
    "PRMH": ("poisson", "homogeneous"),
    "PRMI": ("poisson", "heterogeneous"),
    "gaussian": ("gaussian", "none"),
    "GRMH": ("gaussian", "homogeneous"),
    "GRMI": ("gaussian", "heterogeneous"),
}
_NAME_OF = {v: k for k, v in MODEL_NAMES.items()}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    covariate_mode: str = "none"

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.covariate_mode not in COVARIATE_MODES:
            raise ValueError(f"unknown covariate mode {self.covariate_mode!r}")

    @classmethod
    def from_name(cls, name: str) -> "ModelSpec":
        try:
            return cls(*MODEL_NAMES[name])
        except KeyError:
            raise ValueError(
                f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}"
            ) from None

    @property
    def name(self) -> str:
        return _NAME_OF[(self.family, self.covariate_mode)]

    @property
    def has_covariates(self) -> bool:
        return self.covariate_mode != "none"

    @property
    def connectivity_name(self) -> str:
        return {"bernoulli": "pi", "poisson": "lambda", "gaussian": "mu"}[self.family]

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Parameters:
    """Mixing proportions plus the law-specific edge parameters.

    ``beta`` is set for homogeneous covariate effects, ``beta_blocks``
    (shape ``Q x Q x p``) for heterogeneous ones, ``sigma2`` for Gaussian laws.
    """

    alpha: np.ndarray
    connectivity: np.ndarray
    sigma2: Optional[float] = None
    beta: Optional[np.ndarray] = None
    beta_blocks: Optional[np.ndarray] = None

    @property
    def Q(self) -> int:
        return self.alpha.size

    def beta_tensor(self, p: int) -> np.ndarray:
        """Covariate coefficients broadcast to shape ``(Q, Q, p)``."""
        Q = self.Q
        if self.beta_blocks is not None:
            return np.ascontiguousarray(self.beta_blocks, dtype=np.float64)
        if self.beta is not None:
            return np.ascontiguousarray(np.broadcast_to(self.beta, (Q, Q, p)), dtype=np.float64)
        return np.zeros((Q, Q, p))

    def with_(self, **changes) -> "Parameters":
        return replace(self, **changes)


def check_parameters(spec: ModelSpec, params: Parameters, p: int = 0) -> None:
    a = params.alpha
    if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-10:
        raise ValueError("alpha must lie on the simplex")
    c = params.connectivity
    if c.shape != (a.size, a.size):
        raise ValueError("connectivity must be Q x Q")
    if spec.family == "bernoulli" and (np.any(c < 0) or np.any(c > 1)):
        raise ValueError("Bernoulli connectivity must lie in [0, 1]")
    if spec.family == "poisson" and np.any(c < 0):
        raise ValueError("Poisson connectivity must be nonnegative")
    if spec.family == "gaussian" and not (params.sigma2 and params.sigma2 > 0):
        raise ValueError("Gaussian laws need sigma2 > 0")
    if spec.covariate_mode == "homogeneous" and (params.beta is None or params.beta.shape != (p,)):
        raise ValueError(f"homogeneous model needs beta of length {p}")
    if spec.covariate_mode == "heterogeneous" and (
        params.beta_blocks is None or params.beta_blocks.shape != (a.size, a.size, p)
    ):
        raise ValueError(f"heterogeneous model needs beta_blocks of shape (Q, Q, {p})")


def check_support(spec: ModelSpec, network) -> None:
    """Raise ``ValueError`` if the network's weights or covariates do not fit the law."""
    w = network.weights
    off = ~np.eye(network.n, dtype=bool)
    vals = w[off]
    if spec.family == "bernoulli" and not np.all((vals == 0) | (vals == 1)):
        raise ValueError("Bernoulli models need binary weights (0 or 1)")
    if spec.family == "poisson" and not np.all((vals >= 0) & (vals == np.floor(vals))):
        raise ValueError("Poisson models need nonnegative integer weights")
    if not np.all(np.isfinite(vals)):
        raise ValueError("weights must be finite")
    if spec.has_covariates and network.p < 1:
        raise ValueError(f"model {spec.name} requires covariates but the network has none")


def logf(family: str, has_cov: bool, w, c, eta, sigma2=1.0, log_fact=0.0):
    """Vectorized log-density of weight ``w`` given block parameter ``c`` and
    covariate effect ``eta``. Shared by the numpy kernels and the M-step."""
    if family == "bernoulli":
        prob = c * expit(eta) if has_cov else c * np.ones_like(np.asarray(eta, dtype=float))
        return w * np.log(np.maximum(prob, PROB_FLOOR)) + (1.0 - w) * np.log(
            np.maximum(1.0 - prob, PROB_FLOOR)
        )
    if family == "poisson":
        rate = c * np.exp(eta)
        return w * np.log(np.maximum(rate, PROB_FLOOR)) - rate - log_fact
    if family == "gaussian":
        r = w - c - eta
        return -0.5 * np.log(2.0 * np.pi * sigma2) - r * r / (2.0 * sigma2)
    raise ValueError(f"unknown family {family!r}")


def _effect(spec: ModelSpec, q: int, l: int, y, params: Parameters) -> float:
    if not spec.has_covariates:
        if y is not None and np.size(y):
            raise ValueError(f"model {spec.name} takes no covariates")
        return 0.0
    if y is None:
        raise ValueError(f"model {spec.name} needs a covariate vector")
    y = np.asarray(y, dtype=np.float64)
    b = params.beta if spec.covariate_mode == "homogeneous" else params.beta_blocks[q, l]
    if b.shape != y.shape:
        raise ValueError(f"covariate vector of length {y.size}, expected {b.size}")
    return float(b @ y)


def log_density(spec: ModelSpec, w: float, q: int, l: int, y, params: Parameters) -> float:
    """``log f_ql(w | y)`` for a single dyad."""
    if spec.family == "bernoulli" and w not in (0, 1):
        raise ValueError(f"weight {w} outside Bernoulli support")
    if spec.family == "poisson" and (w < 0 or w != np.floor(w)):
        raise ValueError(f"weight {w} outside Poisson support")
    eta = _effect(spec, q, l, y, params)
    return float(
        logf(
            spec.family,
            spec.has_covariates,
            float(w),
            params.connectivity[q, l],
            eta,
            params.sigma2 or 1.0,
            gammaln(abs(w) + 1.0),
        )
    )


def edge_mean(spec: ModelSpec, c, eta, sigma2=None):
    if spec.family == "bernoulli":
        return c * expit(eta) if spec.has_covariates else c + 0.0 * eta
    if spec.family == "poisson":
        return c * np.exp(eta)
    return c + eta


def sample_edge(spec: ModelSpec, q: int, l: int, y, params: Parameters, rng) -> float:
    """Draw one weight from the (q, l) law; deterministic given ``rng``'s state."""
    eta = _effect(spec, q, l, y, params)
    m = edge_mean(spec, params.connectivity[q, l], eta)
    if spec.family == "bernoulli":
        return float(rng.random() < m)
    if spec.family == "poisson":
        return float(rng.poisson(m))
    return float(rng.normal(m, np.sqrt(params.sigma2)))


def parameter_count(spec: ModelSpec, Q: int, p: int, directed: bool) -> int:
    """Free edge-law parameters (the mixing proportions are counted separately)."""
    blocks = Q * Q if directed else Q * (Q + 1) // 2
    count = blocks
    if spec.covariate_mode == "heterogeneous":
        count += blocks * p
    elif spec.covariate_mode == "homogeneous":
        count += p
    if spec.family == "gaussian":
        count += 1
    return count


def block_ids(Q: int, directed: bool) -> np.ndarray:
    """Map ``(q, l)`` to a free-block index; undirected models tie (q,l) and (l,q)."""
    ids = np.empty((Q, Q), dtype=int)
    k = 0
    for q in range(Q):
        for l in range(Q):
            if directed or l >= q:
                ids[q, l] = k
                k += 1
            else:
                ids[q, l] = ids[l, q]
    return ids
