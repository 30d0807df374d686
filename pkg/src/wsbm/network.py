"""Network data model, hard/soft memberships and derived views."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.special import expit, gammaln

TAU_FLOOR = 1e-10


class Network:
    """Weighted network with optional per-dyad covariates.

    Weights are held as a dense ``n x n`` matrix with a zero diagonal; absent
    dyads have weight 0. Covariates, when present, are an ``n x n x p`` array.
    Undirected networks store both orientations of every dyad, and the two
    must agree (see :func:`validate`).

    Instances are treated as immutable: the arrays are flagged read-only.
    """

    def __init__(self, weights, covariates=None, directed: bool = False):
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be a square matrix, got shape {w.shape}")
        n = w.shape[0]
        if n < 1:
            raise ValueError("network needs at least one node")
        if covariates is None:
            y = np.zeros((n, n, 0))
        else:
            y = np.array(covariates, dtype=np.float64)
            if y.ndim == 2:
                y = y[:, :, None]
            if y.shape[:2] != (n, n):
                raise ValueError(f"covariates must have shape (n, n, p), got {y.shape}")
        w.flags.writeable = False
        y.flags.writeable = False
        self.weights = w
        self.covariates = y
        self.directed = bool(directed)

    @classmethod
    def from_dyads(
        cls,
        n: int,
        dyads: Mapping[tuple[int, int], float | Sequence[float]],
        directed: bool = False,
        p: int = 0,
    ) -> "Network":
        """Build a network from 1-based ``(i, j) -> weight`` entries.

        Values may be a bare weight or a sequence ``(weight, y1, ..., yk)``.
        For undirected networks each entry is mirrored unless the mirror is
        given explicitly. Missing covariate values become NaN so that
        :func:`validate` can report them.
        """
        w = np.zeros((n, n))
        y = np.full((n, n, p), np.nan) if p else None
        given = set()
        for (i, j), value in dyads.items():
            vals = np.atleast_1d(np.asarray(value, dtype=np.float64))
            i0, j0 = i - 1, j - 1
            given.add((i0, j0))
            w[i0, j0] = vals[0]
            cov = vals[1:]
            if y is not None:
                k = min(len(cov), p)
                y[i0, j0, :k] = cov[:k]
            if not directed and (j0, i0) not in given:
                w[j0, i0] = vals[0]
                if y is not None:
                    y[j0, i0, :] = y[i0, j0, :]
        return cls(w, y, directed)

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[2]

    @property
    def n_dyads(self) -> int:
        """Number of modeled dyads: ordered pairs if directed, else unordered."""
        n = self.n
        return n * (n - 1) if self.directed else n * (n - 1) // 2

    @cached_property
    def dyad_mask(self) -> np.ndarray:
        """Boolean mask selecting each modeled dyad exactly once."""
        if self.directed:
            m = ~np.eye(self.n, dtype=bool)
        else:
            m = np.triu(np.ones((self.n, self.n), dtype=bool), k=1)
        m.flags.writeable = False
        return m

    @cached_property
    def offdiag(self) -> np.ndarray:
        m = 1.0 - np.eye(self.n)
        m.flags.writeable = False
        return m

    @cached_property
    def log_factorial(self) -> np.ndarray:
        """``log(w!)`` per dyad, the Poisson normalizer (0 on the diagonal)."""
        out = gammaln(np.abs(self.weights) + 1.0) * self.offdiag
        out.flags.writeable = False
        return out

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.sha1()
        h.update(np.array([self.n, int(self.directed)]).tobytes())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        return h.hexdigest()

    def subnetwork(self, nodes) -> "Network":
        idx = np.asarray(nodes, dtype=int)
        return Network(
            self.weights[np.ix_(idx, idx)],
            self.covariates[np.ix_(idx, idx)] if self.p else None,
            self.directed,
        )

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        return (
            self.directed == other.directed
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.covariates, other.covariates)
        )

    __hash__ = None

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Network(n={self.n}, p={self.p}, {kind})"


@dataclass(frozen=True)
class HardPartition:
    labels: np.ndarray
    Q: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=int)
        if labels.size and (labels.min() < 0 or labels.max() >= self.Q):
            raise ValueError(f"labels must lie in 0..{self.Q - 1}")
        object.__setattr__(self, "labels", labels)

    @property
    def degenerate(self) -> bool:
        """True when some group index in 0..Q-1 has no member."""
        return np.unique(self.labels).size < self.Q

    def one_hot(self) -> np.ndarray:
        z = np.zeros((self.labels.size, self.Q))
        z[np.arange(self.labels.size), self.labels] = 1.0
        return z


def validate(network: Network) -> list[str]:
    """Return the list of invariant violations of ``network`` (empty if valid).

    Dyads are reported with 1-based node indices.
    """
    problems = []
    w, y = network.weights, network.covariates
    n = network.n
    diag = np.flatnonzero(np.diag(w) != 0)
    for i in diag:
        problems.append(f"self-loop at dyad ({i + 1},{i + 1})")
    bad = np.argwhere(~np.isfinite(w))
    for i, j in bad:
        problems.append(f"non-finite weight at dyad ({i + 1},{j + 1})")
    if network.p:
        off = ~np.eye(n, dtype=bool)
        missing = np.isnan(y).any(axis=2) & off
        for i, j in np.argwhere(missing):
            have = int(np.sum(~np.isnan(y[i, j])))
            problems.append(
                f"covariate arity at dyad ({i + 1},{j + 1}): {have} values, expected {network.p}"
            )
    if not network.directed:
        with np.errstate(invalid="ignore"):
            asym = np.triu(w != w.T, k=1)
            if network.p:
                yt = np.transpose(y, (1, 0, 2))
                differs = (y != yt) & ~(np.isnan(y) & np.isnan(yt))
                asym |= np.triu(differs.any(axis=2), k=1)
        for i, j in np.argwhere(asym):
            problems.append(f"asymmetric dyad ({i + 1},{j + 1}) in undirected network")
    return problems


def harden(tau: np.ndarray) -> HardPartition:
    """MAP labels of a soft assignment; ties go to the lowest group index."""
    tau = np.asarray(tau)
    return HardPartition(np.argmax(tau, axis=1), tau.shape[1])


def normalize_tau(tau: np.ndarray, floor: float = TAU_FLOOR) -> np.ndarray:
    """Clamp entries below ``floor`` and renormalize rows onto the simplex."""
    tau = np.maximum(np.asarray(tau, dtype=np.float64), floor)
    return tau / tau.sum(axis=1, keepdims=True)


def soften(partition: HardPartition) -> np.ndarray:
    """Soft assignment with mass ``1 - (Q-1) eps`` on the assigned group.

    ``eps = 0.1 / Q``; hard zeros would be absorbing under the fixed point.
    """
    Q = partition.Q
    if Q == 1:
        return np.ones((partition.labels.size, 1))
    eps = 0.1 / Q
    tau = np.full((partition.labels.size, Q), eps)
    tau[np.arange(partition.labels.size), partition.labels] = 1.0 - (Q - 1) * eps
    return tau


def covariate_effect(network: Network, beta) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (network.p,):
        raise ValueError(f"beta has length {beta.size}, network has p={network.p} covariates")
    return network.covariates @ beta


def residual_network(network: Network, beta, family: str) -> Network:
    """Covariate-free network with the fitted covariate effect removed.

    Poisson weights are divided by ``exp(beta'y)``, Gaussian weights have
    ``beta'y`` subtracted and Bernoulli weights are divided by
    ``logistic(beta'y)`` (left unclamped: the result only feeds spectral
    clustering).
    """
    if network.p < 1:
        raise ValueError("residual network needs covariates")
    eta = covariate_effect(network, beta)
    w = network.weights
    if family == "poisson":
        r = w / np.exp(eta)
    elif family == "gaussian":
        r = w - eta
    elif family == "bernoulli":
        r = w / expit(eta)
    else:
        raise ValueError(f"unknown family {family!r}")
    r = r * network.offdiag
    if not network.directed:
        # exact symmetry even if eta carries rounding differences
        upper = np.triu(r, 1)
        r = upper + upper.T
    return Network(r, None, network.directed)
