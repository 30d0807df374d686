"""Parameter maximization given soft memberships (the M-step).

Without covariates every law has a closed form. With covariates the
connectivity and covariate coefficients are fitted jointly by a
tau-weighted GLM over all dyads and block pairs: log-link Poisson
regression, least squares for the Gaussian law, and a box-constrained
Newton method for the Bernoulli product form ``pi_ql * logistic(beta'y)``.

All sums run over ordered pairs ``i != j``. For undirected networks with
symmetric parameters this is exactly twice the unordered objective, so the
maximizer is unchanged.
"""
from __future__ import annotations

import numpy as np
from scipy.special import expit

from .models import PROB_FLOOR, ModelSpec, Parameters, block_ids, logf

DEGENERATE_FRACTION = 1e-8
NEWTON_MAX_ITER = 50
NEWTON_TOL = 1e-6
_POISSON_LOG_FLOOR = -50.0


class GLMConvergenceError(RuntimeError):
    """Inner Newton iterations hit their cap; ``params`` holds the best iterate."""

    def __init__(self, message, params):
        super().__init__(message)
        self.params = params


def degenerate_groups(tau: np.ndarray) -> np.ndarray:
    n = tau.shape[0]
    return np.flatnonzero(tau.sum(axis=0) < DEGENERATE_FRACTION * n)


def _sym(a):
    return 0.5 * (a + a.T)


def m_step(spec: ModelSpec, network, tau, warm_start: Parameters | None = None) -> Parameters:
    """Maximize the variational objective over the parameters with ``tau`` fixed.

    Raises
    ------
    GLMConvergenceError
        If a covariate model's Newton iterations do not converge within
        ``NEWTON_MAX_ITER``; the error carries the best parameters found.
    """
    tau = np.asarray(tau, dtype=np.float64)
    n, Q = tau.shape
    alpha = tau.sum(axis=0) / n
    alpha = alpha / alpha.sum()
    if spec.has_covariates:
        params = _glm_m_step(spec, network, tau, alpha, warm_start)
    else:
        params = _closed_form(spec, network, tau, alpha)
    return _freeze_degenerate(params, tau, warm_start, network.directed)


def _closed_form(spec, network, tau, alpha):
    W = network.weights
    off = network.offdiag
    s1 = tau.T @ off @ tau
    sw = tau.T @ W @ tau
    # empty blocks fall back to the global mean (overwritten later if a warm start exists)
    overall = sw.sum() / s1.sum() if s1.sum() > 0 else 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        conn = np.where(s1 > 0, sw / np.where(s1 > 0, s1, 1.0), overall)
    if not network.directed:
        conn = _sym(conn)
    if spec.family == "bernoulli":
        conn = np.clip(conn, 0.0, 1.0)
    sigma2 = None
    if spec.family == "gaussian":
        Q = tau.shape[1]
        rss = 0.0
        for q in range(Q):
            for l in range(Q):
                r = (W - conn[q, l]) ** 2 * off
                rss += tau[:, q] @ r @ tau[:, l]
        sigma2 = max(rss / s1.sum(), PROB_FLOOR)
    return Parameters(alpha, conn, sigma2=sigma2)


def _freeze_degenerate(params, tau, warm, directed):
    dead = degenerate_groups(tau)
    if dead.size == 0 or warm is None or warm.Q != params.Q:
        return params
    conn = params.connectivity.copy()
    conn[dead, :] = warm.connectivity[dead, :]
    conn[:, dead] = warm.connectivity[:, dead]
    changes = {"connectivity": conn}
    if params.beta_blocks is not None and warm.beta_blocks is not None:
        bb = params.beta_blocks.copy()
        bb[dead, :] = warm.beta_blocks[dead, :]
        bb[:, dead] = warm.beta_blocks[:, dead]
        changes["beta_blocks"] = bb
    return params.with_(**changes)


class _BlockGLM:
    """tau-weighted GLM over (dyad, block pair) observations.

    Parameter vector: one connectivity value per free block, then one
    length-p coefficient vector per covariate group (a single group for
    homogeneous effects, one per free block for heterogeneous ones).
    """

    def __init__(self, spec, network, tau):
        self.spec = spec
        self.family = spec.family
        self.W = network.weights
        self.Y = network.covariates
        self.Yf = self.Y.reshape(-1, self.Y.shape[2])
        self.logfact = network.log_factorial
        self.off = network.offdiag
        self.tau = tau
        n, Q = tau.shape
        self.Q, self.p = Q, network.p
        self.bid = block_ids(Q, network.directed)
        self.B = int(self.bid.max()) + 1
        self.gid = self.bid if spec.covariate_mode == "heterogeneous" else np.zeros((Q, Q), dtype=int)
        self.G = int(self.gid.max()) + 1
        self.size = self.B + self.G * self.p
        self.omega = {}
        for q in range(Q):
            for l in range(Q):
                self.omega[q, l] = np.outer(tau[:, q], tau[:, l]) * self.off
        if self.family == "bernoulli":
            self.lower = np.r_[np.zeros(self.B), np.full(self.G * self.p, -np.inf)]
            self.upper = np.r_[np.ones(self.B), np.full(self.G * self.p, np.inf)]
        elif self.family == "poisson":
            self.lower = np.r_[np.full(self.B, _POISSON_LOG_FLOOR), np.full(self.G * self.p, -np.inf)]
            self.upper = np.full(self.size, np.inf)
        else:
            self.lower = np.full(self.size, -np.inf)
            self.upper = np.full(self.size, np.inf)

    def split(self, theta):
        c = theta[: self.B]
        betas = theta[self.B :].reshape(self.G, self.p)
        return c, betas

    def _etas(self, betas):
        return [self.Y @ b for b in betas]

    def _conn_value(self, c):
        return np.exp(c) if self.family == "poisson" else c

    def objective(self, theta, sigma2=1.0):
        c, betas = self.split(theta)
        etas = self._etas(betas)
        cv = self._conn_value(c)
        total = 0.0
        for (q, l), om in self.omega.items():
            lf = logf(
                self.family, True, self.W, cv[self.bid[q, l]], etas[self.gid[q, l]], sigma2, self.logfact
            )
            total += np.sum(om * lf)
        return total

    def _derivs(self, w, c, eta):
        """(l_c, l_eta, l_cc, l_ceta, l_etaeta) for one block."""
        if self.family == "poisson":
            m = np.exp(c + eta)
            d1 = w - m
            return d1, d1, -m, -m, -m
        if self.family == "gaussian":
            r = w - c - eta
            one = np.ones_like(r)
            return r, r, -one, -one, -one
        s = expit(eta)
        prob = c * s
        pc = np.maximum(prob, PROB_FLOOR)
        qc = np.maximum(1.0 - prob, PROB_FLOOR)
        v = 1.0 - w
        ds = s * (1.0 - s)
        l_c = w * s / pc - v * s / qc
        l_e = w * (1.0 - s) - v * c * ds / qc
        l_cc = -w * (s / pc) ** 2 - v * (s / qc) ** 2
        l_ce = -v * ds / qc**2
        l_ee = -w * ds - v * c * (ds * (1.0 - 2.0 * s) * qc + c * ds * ds) / qc**2
        return l_c, l_e, l_cc, l_ce, l_ee

    def grad_hess(self, theta):
        B, p = self.B, self.p
        c, betas = self.split(theta)
        etas = self._etas(betas)
        g = np.zeros(self.size)
        H = np.zeros((self.size, self.size))
        acc_e = [np.zeros(self.W.shape) for _ in range(self.G)]
        acc_ee = [np.zeros(self.W.shape) for _ in range(self.G)]
        for (q, l), om in self.omega.items():
            b, k = self.bid[q, l], self.gid[q, l]
            l_c, l_e, l_cc, l_ce, l_ee = self._derivs(self.W, c[b], etas[k])
            g[b] += np.sum(om * l_c)
            H[b, b] += np.sum(om * l_cc)
            if p:
                sl = slice(B + k * p, B + (k + 1) * p)
                cross = self.Yf.T @ (om * l_ce).ravel()
                H[b, sl] += cross
                H[sl, b] += cross
                acc_e[k] += om * l_e
                acc_ee[k] += om * l_ee
        for k in range(self.G if p else 0):
            sl = slice(B + k * p, B + (k + 1) * p)
            g[sl] += self.Yf.T @ acc_e[k].ravel()
            H[sl, sl] += self.Yf.T @ (self.Yf * acc_ee[k].ravel()[:, None])
        return g, H

    def initial(self):
        tau, W = self.tau, self.W
        s1 = tau.T @ self.off @ tau
        sw = tau.T @ W @ tau
        c = np.zeros(self.B)
        num = np.zeros(self.B)
        den = np.zeros(self.B)
        np.add.at(num, self.bid.ravel(), sw.ravel())
        np.add.at(den, self.bid.ravel(), s1.ravel())
        ratio = num / den
        if self.family == "poisson":
            c = np.log(np.maximum(ratio, np.exp(_POISSON_LOG_FLOOR)))
        elif self.family == "bernoulli":
            c = np.clip(2.0 * ratio, 1e-6, 1.0 - 1e-6)
        else:
            c = ratio
        return np.r_[c, np.zeros(self.G * self.p)]

    def from_params(self, params):
        theta = self.initial()
        conn = params.connectivity
        for q in range(self.Q):
            for l in range(self.Q):
                b = self.bid[q, l]
                v = conn[q, l]
                theta[b] = np.log(max(v, np.exp(_POISSON_LOG_FLOOR))) if self.family == "poisson" else v
        if self.p:
            if self.spec.covariate_mode == "homogeneous" and params.beta is not None:
                theta[self.B :] = params.beta
            elif params.beta_blocks is not None:
                for q in range(self.Q):
                    for l in range(self.Q):
                        k = self.gid[q, l]
                        theta[self.B + k * self.p : self.B + (k + 1) * self.p] = params.beta_blocks[q, l]
        return np.clip(theta, self.lower, self.upper)

    def to_params(self, theta, alpha, sigma2=None):
        c, betas = self.split(theta)
        cv = self._conn_value(c)
        conn = cv[self.bid]
        if self.spec.covariate_mode == "homogeneous":
            return Parameters(alpha, conn, sigma2=sigma2, beta=betas[0].copy())
        return Parameters(alpha, conn, sigma2=sigma2, beta_blocks=betas[self.gid].copy())

    def least_squares(self):
        g, H = self.grad_hess(np.zeros(self.size))
        theta = np.linalg.lstsq(-H, g, rcond=None)[0]
        c, betas = self.split(theta)
        etas = self._etas(betas)
        rss = 0.0
        for (q, l), om in self.omega.items():
            r = self.W - c[self.bid[q, l]] - etas[self.gid[q, l]]
            rss += np.sum(om * r * r)
        total = sum(np.sum(om) for om in self.omega.values())
        return theta, max(rss / total, PROB_FLOOR)

    def newton(self, theta):
        """Projected Newton ascent with step-halving from ``theta``.

        Returns ``(theta, converged)``; never returns an iterate with a lower
        objective than the starting point.
        """
        obj = self.objective(theta)
        for _ in range(NEWTON_MAX_ITER):
            g, H = self.grad_hess(theta)
            at_lower = (theta <= self.lower) & (g < 0)
            at_upper = (theta >= self.upper) & (g > 0)
            free = ~(at_lower | at_upper)
            step = np.zeros_like(theta)
            if free.any():
                A = -H[np.ix_(free, free)]
                gf = g[free]
                evals = np.linalg.eigvalsh(A)
                scale = max(1.0, np.abs(evals).max())
                if evals.min() <= 1e-10 * scale:
                    A = A + (1e-8 * scale - min(evals.min(), 0.0)) * np.eye(A.shape[0])
                step[free] = np.linalg.lstsq(A, gf, rcond=None)[0]
            t = 1.0
            accepted = False
            for _ in range(40):
                cand = np.clip(theta + t * step, self.lower, self.upper)
                cand_obj = self.objective(cand)
                if cand_obj >= obj:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                return theta, True
            change = np.max(np.abs(cand - theta)) if theta.size else 0.0
            theta, obj = cand, cand_obj
            if change <= NEWTON_TOL * (1.0 + np.max(np.abs(theta))):
                return theta, True
        return theta, False


def _glm_m_step(spec, network, tau, alpha, warm_start):
    if network.p < 1:
        raise ValueError(f"model {spec.name} requires covariates")
    glm = _BlockGLM(spec, network, tau)
    if spec.family == "gaussian":
        theta, sigma2 = glm.least_squares()
        return _symmetrize(glm.to_params(theta, alpha, sigma2), network.directed)
    if warm_start is not None and warm_start.Q == glm.Q:
        theta0 = glm.from_params(warm_start)
    else:
        theta0 = glm.initial()
    theta, converged = glm.newton(theta0)
    params = _symmetrize(glm.to_params(theta, alpha), network.directed)
    if not converged:
        raise GLMConvergenceError(
            f"{spec.name} M-step did not converge in {NEWTON_MAX_ITER} Newton iterations", params
        )
    return params


def _symmetrize(params, directed):
    if directed:
        return params
    changes = {"connectivity": _sym(params.connectivity)}
    if params.beta_blocks is not None:
        changes["beta_blocks"] = 0.5 * (params.beta_blocks + np.transpose(params.beta_blocks, (1, 0, 2)))
    return params.with_(**changes)
