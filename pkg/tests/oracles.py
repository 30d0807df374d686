"""Independent reference computations shared by unit and acceptance tests."""
import numpy as np
import statsmodels.api as sm
from scipy import optimize
from scipy.special import expit

from wsbm.models import block_ids


def pairs(net):
    for i in range(net.n):
        for j in range(net.n):
            if i != j and (net.directed or i < j):
                yield i, j


def block_counts(net, labels, Q):
    """Sum of weights and dyad counts per block by plain counting."""
    s = np.zeros((Q, Q))
    c = np.zeros((Q, Q))
    for i, j in pairs(net):
        a, b = labels[i], labels[j]
        s[a, b] += net.weights[i, j]
        c[a, b] += 1
        if not net.directed and a != b:
            s[b, a] += net.weights[i, j]
            c[b, a] += 1
    return s, c


def glm_rows(net, tau, mode):
    """Expand (dyad, block pair) observations with weights tau_iq tau_jl."""
    Q = tau.shape[1]
    bid = block_ids(Q, net.directed)
    B = bid.max() + 1
    X, yv, wts = [], [], []
    for i, j in pairs(net):
        for q in range(Q):
            for l in range(Q):
                ind = np.zeros(B)
                ind[bid[q, l]] = 1.0
                y = net.covariates[i, j]
                cov = y if mode == "homogeneous" else np.kron(ind, y)
                X.append(np.r_[ind, cov])
                yv.append(net.weights[i, j])
                wts.append(tau[i, q] * tau[j, l])
    return np.array(X), np.array(yv), np.array(wts), bid, B


def unpack(coef, bid, B, p, mode):
    Q = bid.shape[0]
    c = coef[:B][bid]
    if mode == "homogeneous":
        return c, np.broadcast_to(coef[B:], (Q, Q, p))
    return c, coef[B:].reshape(B, p)[bid]


def fitted_betas(params, Q, p):
    return params.beta_tensor(p) if params.beta is None else np.broadcast_to(params.beta, (Q, Q, p))


def assert_matches_glm_oracle(spec, net, tau, params, atol=1e-4):
    """Compare a covariate M-step with a tau-weighted GLM fitted from scratch.

    Poisson and Gaussian use statsmodels (log-link GLM, weighted least
    squares). The Bernoulli law ``pi * logistic(beta'y)`` has no standard
    link, so its weighted log-likelihood is maximized with BFGS.
    """
    mode = spec.covariate_mode
    Q = tau.shape[1]
    X, y, w, bid, B = glm_rows(net, tau, mode)
    if spec.family == "poisson":
        res = sm.GLM(y, X, family=sm.families.Poisson(), var_weights=w).fit(tol=1e-13, maxiter=200)
        log_c, betas = unpack(res.params, bid, B, net.p, mode)
        conn = np.exp(log_c)
    elif spec.family == "gaussian":
        res = sm.WLS(y, X, weights=w).fit()
        conn, betas = unpack(res.params, bid, B, net.p, mode)
        sigma2 = np.sum(w * (y - X @ res.params) ** 2) / np.sum(w)
        np.testing.assert_allclose(params.sigma2, sigma2, atol=atol, rtol=0)
    else:
        def negll(theta):
            eta = X[:, B:] @ theta[B:]
            prob = np.clip(expit(X[:, :B] @ theta[:B]) * expit(eta), 1e-15, 1 - 1e-15)
            return -np.sum(w * (y * np.log(prob) + (1 - y) * np.log1p(-prob)))

        res = optimize.minimize(negll, np.zeros(X.shape[1]), method="BFGS",
                                options={"gtol": 1e-10, "maxiter": 10_000})
        logit_pi, betas = unpack(res.x, bid, B, net.p, mode)
        conn = expit(logit_pi)
    np.testing.assert_allclose(params.connectivity, conn, atol=atol, rtol=0)
    np.testing.assert_allclose(fitted_betas(params, Q, net.p), betas, atol=atol, rtol=0)
