# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled dyad kernels. Mirrors ``_kernels_py`` exactly in contract."""
import numpy as np

from libc.math cimport exp, log, M_PI

cdef double FLOOR = 1e-12


cdef inline double _logistic(double x) noexcept nogil:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline double _logf(int family, int has_cov, double w, double c, double eta,
                         double sigma2, double lfact, double logc) noexcept nogil:
    cdef double prob, rate, r
    if family == 0:
        prob = c * _logistic(eta) if has_cov else c
        return (w * log(prob if prob > FLOOR else FLOOR)
                + (1.0 - w) * log((1.0 - prob) if (1.0 - prob) > FLOOR else FLOOR))
    elif family == 1:
        rate = c * exp(eta)
        if rate > FLOOR and c > FLOOR:
            # log(c e^eta) without a second transcendental call
            return w * (logc + eta) - rate - lfact
        return w * log(rate if rate > FLOOR else FLOOR) - rate - lfact
    else:
        r = w - c - eta
        return -0.5 * log(2.0 * M_PI * sigma2) - r * r / (2.0 * sigma2)


def _plain_coefficients(const double[:, ::1] conn, double sigma2, int family):
    """Per-block constants so covariate-free log-densities need no log/exp per dyad.

    Bernoulli: log p and log(1-p); Poisson: log lambda and 0; Gaussian: the
    normalizing constant and 1/(2 sigma2).
    """
    c = np.asarray(conn)
    if family == 0:
        return np.log(np.maximum(c, FLOOR)), np.log(np.maximum(1.0 - c, FLOOR))
    if family == 1:
        return np.log(np.maximum(c, FLOOR)), np.zeros_like(c)
    return (np.full_like(c, -0.5 * np.log(2.0 * np.pi * sigma2)),
            np.full_like(c, 1.0 / (2.0 * sigma2)))


cdef inline void _fill_plain(int family, double w, double lfact, const double[:, ::1] conn,
                             double[:, ::1] c1, double[:, ::1] c2, double[:, ::1] lf,
                             Py_ssize_t Q) noexcept nogil:
    cdef Py_ssize_t q, l
    cdef double r, c
    for q in range(Q):
        for l in range(Q):
            c = conn[q, l]
            if family == 0:
                lf[q, l] = w * c1[q, l] + (1.0 - w) * c2[q, l]
            elif family == 1:
                # matches _logf: log of the floored rate
                lf[q, l] = w * c1[q, l] - c - lfact
            else:
                r = w - c
                lf[q, l] = c1[q, l] - r * r * c2[q, l]


def dyad_field(const double[:, ::1] W, const double[:, :, ::1] Y, const double[:, ::1] logfact,
               const double[:, ::1] tau, const double[:, ::1] conn, const double[:, :, ::1] beta,
               double sigma2, int family, bint has_cov, bint directed):
    cdef Py_ssize_t n = tau.shape[0], Q = tau.shape[1], p = Y.shape[2]
    cdef Py_ssize_t i, j, j0, q, l, k
    cdef double w, eta, total = 0.0, acc
    field_arr = np.zeros((n, Q))
    lf_arr = np.empty((Q, Q))
    cdef double[:, ::1] field = field_arr
    cdef double[:, ::1] lf = lf_arr
    c1_arr, c2_arr = _plain_coefficients(conn, sigma2, family)
    cdef double[:, ::1] c1 = c1_arr
    cdef double[:, ::1] c2 = c2_arr
    with nogil:
        for i in range(n):
            j0 = 0 if directed else i + 1
            for j in range(j0, n):
                if j == i:
                    continue
                w = W[i, j]
                if has_cov:
                    for q in range(Q):
                        for l in range(Q):
                            eta = 0.0
                            for k in range(p):
                                eta = eta + Y[i, j, k] * beta[q, l, k]
                            lf[q, l] = _logf(family, has_cov, w, conn[q, l], eta, sigma2, logfact[i, j],
                                             c1[q, l])
                else:
                    _fill_plain(family, w, logfact[i, j], conn, c1, c2, lf, Q)
                for q in range(Q):
                    acc = 0.0
                    for l in range(Q):
                        acc = acc + tau[j, l] * lf[q, l]
                    field[i, q] += acc
                    total += tau[i, q] * acc
                for l in range(Q):
                    acc = 0.0
                    for q in range(Q):
                        acc = acc + tau[i, q] * lf[q, l]
                    field[j, l] += acc
    return field_arr, total


def node_field(Py_ssize_t i, const double[:, ::1] W, const double[:, :, ::1] Y,
               const double[:, ::1] logfact, const double[:, ::1] tau, const double[:, ::1] conn,
               const double[:, :, ::1] beta, double sigma2, int family, bint has_cov, bint directed):
    cdef Py_ssize_t n = tau.shape[0], Q = tau.shape[1], p = Y.shape[2]
    cdef Py_ssize_t j, q, l, k
    cdef double eta
    out_arr = np.zeros(Q)
    lf_arr = np.empty((Q, Q))
    lt_arr = np.empty((Q, Q))
    cdef double[::1] out = out_arr
    cdef double[:, ::1] lf = lf_arr
    cdef double[:, ::1] lt = lt_arr
    c1_arr, c2_arr = _plain_coefficients(conn, sigma2, family)
    cdef double[:, ::1] c1 = c1_arr
    cdef double[:, ::1] c2 = c2_arr
    with nogil:
        for j in range(n):
            if j == i:
                continue
            # lf[q, l]: log f_ql(w_ij); lt[l, q]: log f_lq(w_ji), directed only
            if has_cov:
                for q in range(Q):
                    for l in range(Q):
                        eta = 0.0
                        for k in range(p):
                            eta = eta + Y[i, j, k] * beta[q, l, k]
                        lf[q, l] = _logf(family, has_cov, W[i, j], conn[q, l], eta, sigma2, logfact[i, j],
                                         c1[q, l])
                        if directed:
                            eta = 0.0
                            for k in range(p):
                                eta = eta + Y[j, i, k] * beta[l, q, k]
                            lt[l, q] = _logf(family, has_cov, W[j, i], conn[l, q], eta, sigma2,
                                             logfact[j, i], c1[l, q])
            else:
                _fill_plain(family, W[i, j], logfact[i, j], conn, c1, c2, lf, Q)
                if directed:
                    _fill_plain(family, W[j, i], logfact[j, i], conn, c1, c2, lt, Q)
            for q in range(Q):
                for l in range(Q):
                    out[q] += tau[j, l] * lf[q, l]
                    if directed:
                        out[q] += tau[j, l] * lt[l, q]
    return out_arr
