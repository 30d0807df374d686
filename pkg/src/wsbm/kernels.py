"""Backend selection for the dyad kernels.

The compiled extension is used when importable; setting ``WSBM_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

try:
    if os.environ.get("WSBM_PURE_PYTHON"):
        raise ImportError("pure python requested")
    from . import _kernels as _compiled
except ImportError:
    _compiled = None

BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    BACKENDS["cython"] = _compiled
BACKEND = "cython" if _compiled is not None else "python"

_FAMILY_CODE = {"bernoulli": 0, "poisson": 1, "gaussian": 2}


def get_backend(name=None):
    if name is None:
        name = BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def _args(network, spec, params, tau):
    return (
        network.weights,
        network.covariates,
        network.log_factorial,
        np.ascontiguousarray(tau, dtype=np.float64),
        np.ascontiguousarray(params.connectivity, dtype=np.float64),
        params.beta_tensor(network.p),
        float(params.sigma2 or 1.0),
        _FAMILY_CODE[spec.family],
        spec.has_covariates,
        network.directed,
    )


def dyad_field(network, spec, params, tau, backend=None):
    """``(field, expected dyad log-likelihood)`` for the given soft assignment."""
    return get_backend(backend).dyad_field(*_args(network, spec, params, tau))


def node_field(i, network, spec, params, tau, backend=None):
    return get_backend(backend).node_field(i, *_args(network, spec, params, tau))
