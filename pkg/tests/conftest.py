import numpy as np
import pytest

from wsbm.generate import planted_params, sample_network
from wsbm.models import MODEL_NAMES, ModelSpec

ALL_MODELS = list(MODEL_NAMES)

# within/between connectivity that separates groups well for each family
PLANT = {"bernoulli": (0.6, 0.1), "poisson": (6.0, 1.0), "gaussian": (2.0, 0.0)}


def planted(name, Q=2, n=40, seed=0, directed=False, p=1, beta=0.5):
    """Small planted network for ``name`` plus its spec, params and partition."""
    spec = ModelSpec.from_name(name)
    within, between = PLANT[spec.family]
    p = p if spec.has_covariates else 0
    params = planted_params(spec, Q, within, between, p=p, beta=beta)
    net, part = sample_network(spec, params, n, "normal" if p else None, directed=directed, seed=seed)
    return spec, params, net, part


def random_tau(rng, n, Q):
    tau = rng.random((n, Q)) + 0.05
    return tau / tau.sum(axis=1, keepdims=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: one line per criterion in the terminal summary
_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        prev = _CRITERIA.get(number)
        # a criterion split over several tests passes only if all parts pass
        if prev is None or prev[0] == "PASS" or status == "FAIL":
            _CRITERIA[number] = (status, text)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    def order(key):
        key = str(key)
        digits = "".join(ch for ch in key if ch.isdigit())
        return int(digits), key

    for number in sorted(_CRITERIA, key=order):
        status, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {str(number):<3}: {status}  {text}")
