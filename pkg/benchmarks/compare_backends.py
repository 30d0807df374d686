"""Time the compiled and numpy dyad kernels against each other.

Reports per-call kernel time and whole-fit time for a few models and sizes,
and checks that both backends give the same field to rounding.

    python benchmarks/compare_backends.py [--sizes 100 200 400] [--repeats 5]
"""
import argparse
import time

import numpy as np

from wsbm import kernels
from wsbm.generate import planted_params, sample_network
from wsbm.initialization import initial_tau
from wsbm.models import ModelSpec
from wsbm.vem import FitConfig, fit

PLANT = {"bernoulli": (0.5, 0.1), "poisson": (8.0, 1.0), "gaussian": (2.0, 0.0)}


def best_of(repeats, call):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        call()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 200, 400])
    ap.add_argument("--models", nargs="+", default=["bernoulli", "poisson", "PRMH", "GRMI"])
    ap.add_argument("--groups", type=int, default=3)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    if "cython" not in kernels.BACKENDS:
        raise SystemExit("compiled kernels are not built; reinstall with a C compiler and Cython")

    print(f"{'model':<10}{'n':>6}{'kernel py (ms)':>16}{'kernel cy (ms)':>16}{'speedup':>9}"
          f"{'fit py (s)':>12}{'fit cy (s)':>12}{'max |diff|':>12}")
    for name in args.models:
        spec = ModelSpec.from_name(name)
        p = 1 if spec.has_covariates else 0
        params = planted_params(spec, args.groups, *PLANT[spec.family], p=p, beta=0.5)
        for n in args.sizes:
            net, _ = sample_network(spec, params, n, "normal" if p else None, seed=n)
            tau = np.random.default_rng(n).dirichlet(np.ones(args.groups), size=n)
            field_py, _ = kernels.dyad_field(net, spec, params, tau, "python")
            field_cy, _ = kernels.dyad_field(net, spec, params, tau, "cython")
            diff = float(np.max(np.abs(field_py - field_cy)))
            k_py = best_of(args.repeats, lambda: kernels.dyad_field(net, spec, params, tau, "python"))
            k_cy = best_of(args.repeats, lambda: kernels.dyad_field(net, spec, params, tau, "cython"))
            tau0 = initial_tau(net, spec, args.groups, seed=0)
            config = FitConfig(seed=0)
            f_py = best_of(1, lambda: fit(net, spec, args.groups, tau0, config, backend="python"))
            f_cy = best_of(1, lambda: fit(net, spec, args.groups, tau0, config, backend="cython"))
            print(f"{name:<10}{n:>6}{1e3 * k_py:>16.2f}{1e3 * k_cy:>16.2f}{k_py / k_cy:>9.1f}"
                  f"{f_py:>12.3f}{f_cy:>12.3f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
