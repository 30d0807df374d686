"""Weighted stochastic block models fitted by variational EM.

Networks may be directed or not, carry real, count or binary weights and
per-dyad covariates. The number of groups is chosen by ICL.
"""
from .criteria import icl, pseudo_likelihood
from .formats import parse_spm, read_spm, write_icl_csv, write_output, write_spm
from .generate import planted_params, sample_network
from .initialization import (
    absolute_spectral_clustering,
    initial_tau,
    merge_init,
    split_init,
)
from .kernels import BACKEND
from .models import ModelSpec, Parameters, log_density, parameter_count, sample_edge
from .mstep import m_step
from .network import HardPartition, Network, harden, residual_network, validate
from .selection import (
    BenchmarkRecord,
    SweepResult,
    benchmark,
    likelihood_ratio_test,
    smooth,
    sweep,
)
from .vem import FitConfig, FitResult, e_step, fit

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BenchmarkRecord", "FitConfig", "FitResult", "HardPartition", "ModelSpec", "Network",
    "Parameters", "SweepResult", "absolute_spectral_clustering", "benchmark", "e_step", "fit",
    "harden", "icl", "initial_tau", "likelihood_ratio_test", "log_density", "m_step", "merge_init",
    "parameter_count", "parse_spm", "planted_params", "pseudo_likelihood", "read_spm",
    "residual_network", "sample_edge", "sample_network", "smooth", "split_init", "sweep",
    "validate", "write_icl_csv", "write_output", "write_spm",
]
