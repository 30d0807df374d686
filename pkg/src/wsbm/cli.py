"""Command-line front end.

    wsbm --input FILE --model NAME (--Qmax K | --Qauto) [options]
    wsbm generate --model NAME --params FILE --n N [options]
    wsbm benchmark --model NAME --sizes N [N ...] [options]
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import formats
from .generate import COVARIATE_SAMPLERS, sample_network
from .models import MODEL_NAMES, ModelSpec, Parameters
from .selection import (
    REFERENCE_BASE_P,
    REFERENCE_EXPONENT_G,
    REFERENCE_EXPONENT_N,
    REFERENCE_RATIOS,
    SMOOTHING_MODES,
    benchmark,
    sweep,
)
from .vem import FitConfig

log = logging.getLogger("wsbm")

MODEL_HELP = (
    "bernoulli, BH, BI (Bernoulli without / with homogeneous / with heterogeneous covariate effects); "
    "poisson, PRMH, PRMI (Poisson); gaussian, GRMH, GRMI (Gaussian)"
)


def _fit_parser():
    ap = argparse.ArgumentParser(
        prog="wsbm",
        description="Cluster the nodes of a weighted network with a stochastic block model.",
        epilog="Subcommands: 'wsbm generate --help' samples a network, "
        "'wsbm benchmark --help' times fits on planted networks.",
    )
    ap.add_argument("--input", required=True, metavar="PATH", help="edge list in .spm format")
    ap.add_argument("--symmetric", action="store_true", help="the graph is undirected")
    ap.add_argument("--model", required=True, choices=list(MODEL_NAMES), metavar="MODEL", help=MODEL_HELP)
    q = ap.add_mutually_exclusive_group(required=True)
    q.add_argument("--Qmax", type=int, metavar="K", help="explore Q = 1..K groups")
    q.add_argument("--Qauto", action="store_true", help="choose the largest Q explored automatically")
    ap.add_argument("--smoothing", choices=SMOOTHING_MODES, default="none",
                    help="re-initialization mode (default: none)")
    ap.add_argument("--output", default="-", metavar="PATH", help="output file (default: stdout)")
    ap.add_argument("--output-format", choices=formats.OUTPUT_FORMATS, default="text",
                    help="text (default), R, or matlab/octave (synonyms)")
    ap.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    ap.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                    help="worker threads (default: number of CPUs)")
    ap.add_argument("--n-override", type=int, metavar="N",
                    help="number of nodes, when trailing nodes are isolated")
    ap.add_argument("--icl-csv", metavar="PATH", help="also write a Q,pseudo_likelihood,icl table")
    ap.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    return ap


def _generate_parser():
    ap = argparse.ArgumentParser(prog="wsbm generate", description="Sample a network as .spm.")
    ap.add_argument("--model", required=True, choices=list(MODEL_NAMES), metavar="MODEL", help=MODEL_HELP)
    ap.add_argument("--params", required=True, metavar="PATH",
                    help="JSON with alpha, connectivity and as needed sigma2, beta, beta_blocks")
    ap.add_argument("--n", type=int, required=True, help="number of nodes")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--symmetric", action="store_true", help="sample an undirected network")
    ap.add_argument("--covariates", choices=COVARIATE_SAMPLERS, default="normal",
                    help="covariate distribution for covariate models (default: normal)")
    ap.add_argument("--output", default="-", metavar="PATH")
    ap.add_argument("--labels", metavar="PATH", help="write the planted groups (1-based), one per line")
    return ap


def _benchmark_parser():
    ap = argparse.ArgumentParser(prog="wsbm benchmark", description="Time sweeps on planted networks.")
    ap.add_argument("--model", required=True, choices=list(MODEL_NAMES), metavar="MODEL", help=MODEL_HELP)
    ap.add_argument("--sizes", type=int, nargs="+", required=True, metavar="N")
    ap.add_argument("--groups", type=int, default=3, help="planted groups (default: 3)")
    ap.add_argument("--covariates", type=int, default=1, metavar="P",
                    help="covariate count for covariate models (default: 1)")
    ap.add_argument("--repeats", type=int, default=3, help="networks timed per size (default: 3)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--output", default="-", metavar="PATH", help="CSV of records (default: stdout)")
    return ap


class _Out:
    def __init__(self, path):
        self.path = path

    def __enter__(self):
        if self.path == "-":
            return sys.stdout
        self.fh = open(self.path, "w", encoding="utf-8", newline="\n")
        return self.fh

    def __exit__(self, *exc):
        if self.path != "-":
            self.fh.close()


def _run_fit(args):
    if args.Qmax is not None and args.Qmax < 1:
        raise argparse.ArgumentTypeError("--Qmax must be at least 1")
    spec = ModelSpec.from_name(args.model)
    network = formats.read_spm(args.input, symmetric=args.symmetric, n_override=args.n_override)
    log.info("read %r", network)
    config = FitConfig(seed=args.seed)
    threads = max(1, args.threads)
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        result = sweep(network, spec, q_max=args.Qmax, q_auto=args.Qauto, smoothing=args.smoothing,
                       config=config, executor=executor)
    finally:
        if executor is not None:
            executor.shutdown()
    log.info("selected Q=%d", result.selected_q)
    fmt_name = "octave" if args.output_format == "matlab" else args.output_format
    with _Out(args.output) as out:
        formats.write_output(result, fmt_name, out, network)
    if args.icl_csv:
        with _Out(args.icl_csv) as out:
            formats.write_icl_csv(result, out)
    return 0


def _load_params(path):
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    kw = {}
    for key in ("sigma2",):
        if key in raw:
            kw[key] = float(raw[key])
    for key in ("beta", "beta_blocks"):
        if key in raw:
            kw[key] = np.asarray(raw[key], dtype=float)
    return Parameters(np.asarray(raw["alpha"], dtype=float), np.asarray(raw["connectivity"], dtype=float), **kw)


def _run_generate(args):
    spec = ModelSpec.from_name(args.model)
    params = _load_params(args.params)
    sampler = args.covariates if spec.has_covariates else None
    network, part = sample_network(spec, params, args.n, sampler, directed=not args.symmetric, seed=args.seed)
    with _Out(args.output) as out:
        formats.write_spm(network, out)
    if args.labels:
        with _Out(args.labels) as out:
            out.writelines(f"{g + 1}\n" for g in part.labels)
    return 0


def _run_benchmark(args):
    spec = ModelSpec.from_name(args.model)
    records, exponent = benchmark(sorted(args.sizes), spec, groups=args.groups, seed=args.seed,
                                  p=args.covariates, repeats=args.repeats)
    with _Out(args.output) as out:
        out.write("t,n,g,p,model\n")
        for r in records:
            out.write(f"{r.t:.6f},{r.n},{r.g},{r.p},{r.model}\n")
    err = sys.stderr
    err.write(f"fitted exponent of n: {exponent:.3f}\n")
    err.write(f"reference law: t = C_model * n^{REFERENCE_EXPONENT_N} * g^{REFERENCE_EXPONENT_G} "
              f"* {REFERENCE_BASE_P}^p\n")
    ratios = ", ".join(f"{k} {v:g}" for k, v in REFERENCE_RATIOS.items())
    err.write(f"reference C_model / C_bernoulli: {ratios}\n")
    return 0


_SUBCOMMANDS = {
    "generate": (_generate_parser, _run_generate),
    "benchmark": (_benchmark_parser, _run_benchmark),
}


def run(argv=None) -> int:
    """Execute one command line; returns the process exit code (0, 1 or 2)."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] in _SUBCOMMANDS:
        make_parser, action = _SUBCOMMANDS[argv[0]]
        argv = argv[1:]
    else:
        make_parser, action = _fit_parser, _run_fit
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return action(args)
    except BrokenPipeError:
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 0
    except argparse.ArgumentTypeError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        print(f"wsbm: error: {exc}", file=sys.stderr)
        return 1


def main():
    code = run()
    try:
        sys.stdout.flush()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
    sys.exit(code)


if __name__ == "__main__":
    main()
