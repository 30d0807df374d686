"""Reading and writing ``.spm`` edge lists and fit reports (text, R, Octave).

An ``.spm`` line is ``i j w [y1 ... yp]`` with 1-based node indices ``i``,
``j``, weight ``w`` and optional covariates. Without covariates absent dyads
may be omitted; with covariates every dyad must be listed. Blank lines and
lines starting with ``#`` are ignored.
"""
from __future__ import annotations

import math

import numpy as np

from .network import Network

OUTPUT_FORMATS = ("text", "R", "matlab", "octave")


class SpmParseError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def fmt(x) -> str:
    """17 significant digits: reading the text back gives the same double."""
    x = float(x)
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Inf" if x > 0 else "-Inf"
    return format(x, ".17g")


def parse_spm(stream, symmetric: bool = False, n_override: int | None = None) -> Network:
    """Parse an ``.spm`` edge list into a :class:`Network`.

    ``n`` is the largest node index seen unless ``n_override`` (which may
    only enlarge it) is given. With ``symmetric`` each unordered dyad may be
    listed in either orientation, or both if the two lines agree.
    """
    entries: dict[tuple[int, int], tuple[tuple[float, ...], int]] = {}
    p = None
    top = 0
    for lineno, raw in enumerate(stream, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        if len(toks) < 3:
            raise SpmParseError(f"expected at least 3 columns, found {len(toks)}", lineno)
        try:
            i, j = int(toks[0]), int(toks[1])
        except ValueError:
            raise SpmParseError(f"node indices must be integers, got {toks[0]!r} {toks[1]!r}", lineno) from None
        try:
            vals = tuple(float(t) for t in toks[2:])
        except ValueError as exc:
            raise SpmParseError(f"non-numeric value ({exc})", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise SpmParseError("weights and covariates must be finite", lineno)
        if i < 1 or j < 1:
            raise SpmParseError(f"node indices start at 1, got {i} {j}", lineno)
        arity = len(vals) - 1
        if p is None:
            p = arity
        elif arity != p:
            raise SpmParseError(f"expected {p} covariate(s), found {arity}", lineno)
        top = max(top, i, j)
        if i == j:
            if any(vals):
                raise SpmParseError(f"self-loop ({i},{i}) with nonzero values", lineno)
            continue
        key = (i - 1, j - 1)
        if symmetric and key[0] > key[1]:
            key = (key[1], key[0])
        if key in entries:
            prev, prev_line = entries[key]
            if prev != vals:
                raise SpmParseError(
                    f"dyad ({i},{j}) contradicts line {prev_line}", lineno
                )
            continue
        entries[key] = (vals, lineno)
    if top == 0:
        raise SpmParseError("no edges found")
    n = top
    if n_override is not None:
        if n_override < top:
            raise SpmParseError(f"n override {n_override} is below the largest node index {top}")
        n = n_override
    p = p or 0
    w = np.zeros((n, n))
    y = np.zeros((n, n, p)) if p else None
    for (a, b), (vals, _) in entries.items():
        w[a, b] = vals[0]
        if p:
            y[a, b] = vals[1:]
        if symmetric:
            w[b, a] = vals[0]
            if p:
                y[b, a] = vals[1:]
    if p:
        expected = n * (n - 1) // 2 if symmetric else n * (n - 1)
        if len(entries) < expected:
            for a in range(n):
                for b in range(a + 1 if symmetric else 0, n):
                    if a != b and (a, b) not in entries:
                        raise SpmParseError(
                            f"covariates are used but dyad ({a + 1},{b + 1}) is missing"
                        )
    return Network(w, y, directed=not symmetric)


def read_spm(path, symmetric=False, n_override=None) -> Network:
    with open(path, encoding="utf-8") as fh:
        return parse_spm(fh, symmetric, n_override)


def write_spm(network: Network, stream) -> None:
    """Write ``network`` so that :func:`parse_spm` reproduces it exactly.

    Without covariates only nonzero dyads are written, plus a zero-weight
    ``1 n 0`` line when node ``n`` would otherwise be invisible.
    """
    n, p = network.n, network.p
    w, y = network.weights, network.covariates
    last = 0
    for i in range(n):
        for j in range(i + 1 if not network.directed else 0, n):
            if i == j or (not p and w[i, j] == 0):
                continue
            cols = [str(i + 1), str(j + 1), fmt(w[i, j])]
            cols.extend(fmt(v) for v in y[i, j])
            stream.write(" ".join(cols) + "\n")
            last = max(last, i + 1, j + 1)
    if last < n:
        # zero-weight marker so the parser sees node n; "1 1 0" is an ignored self-loop
        stream.write(f"1 {n} 0" + " 0" * p + "\n")


def _theta(fit):
    """Named edge-law parameters of a fit, in output order."""
    pr = fit.params
    out = [(fit.spec.connectivity_name, pr.connectivity)]
    if pr.sigma2 is not None:
        out.append(("sigma2", pr.sigma2))
    if pr.beta is not None:
        out.append(("beta", pr.beta))
    if pr.beta_blocks is not None:
        out.append(("beta", pr.beta_blocks))
    return out


def _fields(fit):
    return (
        [("alpha", fit.params.alpha)]
        + _theta(fit)
        + [("tau", fit.tau), ("pseudo_likelihood", fit.objective), ("icl", fit.icl)]
    )


def _text(sweep, network_info, stream):
    w = stream.write
    w(f"model: {sweep.spec.name}\n")
    for k, v in network_info.items():
        w(f"{k}: {v}\n")
    w(f"selected Q: {sweep.selected_q}\n")
    for q in sorted(sweep.per_q):
        f = sweep.per_q[q]
        w(f"\n== Q = {q} ==\n")
        for name, val in _fields(f):
            label = {"pseudo_likelihood": "pseudo-likelihood", "icl": "ICL"}.get(name, name)
            a = np.asarray(val)
            if a.ndim == 0:
                w(f"{label}: {fmt(a)}\n")
            elif name in ("alpha", "beta") and a.ndim == 1:
                w(f"{label}:\n(" + " ".join(fmt(v) for v in a) + ")\n")
            elif a.ndim == 2:
                w(f"{label}:\n")
                for row in a:
                    w(" ".join(fmt(v) for v in row) + "\n")
            else:
                for k in range(a.shape[2]):
                    w(f"{label} (covariate {k + 1}):\n")
                    for row in a[:, :, k]:
                        w(" ".join(fmt(v) for v in row) + "\n")


def _r_value(a):
    a = np.asarray(a)
    if a.ndim == 0:
        return fmt(a)
    if a.ndim == 1:
        return "c(" + ", ".join(fmt(v) for v in a) + ")"
    if a.ndim == 2:
        body = ", ".join(fmt(v) for v in a.ravel())
        return f"matrix(c({body}), nrow = {a.shape[0]}, ncol = {a.shape[1]}, byrow = TRUE)"
    body = ", ".join(fmt(v) for v in a.ravel(order="F"))
    return f"array(c({body}), dim = c({', '.join(str(d) for d in a.shape)}))"


def _r(sweep, network_info, stream):
    w = stream.write
    w("wsbm <- list()\n")
    w(f'wsbm$model <- "{sweep.spec.name}"\n')
    w(f"wsbm$directed <- {'TRUE' if network_info['directed'] else 'FALSE'}\n")
    w(f"wsbm$nodes <- {network_info['nodes']}L\n")
    w(f"wsbm$selected_q <- {sweep.selected_q}L\n")
    w("wsbm$fits <- list()\n")
    for k, q in enumerate(sorted(sweep.per_q), 1):
        f = sweep.per_q[q]
        base = f"wsbm$fits[[{k}]]"
        w(f"{base} <- list()\n")
        w(f"{base}$Q <- {q}L\n")
        for name, val in _fields(f):
            w(f"{base}${name} <- {_r_value(val)}\n")


def _m_matrix(a):
    a = np.atleast_2d(np.asarray(a))
    return "[" + "; ".join(" ".join(fmt(v) for v in row) for row in a) + "]"


def _octave(sweep, network_info, stream):
    w = stream.write
    w(f"wsbm.model = '{sweep.spec.name}';\n")
    w(f"wsbm.directed = {1 if network_info['directed'] else 0};\n")
    w(f"wsbm.nodes = {network_info['nodes']};\n")
    w(f"wsbm.selected_q = {sweep.selected_q};\n")
    for k, q in enumerate(sorted(sweep.per_q), 1):
        f = sweep.per_q[q]
        base = f"wsbm.fits({k})"
        w(f"{base}.Q = {q};\n")
        for name, val in _fields(f):
            a = np.asarray(val)
            if a.ndim == 0:
                w(f"{base}.{name} = {fmt(a)};\n")
            elif a.ndim == 1:
                # row vector
                w(f"{base}.{name} = [" + " ".join(fmt(v) for v in a) + "];\n")
            elif a.ndim == 2:
                w(f"{base}.{name} = {_m_matrix(a)};\n")
            else:
                for c in range(a.shape[2]):
                    w(f"{base}.{name}(:,:,{c + 1}) = {_m_matrix(a[:, :, c])};\n")


def write_output(sweep, fmt_name: str, stream, network=None) -> None:
    """Write every explored Q's parameters, tau, pseudo-likelihood and ICL."""
    if fmt_name not in OUTPUT_FORMATS:
        raise ValueError(f"unknown output format {fmt_name!r}; expected one of {OUTPUT_FORMATS}")
    any_fit = next(iter(sweep.per_q.values()))
    info = {
        "directed": bool(network.directed if network is not None else any_fit.directed),
        "nodes": int(any_fit.tau.shape[0]),
    }
    if fmt_name == "text":
        _text(sweep, {"directed": str(info["directed"]).lower(), "nodes": info["nodes"]}, stream)
    elif fmt_name == "R":
        _r(sweep, info, stream)
    else:
        _octave(sweep, info, stream)


def write_icl_csv(sweep, stream) -> None:
    stream.write("Q,pseudo_likelihood,icl\n")
    for q in sorted(sweep.per_q):
        f = sweep.per_q[q]
        stream.write(f"{q},{fmt(f.objective)},{fmt(f.icl)}\n")
