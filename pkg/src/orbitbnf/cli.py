"""Command-line front end: normal forms, symbol calculus, traces, oracle runs.

Conventions shared by every subcommand
--------------------------------------
* Transverse actions are ``p_i = (x_i^2 + xi_i^2) / 2``, the time variable
  has period ``2*pi``, and ``hbar`` carries weight 2 in all truncations.
* A problem config is a JSON object (see the README for the full schema).
  The ``hamiltonian`` block lists perturbation terms only: each subcommand
  assembles ``E + theta . p + tau`` -- or its operator analogue
  ``E + theta . (a+ a + hbar/2) + D_t`` -- from ``E`` and ``theta`` and adds
  the listed terms on top.
* Outputs are deterministic: identical configs produce byte-identical
  tables.  Timings and environment data go to the run manifest only, so the
  manifest never breaks table reproducibility.

Exit codes
----------
0   success
1   verification failure (``verify`` found a failing check)
2   invalid config, inputs, or truncation orders
3   resonance obstruction (small divisor below threshold)
4   ill-conditioned or inconsistent trace inversion
5   oracle window unsafe or quadrature coverage failure
"""

import argparse
import hashlib
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .bridge import weyl_of_functional_calculus
from .classical import birkhoff_classical, birkhoff_semiclassical, h0_series
from .errors import (
    CoverageError,
    IllConditionedError,
    InconsistentDataError,
    OrbitBNFError,
    ResonanceError,
    UnsafeWindowError,
)
from .normalform import NormalForm
from .oracle import BasisWindow, quasi_eigenvalues
from .quantum import birkhoff_quantum, h0_word
from .series import FTSeries, nonresonance_margin
from .traces import (
    GaussianBump,
    TraceExpansion,
    forward_trace_expansion,
    invert_trace_expansion,
)
from .words import WordPoly

DEFAULT_TOLERANCES = {
    "margin_threshold": 1e-9,
    "term_threshold": 1e-9,
    "cond_threshold": 1e10,
    "residual_tol": 1e-6,
    "drift_tol": 1e-10,
}


class _Run:
    """Collects output files and timings for one subcommand invocation."""

    def __init__(self, outdir):
        self.outdir = outdir
        self.outputs = {}
        self.timings = {}

    def write(self, name, text):
        os.makedirs(self.outdir, exist_ok=True)
        path = os.path.join(self.outdir, name)
        with open(path, "w", newline="") as fh:
            fh.write(text)
        self.outputs[name] = hashlib.sha256(text.encode()).hexdigest()
        return path

    def write_manifest(self, payload):
        os.makedirs(self.outdir, exist_ok=True)
        path = os.path.join(self.outdir, "manifest.json")
        with open(path, "w", newline="") as fh:
            fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        return path


def _load_config(path):
    if path is None:
        raise ValueError("this subcommand requires --config PATH")
    try:
        with open(path) as fh:
            text = fh.read()
        return json.loads(text), text
    except OSError as exc:
        raise ValueError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc


def _load_tolerances(path):
    tol = dict(DEFAULT_TOLERANCES)
    if path is None:
        return tol
    with open(path) as fh:
        overrides = json.load(fh)
    for key, value in overrides.items():
        if key not in tol:
            raise ValueError(
                f"unknown tolerance {key!r}; known: {sorted(tol)}"
            )
        tol[key] = float(value)
    return tol


def _theta(cfg):
    theta = cfg.get("theta")
    if not theta:
        raise ValueError("config needs a non-empty 'theta' list")
    return tuple(float(v) for v in theta)


def _rot(cfg, need, tol):
    theta = _theta(cfg)
    order = max(int(need), int(cfg.get("resonance_order", need)))
    return nonresonance_margin(theta, order, threshold=tol["margin_threshold"])


def _check_terms(records, dim, what):
    for rec in records:
        if len(rec.get("mu", ())) != dim or len(rec.get("nu", ())) != dim:
            raise ValueError(
                f"{what} term {rec} has mu/nu of wrong length (dim = {dim})"
            )
        if "re" not in rec:
            raise ValueError(f"{what} term {rec} is missing the coefficient 're'")


def _series_hamiltonian(cfg, rot, cap):
    terms = cfg.get("hamiltonian", {}).get("series_terms", [])
    _check_terms(terms, rot.dim, "series")
    H = h0_series(rot, float(cfg.get("E", 0.0)), cap)
    return H + FTSeries.from_records(rot.dim, terms, cap)


def _word_hamiltonian(cfg, rot, cap):
    terms = cfg.get("hamiltonian", {}).get("word_terms", [])
    _check_terms(terms, rot.dim, "word")
    H = h0_word(rot, float(cfg.get("E", 0.0)), cap)
    return H + WordPoly.from_records(rot.dim, terms, cap)


def _normal_form_arg(cfg, base_dir):
    block = cfg.get("normal_form")
    if block is None:
        raise ValueError("config needs a 'normal_form' block")
    if "csv" in block:
        path = os.path.join(base_dir, block["csv"])
        with open(path) as fh:
            return NormalForm.from_csv(fh.read())
    return NormalForm.from_records(
        int(block["dim"]), block["records"], route=block.get("route")
    )


def _jets(cfg):
    """Build {l: jet} plus the bump table from the config's jets block."""
    block = cfg.get("jets")
    if block is None:
        raise ValueError("config needs a 'jets' block (ls, width[s], depth)")
    ls = [int(l) for l in block.get("ls", [])]
    if not ls:
        raise ValueError("jets block needs a non-empty 'ls' list")
    depth = int(block.get("depth", 12))
    if "widths" in block:
        widths = [float(w) for w in block["widths"]]
        if len(widths) != len(ls):
            raise ValueError("jets 'widths' must match 'ls' in length")
    else:
        widths = [float(block.get("width", 0.7))] * len(ls)
    bumps = {l: GaussianBump(l, width=w) for l, w in zip(ls, widths)}
    return {l: bumps[l].jet(depth) for l in ls}, bumps


def _orders(cfg):
    return cfg.get("orders", {})


# -- subcommand bodies ----------------------------------------------------------


def _cmd_bnf_classical(cfg, tol, run, base_dir):
    orders = _orders(cfg)
    weight = int(orders.get("weight", 6))
    work = int(orders.get("work_weight", weight))
    rot = _rot(cfg, weight, tol)
    H = _series_hamiltonian(cfg, rot, work)
    nf, log, remainder = birkhoff_classical(
        H, rot, weight, work, tol["margin_threshold"]
    )
    run.write("normal_form.csv", nf.to_csv())
    run.write("generators.json", log.to_json())
    extra = {
        "margin": rot.margin,
        "remainder_max_coeff": remainder.max_abs_coeff(),
        "generator_count": len(log.steps),
    }
    summary = (
        f"classical normal form through weight {weight}: "
        f"{len(nf.to_records())} entries, {len(log.steps)} generators, "
        f"remainder max |c| = {remainder.max_abs_coeff():.3e}"
    )
    return summary, extra


def _cmd_bnf_semiclassical(cfg, tol, run, base_dir):
    orders = _orders(cfg)
    weight = int(orders.get("weight", 6))
    korder = int(orders.get("hbar", 2))
    work = int(orders.get("work_weight", weight))
    rot = _rot(cfg, weight, tol)
    H = _series_hamiltonian(cfg, rot, work)
    nf, log, remainder = birkhoff_semiclassical(
        H, rot, weight, korder, work, tol["margin_threshold"]
    )
    run.write("normal_form.csv", nf.to_csv())
    run.write("generators.json", log.to_json())
    extra = {
        "margin": rot.margin,
        "remainder_max_coeff": remainder.max_abs_coeff(),
        "generator_count": len(log.steps),
        "hbar_order": korder,
    }
    summary = (
        f"semiclassical normal form through weight {weight}, hbar^{korder}: "
        f"{len(nf.to_records())} entries, remainder max |c| = "
        f"{remainder.max_abs_coeff():.3e}"
    )
    return summary, extra


def _cmd_bnf_quantum(cfg, tol, run, base_dir):
    orders = _orders(cfg)
    weight = int(orders.get("weight", 6))
    work = int(orders.get("work_weight", weight))
    rot = _rot(cfg, weight, tol)
    H = _word_hamiltonian(cfg, rot, work)
    h, generators, remainder = birkhoff_quantum(
        H, rot, weight, work, tol["margin_threshold"]
    )
    run.write("normal_form.csv", h.to_csv())
    run.write(
        "generators.json",
        json.dumps([F.to_records() for F in generators], separators=(",", ":"))
        + "\n",
    )
    extra = {
        "margin": rot.margin,
        "remainder_max_coeff": remainder.max_abs_coeff(),
        "generator_count": len(generators),
    }
    summary = (
        f"quantum normal form through grade {weight}: "
        f"{len(h.to_records())} entries, {len(generators)} generators, "
        f"remainder max |c| = {remainder.max_abs_coeff():.3e}"
    )
    return summary, extra


def _cmd_weyl_of_h(cfg, tol, run, base_dir):
    korder = int(_orders(cfg).get("hbar", 2))
    h = _normal_form_arg(cfg, base_dir)
    out = weyl_of_functional_calculus(h, korder)
    run.write("weyl_symbol.csv", out.to_csv())
    summary = (
        f"Weyl symbol of the functional calculus through hbar^{korder}: "
        f"{len(out.to_records())} entries"
    )
    return summary, {"hbar_order": korder}


def _cmd_trace_forward(cfg, tol, run, base_dir):
    M = int(_orders(cfg).get("M", 4))
    nf = _normal_form_arg(cfg, base_dir)
    jets, bumps = _jets(cfg)
    tr = forward_trace_expansion(
        nf, [jets[l] for l in sorted(jets)], M, tol["term_threshold"]
    )
    run.write("trace.csv", tr.to_csv())
    jet_table = {str(l): {"width": bumps[l].width, "depth": jets[l].depth}
                 for l in sorted(jets)}
    summary = (
        f"trace coefficients d_l^m for l in {sorted(jets)} and m < {M}: "
        f"{len(tr.entries)} values"
    )
    return summary, {"jets": jet_table, "M": M}


def _cmd_trace_invert(cfg, tol, run, base_dir):
    M = int(_orders(cfg).get("M", 4))
    k_max = int(cfg.get("trace", {}).get("k_max", 0))
    path = cfg.get("trace_csv")
    if path is None:
        raise ValueError("config needs 'trace_csv' (path to a d_l^m table)")
    with open(os.path.join(base_dir, path)) as fh:
        text = fh.read()
    rot = _rot(cfg, max(2, M), tol)
    jets, _bumps = _jets(cfg)
    tr = TraceExpansion.from_csv(text, rot, jets, M)
    nf, report = invert_trace_expansion(
        tr,
        rot,
        M,
        k_max=k_max,
        cond_threshold=tol["cond_threshold"],
        residual_tol=tol["residual_tol"],
        threshold=tol["term_threshold"],
    )
    run.write("recovered.csv", nf.to_csv())
    run.write(
        "invert_report.json",
        json.dumps(
            {
                "condition_numbers": {
                    str(m): v for m, v in report["condition_numbers"].items()
                },
                "residuals": {str(m): v for m, v in report["residuals"].items()},
                "unknown_counts": {
                    str(m): v for m, v in report["unknown_counts"].items()
                },
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
    )
    worst = max(report["condition_numbers"].values(), default=1.0)
    summary = (
        f"recovered {len(nf.to_records())} coefficients through order {M} "
        f"(k_max = {k_max}), worst condition number {worst:.3e}"
    )
    return summary, {"k_max": k_max, "M": M}


def _cmd_oracle_spectrum(cfg, tol, run, base_dir):
    block = cfg.get("oracle")
    if block is None:
        raise ValueError(
            "config needs an 'oracle' block (hermite_cut, fourier_cut, hbar, window)"
        )
    hbar = float(block["hbar"])
    w = BasisWindow(int(block["hermite_cut"]), int(block["fourier_cut"]), hbar)
    lo, hi = (float(v) for v in block["window"])
    rot = _rot(cfg, int(_orders(cfg).get("weight", 6)), tol)
    H = _word_hamiltonian(cfg, rot, float("inf"))
    drift = float(block.get("drift_tol", tol["drift_tol"]))
    evs = quasi_eigenvalues(H, w, (lo, hi), drift_tol=drift)
    lines = ["index,eigenvalue"]
    lines += [f"{i},{v!r}" for i, v in enumerate(evs)]
    run.write("spectrum.csv", "\n".join(lines) + "\n")
    summary = (
        f"{len(evs)} safe quasi-eigenvalues in [{lo}, {hi}] at hbar = {hbar}"
    )
    return summary, {"hbar": hbar, "window": [lo, hi], "count": len(evs)}


def _cmd_verify(cfg, tol, run, base_dir):
    from .acceptance import format_result, run_all

    results = run_all()
    lines = [format_result(r) for r in results]
    for line in lines:
        print(line)
    run.write("acceptance.txt", "\n".join(lines) + "\n")
    failures = [r for r in results if not r.passed]
    summary = (
        f"{len(results) - len(failures)} of {len(results)} checks passed"
    )
    return summary, {"failures": len(failures)}


_COMMANDS = {
    "bnf-classical": _cmd_bnf_classical,
    "bnf-semiclassical": _cmd_bnf_semiclassical,
    "bnf-quantum": _cmd_bnf_quantum,
    "weyl-of-h": _cmd_weyl_of_h,
    "trace-forward": _cmd_trace_forward,
    "trace-invert": _cmd_trace_invert,
    "oracle-spectrum": _cmd_oracle_spectrum,
    "verify": _cmd_verify,
}

_HELP = {
    "bnf-classical": "classical normal form of E + theta.p + tau + perturbation",
    "bnf-semiclassical": "normal form with the hbar-graded bracket, explicit hbar powers",
    "bnf-quantum": "operator normal form of the word Hamiltonian",
    "weyl-of-h": "Weyl symbol of the functional calculus of a normal form",
    "trace-forward": "trace coefficients d_l^m from a normal form and jets",
    "trace-invert": "recover normal-form coefficients from a d_l^m table",
    "oracle-spectrum": "safe quasi-eigenvalues of the word Hamiltonian in a window",
    "verify": "run the acceptance checks (exit 1 on any failure)",
}


def main(argv=None):
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="problem config (JSON)")
    common.add_argument(
        "--out",
        metavar="DIR",
        default="orbitbnf_out",
        help="output directory (default: orbitbnf_out)",
    )
    common.add_argument(
        "--threads",
        metavar="N",
        type=int,
        default=1,
        help="thread budget, recorded in the manifest; reductions stay "
        "serialized so results do not depend on it",
    )
    common.add_argument(
        "--tolerance-overrides",
        metavar="PATH",
        help="JSON object overriding named tolerances "
        f"(known: {sorted(DEFAULT_TOLERANCES)})",
    )

    parser = argparse.ArgumentParser(
        prog="orbitbnf",
        description=(
            "Normal forms near an elliptic periodic orbit, symbol calculus, "
            "trace coefficients, and a truncated-basis oracle.  Conventions: "
            "p_i = (x_i^2 + xi_i^2)/2, time period 2*pi, hbar has weight 2."
        ),
        epilog=(
            "exit codes: 0 success, 1 verification failure, 2 bad config, "
            "3 resonance, 4 ill-conditioned inversion, 5 unsafe oracle window"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        sub.add_parser(name, parents=[common], help=_HELP[name])

    args = parser.parse_args(argv)
    handler = _COMMANDS[args.command]
    run = _Run(args.out)
    started = time.perf_counter()
    try:
        tol = _load_tolerances(args.tolerance_overrides)
        if args.command == "verify" and args.config is None:
            cfg, cfg_text, base_dir = {}, "", "."
        else:
            cfg, cfg_text = _load_config(args.config)
            base_dir = os.path.dirname(os.path.abspath(args.config))
        summary, extra = handler(cfg, tol, run, base_dir)
    except ResonanceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (IllConditionedError, InconsistentDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (UnsafeWindowError, CoverageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except (OrbitBNFError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    run.timings[args.command] = time.perf_counter() - started
    run.write_manifest(
        {
            "command": args.command,
            "config_sha256": hashlib.sha256(cfg_text.encode()).hexdigest()
            if cfg_text
            else None,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "threads": args.threads,
            "tolerances": tol,
            "outputs": run.outputs,
            "timings_seconds": run.timings,
            "details": extra,
        }
    )
    print(summary)
    if args.command == "verify" and extra.get("failures"):
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
