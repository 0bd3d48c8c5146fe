"""Command-line front end: ``fvkernel <command> --config <path>``.

Every command writes ``result.csv`` and ``summary.json`` into the output
directory and exits with status 0 only if every tolerance check passed.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import correlations as corr
from . import dynamics as dyn
from . import kernels as kern
from .config import COMMANDS, ConfigError, RunConfig, load_config
from .errors import FVKernelError
from .fock import LinearBoseBathSpec

__all__ = ["main", "run", "build_parser", "CSV_COLUMNS"]

CSV_COLUMNS = {
    "kernels": ["family", "tau", "kR_re", "kR_im", "kI_re", "kI_im"],
    "corr": ["sample_id", "t1", "t2", "C_re", "C_im", "trace_re", "trace_im", "absdiff"],
    "g4check": ["sample_id", "d_combo", "normalized_abs_G4"],
    "pairing": ["sample_id", "d_combo", "caseI_re", "caseI_im", "caseII_re", "caseII_im",
                "caseIII_re", "caseIII_im", "counter_re", "counter_im", "trace_re",
                "trace_im", "rel_vs_trace", "rel_vs_counter"],
    "dynamics": ["method", "t", "sz", "sx", "purity", "trace_dev"],
    "scaling": ["lambda", "D"],
}


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _dcombo(d) -> str:
    return "".join(s.value for s in corr.parse_sides(d))


def _combos(cfg: RunConfig) -> list:
    if cfg.d:
        return [corr.parse_sides(cfg.d)]
    return corr.all_side_combinations(4)


def _sample_times(rng, cfg: RunConfig, n: int) -> list:
    lo, hi = (cfg.grid.t0, cfg.grid.tf) if cfg.grid else (0.0, 5.0)
    return [float(t) for t in rng.uniform(lo, hi, n)]


def _cmd_kernels(cfg, rng):
    bath = cfg.make_bath(rng)
    tau = cfg.grid.times
    if isinstance(bath, LinearBoseBathSpec):
        family = "bose_linear"
        kp = kern.bose_linear_kernels(bath, tau)
        km = kern.bose_linear_kernels(bath, -tau)
        checks = {}
    else:
        family = bath.statistics.value
        fn = kern.fermi_kernels if bath.is_fermi else kern.bose_bilinear_kernels
        kp, km = fn(bath, tau), fn(bath, -tau)
        if bath.is_fermi:
            C = corr.two_time_analytic(bath, tau, 0.0)
            checks = {"consistency": max(np.max(np.abs(kp.k_real - 2 * C.real)),
                                         np.max(np.abs(kp.k_imag - 2j * C.imag)))}
        else:
            fr, fi = kern.kernel_terms(bath.replace(statistics="fermi"), tau)
            br, bi = kern.kernel_terms(bath, tau)
            coth = 1.0 / np.tanh(bath.beta * bath.energies / 2)
            cc = np.multiply.outer(coth, coth).reshape(coth.size, coth.size,
                                                      *([1] * tau.ndim))
            checks = {"substitution": max(np.max(np.abs(br + cc * fr)),
                                          np.max(np.abs(bi + cc * fi)))}
    checks["parity"] = max(np.max(np.abs(km.k_real - kp.k_real)),
                           np.max(np.abs(km.k_imag + kp.k_imag)))
    rows = [[family, t, kr.real, kr.imag, ki.real, ki.imag]
            for t, kr, ki in zip(tau, np.atleast_1d(kp.k_real), np.atleast_1d(kp.k_imag))]
    summary = {"family": family}
    passes = {}
    for name, value in checks.items():
        summary[f"max_{name}_residual"] = value
        passes[name] = value <= cfg.tolerances["identity"]
    return rows, summary, passes


def _cmd_corr(cfg, rng):
    rows, worst = [], 0.0
    for i in range(cfg.samples):
        bath = cfg.make_bath(rng)
        t1, t2 = _sample_times(rng, cfg, 2)
        C = corr.two_time_analytic(bath, t1, t2)
        T = corr.ordered_trace(bath, (t1, t2))
        diff = abs(C - T)
        worst = max(worst, diff)
        rows.append([i, t1, t2, C.real, C.imag, T.real, T.imag, diff])
    return rows, {"max_absdiff": worst}, {"absdiff": worst <= cfg.tolerances["absdiff"]}


def _cmd_g4check(cfg, rng):
    rows, worst, fermi = [], 0.0, True
    for i in range(cfg.samples):
        bath = cfg.make_bath(rng)
        fermi = fermi and bath.is_fermi
        times = _sample_times(rng, cfg, 4)
        for d in _combos(cfg):
            _, ratio = corr.g4_normalized(bath, times, d)
            worst = max(worst, ratio)
            rows.append([i, _dcombo(d), ratio])
    summary = {"max_normalized_abs_G4": worst, "asserted": fermi}
    # vanishing is only claimed for fermionic baths
    passes = {"g4": worst <= cfg.tolerances["g4"]} if fermi else {}
    return rows, summary, passes


def _cmd_pairing(cfg, rng):
    rows, wt, wc = [], 0.0, 0.0
    for i in range(cfg.samples):
        bath = cfg.make_bath(rng)
        times = _sample_times(rng, cfg, 4)
        d = corr.parse_sides(cfg.d or "LLLL")
        r = corr.pairing_decomposition(bath, times, d)
        wt, wc = max(wt, r.rel_vs_trace), max(wc, r.rel_vs_counter)
        rows.append([i, _dcombo(d)] + [part for z in (r.caseI, r.caseII, r.caseIII,
                                                      r.counter_terms, r.trace)
                                       for part in (z.real, z.imag)]
                    + [r.rel_vs_trace, r.rel_vs_counter])
    summary = {"max_rel_vs_trace": wt, "max_rel_vs_counter": wc}
    passes = {"rel_trace": wt <= cfg.tolerances["rel_trace"],
              "rel_counter": wc <= cfg.tolerances["rel_counter"]}
    return rows, summary, passes


def _influence_trajectory(cfg, bath, grid):
    method = cfg.method or ("pathsum" if grid.N <= dyn.MAX_MEMORY or cfg.memory
                            else "gaussian")
    if method == "gaussian":
        return method, dyn.gaussian_reduced_dynamics(cfg.system, bath, grid)
    table = kern.eta_coefficients(bath, grid.N, grid.dt)
    return method, dyn.pathsum_reduced_dynamics(cfg.system, table, grid, cfg.memory)


def _cmd_dynamics(cfg, rng):
    bath = cfg.make_bath(rng)
    exact = dyn.exact_reduced_dynamics(cfg.system, bath, cfg.grid)
    method, approx = _influence_trajectory(cfg, bath, cfg.grid)
    rows = []
    for name, traj in (("exact", exact), (method, approx)):
        obs = traj.observables
        for n, t in enumerate(traj.times):
            rows.append([name, t, obs["Sz"][n], obs["Sx"][n], obs["Purity"][n],
                         traj.trace_deviation[n]])
    herm = max(float(np.max(np.abs(tr.rho - tr.rho.conj().transpose(0, 2, 1))))
               for tr in (exact, approx))
    trace_dev = max(float(np.max(tr.trace_deviation)) for tr in (exact, approx))
    summary = {"method": method, "max_trace_distance": dyn.max_trace_distance(exact, approx),
               "max_trace_dev": trace_dev, "max_hermitian_dev": herm}
    passes = {"trace": trace_dev <= cfg.tolerances["trace"],
              "hermitian": herm <= cfg.tolerances["hermitian"]}
    return rows, summary, passes


def _cmd_scaling(cfg, rng):
    bath = cfg.make_bath(rng)
    method = "table" if cfg.method == "pathsum" else "gaussian"
    res = dyn.error_scaling(cfg.system, bath, cfg.grid, cfg.lambdas, method=method,
                            extrapolate=cfg.extrapolate, memory=cfg.memory)
    rows = [[lam, D] for lam, D in zip(res.lambdas, res.distances)]
    summary = {"slope": res.slope, "intercept": res.intercept,
               "inconclusive": res.inconclusive, "method": method}
    ok = (not res.inconclusive
          and cfg.tolerances["slope_min"] <= res.slope <= cfg.tolerances["slope_max"])
    return rows, summary, {"slope": ok}


_COMMANDS: dict[str, Callable] = {
    "kernels": _cmd_kernels, "corr": _cmd_corr, "g4check": _cmd_g4check,
    "pairing": _cmd_pairing, "dynamics": _cmd_dynamics, "scaling": _cmd_scaling,
}


def _write_outputs(cfg, rows, summary):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "result.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS[cfg.command])
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    with open(out / "summary.json", "w", newline="\n", encoding="utf-8") as fh:
        json.dump({k: _json_value(v) for k, v in summary.items()}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


def run(cfg: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit status."""
    rng = np.random.default_rng(cfg.seed)
    rows, summary, passes = _COMMANDS[cfg.command](cfg, rng)
    summary = {"command": cfg.command, "seed": cfg.seed, "rows": len(rows), **summary}
    for name, value in cfg.tolerances.items():
        summary[f"tol_{name}"] = value
    for name, ok in passes.items():
        summary[f"pass_{name}"] = bool(ok)
    summary["pass"] = all(passes.values())
    _write_outputs(cfg, rows, summary)
    return 0 if summary["pass"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fvkernel",
        description="Influence-functional kernels, bath cumulants and reduced "
                    "qubit dynamics for discrete baths.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, type=Path,
                        help="INI file with [bath], [system], [grid] and [run] sections")
    parser.add_argument("--output", type=Path, default=Path("."),
                        help="directory for result.csv and summary.json (default: .)")
    parser.add_argument("--seed", type=int, default=None,
                        help="random seed; overrides run.seed (default 42)")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.command)
    except OSError as exc:
        print(f"fvkernel: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"fvkernel: config error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        if args.seed < 0:
            print("fvkernel: --seed must be non-negative", file=sys.stderr)
            return 2
        cfg.seed = args.seed
    cfg.output_dir = args.output
    try:
        status = run(cfg)
    except OSError as exc:
        print(f"fvkernel: {exc}", file=sys.stderr)
        return 3
    except FVKernelError as exc:
        print(f"fvkernel: error: {exc}", file=sys.stderr)
        return 2
    print(f"fvkernel {cfg.command}: {'pass' if status == 0 else 'FAIL'} "
          f"({args.output / 'summary.json'})")
    return status


if __name__ == "__main__":
    sys.exit(main())
