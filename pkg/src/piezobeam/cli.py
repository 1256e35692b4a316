"""Command-line interface: validate, simulate, spectrum, scan, classify,
report.

Every command reads one config file and writes its outputs into the
configured directory.  Exit codes: 0 success, 2 parse error, 3 validation
error, 4 numerical failure.  All delimited output is deterministic for a
fixed config, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import diagnostics, evolution, operator, spectral
from .config import RunConfig, parse_config
from .errors import (DegenerateGrid, HistoryRequiredForPositiveM,
                     IncompatibleSpec, InsufficientTail, KernelNotAdmissible,
                     MixingAtEndpoint, MixingOutOfRange, NegativeArgument,
                     NonPositiveCoefficient, ParseError, PiezobeamError,
                     ShapeMismatch, ValidationError)
from .grid import build_grid
from .params import check_dafermos, eval_sigma
from .operator import assemble

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4

# config-induced failures; everything else PiezobeamError is numerical
_VALIDATION_ERRORS = (ValidationError, InsufficientTail, ShapeMismatch,
                      HistoryRequiredForPositiveM, IncompatibleSpec,
                      MixingOutOfRange, MixingAtEndpoint,
                      NonPositiveCoefficient, KernelNotAdmissible,
                      DegenerateGrid, NegativeArgument)


def _fmt(value: float) -> str:
    return repr(float(value))


def write_csv(path: Path, header: list, rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if np.isfinite(value) else None
    return value


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True,
                  allow_nan=False)
        fh.write("\n")


def _outdir(cfg: RunConfig, override: str | None) -> Path:
    out = Path(override) if override else Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _assemble(cfg: RunConfig):
    grid = build_grid(cfg.params, cfg.kernel, cfg.n_x, cfg.n_s)
    return assemble(cfg.params, cfg.kernel, grid)


def _regime_hint(m: float) -> str:
    if m == 0.0:
        return "Fourier limit"
    if m == 1.0:
        return "purely hereditary heat flux"
    return "mixed instantaneous/hereditary heat flux"


def cmd_validate(cfg: RunConfig, outdir: Path, args) -> int:
    """Check parameters, kernel admissibility, and the grid build."""
    grid = build_grid(cfg.params, cfg.kernel, cfg.n_x, cfg.n_s)
    lines = [
        f"params: ok (alpha = {cfg.params.alpha:g}, m = {cfg.params.m:g})",
        f"grid: ok (n_x = {grid.n_x}, n_s = {grid.n_s}, dim = {grid.dim})",
    ]
    if grid.n_s:
        mass = float(np.dot(grid.s_weights, eval_sigma(cfg.kernel, grid.s_nodes)))
        lines.append(f"quadrature: ok (mass {mass:.12g} vs g(0) = {cfg.kernel.g0:.12g})")
        probe = np.geomspace(max(grid.s_nodes[0], 1e-6), grid.s_nodes[-1], 64)
    elif cfg.kernel.kind == "tabulated":
        lo = max(cfg.kernel.s_samples[0], 1e-6 * cfg.kernel.s_samples[-1], 1e-9)
        probe = np.linspace(lo, cfg.kernel.s_samples[-1], 64)
    else:
        probe = np.geomspace(1e-3, 18.5, 64) / cfg.kernel.d_sigma
    report = check_dafermos(cfg.kernel, probe)
    lines.append(f"kernel decay condition: holds = {report.holds} "
                 f"(worst margin {report.worst_margin:.3e})")
    print("\n".join(lines))
    if not report.holds:
        raise ValidationError(
            f"kernel violates the decay condition (margin {report.worst_margin:.3e})")
    return EXIT_OK


def _simulate_outputs(cfg: RunConfig, outdir: Path):
    op = _assemble(cfg)
    traj = evolution.simulate(op, cfg.sim)
    residuals = np.concatenate([[0.0], diagnostics.energy_identity_residual(op, traj)]) \
        if traj.times.size > 1 else np.zeros(1)

    header = ["t", "e1", "e2", "e3", "total", "flux_diss", "memory_diss",
              "identity_residual"]
    rows = [(t, e.e1, e.e2, e.e3, e.total, e.flux_dissipation,
             e.memory_dissipation, r)
            for t, e, r in zip(traj.times, traj.energies, residuals)]
    write_csv(outdir / "energy.csv", header, rows)

    grid = op.grid
    state_header = (["t"]
                    + [f"u_{j}" for j in range(1, grid.n_full + 1)]
                    + [f"v_{j}" for j in range(1, grid.n_full + 1)]
                    + [f"y_{j}" for j in range(1, grid.n_full + 1)]
                    + [f"z_{j}" for j in range(1, grid.n_full + 1)]
                    + [f"w_{j}" for j in range(1, grid.n_interior + 1)]
                    + [f"eta{k}_{j}" for k in range(1, grid.n_s + 1)
                       for j in range(1, grid.n_interior + 1)])
    write_csv(outdir / "trajectory.csv", state_header,
              (np.concatenate([[t], s]) for t, s in zip(traj.times, traj.states)))

    totals = np.array([e.total for e in traj.energies])
    fit = None
    fit_payload = None
    window = (min(diagnostics.transient_end(cfg.params), 0.25 * cfg.sim.t_final),
              cfg.sim.t_final)
    if totals.size > 2 and np.all(totals > 0.0):
        try:
            fit = diagnostics.fit_exponential(traj.times, totals, window)
            fit_payload = {
                "kind": "exponential",
                "amplitude": fit.model.amplitude,
                "energy_rate": fit.model.energy_rate,
                "norm_rate": fit.model.norm_rate,
                "r_squared": fit.r_squared,
                "window": [fit.window[0], fit.window[1]],
                "rate_convention": "energy",
            }
        except PiezobeamError:
            fit = None

    summary = {
        "m": cfg.params.m,
        "regime_hint": _regime_hint(cfg.params.m),
        "grid": {"n_x": grid.n_x, "n_s": grid.n_s, "dim": grid.dim, "h": grid.h},
        "dt": cfg.sim.resolve_dt(grid.h),
        "t_final": cfg.sim.t_final,
        "records": int(traj.times.size),
        "energy_initial": float(totals[0]),
        "energy_final": float(totals[-1]),
        "energy_monotone": bool(np.all(np.diff(totals) <= 1e-12 * max(totals[0], 1.0))),
        "max_identity_residual": float(np.max(np.abs(residuals))),
        "decay_fit": fit_payload,
    }
    write_json(outdir / "summary.json", summary)
    return op, traj, fit


def cmd_simulate(cfg: RunConfig, outdir: Path, args) -> int:
    """Run the time integration; write trajectory, energies, summary."""
    _simulate_outputs(cfg, outdir)
    print(f"simulate: wrote trajectory.csv, energy.csv, summary.json to {outdir}")
    return EXIT_OK


def _spectrum_outputs(cfg: RunConfig, outdir: Path, op=None, make_figure=True):
    from . import plots

    op = op or _assemble(cfg)
    eigs = spectral.eigenvalues(op)
    write_csv(outdir / "eigs.csv", ["re", "im"],
              ((e.real, e.imag) for e in eigs))
    if make_figure:
        plots.spectrum_figure(eigs, outdir / "eigs.svg")
    return op, eigs


def cmd_spectrum(cfg: RunConfig, outdir: Path, args) -> int:
    """Write the generator's eigenvalues and a spectrum figure."""
    op, eigs = _spectrum_outputs(cfg, outdir)
    if getattr(args, "dump_operator", False):
        operator.dump_matrix(op.a_matrix, outdir / "a_matrix.txt")
        operator.dump_matrix(op.gram, outdir / "gram.txt")
    print(f"spectrum: wrote eigs.csv ({eigs.size} eigenvalues) to {outdir}")
    return EXIT_OK


def _scan_outputs(cfg: RunConfig, outdir: Path, op=None, make_figure=True):
    from . import plots

    op = op or _assemble(cfg)
    scan = spectral.resolvent_scan(op, cfg.lambda_grid)
    write_csv(outdir / "scan.csv", ["lambda", "norm", "norm_over_lambda_sq"],
              ((lam, nrm, nrm / lam**2)
               for lam, nrm in zip(scan.lambdas, scan.norms)))
    if make_figure:
        plots.scan_figure(scan.lambdas, scan.norms, outdir / "scan.svg",
                          tail_slope=scan.growth_exponent)
    return op, scan


def cmd_scan(cfg: RunConfig, outdir: Path, args) -> int:
    """Scan resolvent norms along the imaginary axis."""
    _, scan = _scan_outputs(cfg, outdir)
    print(f"scan: wrote scan.csv ({scan.lambdas.size} points, "
          f"tail slope {scan.growth_exponent:.3f}) to {outdir}")
    return EXIT_OK


def _classify_outputs(cfg: RunConfig, outdir: Path):
    op = _assemble(cfg)
    op, eigs = _spectrum_outputs(cfg, outdir, op=op)
    op, scan = _scan_outputs(cfg, outdir, op=op)
    report = spectral.classify(scan, spectral.spectrum_summary(eigs))
    payload = {"regime": report.regime, "note": report.note,
               "regime_hint": _regime_hint(cfg.params.m)}
    payload.update(report.evidence)
    write_json(outdir / "report.json", payload)
    return op, report


def cmd_classify(cfg: RunConfig, outdir: Path, args) -> int:
    """Scan + spectrum, then classify the decay regime."""
    _, report = _classify_outputs(cfg, outdir)
    print(f"classify: regime = {report.regime} "
          f"(tail slope {report.evidence['growth_exponent']:.3f}); "
          f"wrote report.json to {outdir}")
    return EXIT_OK


def cmd_report(cfg: RunConfig, outdir: Path, args) -> int:
    """Full pipeline: simulate, spectrum, scan, classify, figures."""
    from . import plots

    op, traj, fit = _simulate_outputs(cfg, outdir)
    totals = [e.total for e in traj.energies]
    plots.energy_figure(traj.times, totals, outdir / "energy.svg", fit=fit)
    _, report = _classify_outputs(cfg, outdir)
    print(f"report: regime = {report.regime}; wrote CSV, JSON and SVG "
          f"figures to {outdir}")
    return EXIT_OK


_COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "spectrum": cmd_spectrum,
    "scan": cmd_scan,
    "classify": cmd_classify,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="piezobeam",
        description="Numerical lab for piezoelectric beams with thermal memory.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("config", help="path to a key=value config file")
        p.add_argument("--output", default=None,
                       help="output directory (overrides [output] directory)")
        if name == "spectrum":
            p.add_argument("--dump-operator", action="store_true",
                           help="also dump a_matrix.txt and gram.txt")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        outdir = _outdir(cfg, args.output)
        return _COMMANDS[args.command](cfg, outdir, args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _VALIDATION_ERRORS as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except PiezobeamError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
