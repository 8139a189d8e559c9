"""
Command line front end: spectra, figure sweeps, validation and optimization.

Exit codes: 0 success, 1 validation error, 2 convergence failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .channel import PhaseProfile
from .covariance import analytic_spectrum, exact_spectrum, spectral_cdf, write_spectrum_csv
from .errors import ConvergenceError, DomainError, QuadratureError
from .mi_estimator import ergodic_mi_mc
from .optimizer import (OptimizationReport, alternating_optimize, optimize_phases,
                        write_optimization_csv)
from .replica import ReplicaModel, asymptotic_mi, solve_fixed_point, write_trace_csv
from .scenario_file import ScenarioError, ScenarioFile, read_scenario_file
from .scenarios import uncorrelated_baseline

__all__ = ["main", "cmd_spectrum", "cmd_fig3", "cmd_fig4", "cmd_validate",
           "cmd_optimize", "cmd_fixed_point_trace", "EXIT_OK", "EXIT_VALIDATION",
           "EXIT_CONVERGENCE", "EXIT_IO"]

EXIT_OK, EXIT_VALIDATION, EXIT_CONVERGENCE, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("riscap")


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x:.12g}"


def _write_rows(path, header, rows):
    # rendered fully before opening so a failure never leaves partial output
    text = ",".join(header) + "\n" + "".join(
        ",".join(_fmt(v) if not isinstance(v, str) else v for v in row) + "\n"
        for row in rows)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _C(config, phases, tol):
    model = ReplicaModel(config, phases)
    sol = solve_fixed_point(model, tol=tol)
    if not sol.converged:
        raise ConvergenceError(f"fixed point not converged (residual {sol.residual:.3e})")
    return model.objective(sol.vector).C_per_Nt


def _optimize(scn: ScenarioFile, config, tol):
    method = scn.method
    if method == "none":
        phases = PhaseProfile.zeros(config.K, config.Ns)
        C = _C(config, phases, tol)
        return phases, C, C
    if method == "alternating":
        rep = alternating_optimize(config, outer_tol=scn.outer_tol, max_outer=scn.max_outer,
                                   fp_tol=tol)
    else:
        rep = optimize_phases(config, method, fp_tol=tol)
    return rep.phases, rep.initial_C, rep.final_C


def cmd_spectrum(scn: ScenarioFile, out, side: str = "in", n_thresholds: int = 201,
                 dump=None) -> None:
    """
    CDFs of the exact and asymptotic eigenvalues of the first RIS covariance.

    Writes ``threshold,cdf_exact,cdf_analytic`` on ``n_thresholds`` points
    spread evenly from zero to the largest eigenvalue.
    """
    if scn.count < 1:
        raise DomainError("scenario has no RIS")
    config = scn.to_config()
    grid, w_in, w_out = config.geometry[0]
    S = config.covariances.S_t[0] if side == "in" else config.covariances.S_r[0]
    weight = w_in if side == "in" else w_out
    ex = exact_spectrum(S)
    an = analytic_spectrum(grid, weight)
    top = max(ex.eigenvalues[0], an.eigenvalues[0])
    t = np.linspace(0.0, top, n_thresholds)
    ce, ca = spectral_cdf(ex, t), spectral_cdf(an, t)
    _write_rows(out, ["threshold", "cdf_exact", "cdf_analytic"],
                [(a[0], a[1], b[1]) for a, b in zip(ce, ca)])
    if dump is not None:
        write_spectrum_csv(dump, ex, an)


def cmd_fig3(scn: ScenarioFile, out, sigmas_deg, ns_list, mc: bool = False,
             n_samples=None, tol: float = 1e-10, workers: int = 1) -> None:
    """MI versus angle spread for square RISs of each size in ``ns_list``."""
    rows = []
    for ns in ns_list:
        side = int(round(math.sqrt(ns)))
        if side * side != ns:
            raise DomainError(f"N_s = {ns} is not a square number")
        for sig in sigmas_deg:
            s = scn.replace(rows=side, cols=side,
                            spread_in_deg=(float(sig),) * scn.count,
                            spread_out_deg=(float(sig),) * scn.count)
            config = s.to_config()
            phases, C_unopt, C_opt = _optimize(s, config, tol)
            C_unc = _C(uncorrelated_baseline(config),
                       PhaseProfile.zeros(config.K, config.Ns), tol)
            C_mc = None
            if mc:
                est = ergodic_mi_mc(config, phases, n_samples or s.n_samples, workers)
                C_mc = est.per_antenna_mean
            log.info("fig3 sigma=%g Ns=%d C_unopt=%.6f C_opt=%.6f", sig, ns, C_unopt, C_opt)
            rows.append((float(sig), ns, C_unopt, C_opt, C_unc, C_mc))
    _write_rows(out, ["sigma_deg", "Ns", "C_unopt", "C_opt", "C_uncorrelated", "C_mc_opt"],
                rows)


def cmd_fig4(scn: ScenarioFile, out, theta1_deg, sigmas_deg, sum_deg: float = 100.0,
             tol: float = 1e-10) -> None:
    """MI versus incoming angle with ``theta_2 = sum_deg - theta_1``."""
    rows = []
    for sig in sigmas_deg:
        for th1 in theta1_deg:
            th2 = sum_deg - th1
            s = scn.replace(incoming_deg=(float(th1),) * scn.count,
                            outgoing_deg=(float(th2),) * scn.count,
                            spread_in_deg=(float(sig),) * scn.count,
                            spread_out_deg=(float(sig),) * scn.count)
            config = s.to_config()
            _, C_unopt, C_opt = _optimize(s, config, tol)
            log.info("fig4 theta1=%g sigma=%g C_unopt=%.6f C_opt=%.6f",
                     th1, sig, C_unopt, C_opt)
            rows.append((float(th1), float(sig), C_unopt, C_opt))
    _write_rows(out, ["theta1_deg", "sigma_deg", "C_unopt", "C_opt"], rows)


def cmd_validate(scn: ScenarioFile, n_samples=None, max_gap: float = 0.05,
                 tol: float = 1e-10, stream=None, out=None, workers: int = 1) -> bool:
    """
    Compare the large-system MI with a Monte Carlo estimate at identity phases.

    Returns True when the relative gap is within ``max_gap``.
    """
    stream = sys.stdout if stream is None else stream
    config = scn.to_config()
    phases = PhaseProfile.zeros(config.K, config.Ns)
    C = _C(config, phases, tol)
    est = ergodic_mi_mc(config, phases, n_samples or scn.n_samples, workers)
    C_mc = est.per_antenna_mean
    if C_mc == 0.0 and C == 0.0:
        gap = 0.0
    else:
        gap = abs(C - C_mc) / abs(C_mc) if C_mc else math.inf
    print(f"C_replica = {C:.8f} nats/antenna", file=stream)
    print(f"C_mc      = {C_mc:.8f} +- {est.per_antenna_std_error:.8f} "
          f"({est.n_samples} samples)", file=stream)
    print(f"relative gap = {gap:.6f} (threshold {max_gap})", file=stream)
    if out is not None:
        _write_rows(out, ["C_replica", "C_mc", "C_mc_stderr", "n_samples", "rel_gap"],
                    [(C, C_mc, est.per_antenna_std_error, est.n_samples, gap)])
    return gap <= max_gap


def cmd_optimize(scn: ScenarioFile, out, tol: float = 1e-10, stream=None) -> None:
    """Run the configured optimization; the alternating loop writes its trace."""
    stream = sys.stdout if stream is None else stream
    config = scn.to_config()
    if scn.method == "alternating":
        rep = alternating_optimize(config, outer_tol=scn.outer_tol, max_outer=scn.max_outer,
                                   fp_tol=tol)
    elif scn.method == "none":
        zero = PhaseProfile.zeros(config.K, config.Ns)
        C = _C(config, zero, tol)
        rep = OptimizationReport(C, C, 0, [C], "none", zero)
    else:
        rep = optimize_phases(config, scn.method, fp_tol=tol)
    write_optimization_csv(out, rep)
    print(f"method={rep.method} C_initial={rep.initial_C:.8f} C_final={rep.final_C:.8f} "
          f"outer_iterations={rep.outer_iterations}", file=stream)


def cmd_fixed_point_trace(scn: ScenarioFile, out, tol: float = 1e-10) -> None:
    """Convergence history of the fixed point at identity phases."""
    config = scn.to_config()
    sol = solve_fixed_point(config, PhaseProfile.zeros(config.K, config.Ns), tol=tol,
                            record=True)
    if not sol.converged:
        raise ConvergenceError(f"fixed point not converged after {sol.iterations} iterations")
    write_trace_csv(out, sol)


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", required=True, help="scenario file (INI)")
    common.add_argument("--seed", type=int, help="override the Monte Carlo seed")
    common.add_argument("--samples", type=int, help="override the Monte Carlo sample count")
    common.add_argument("--tolerance", type=float, default=1e-10,
                        help="fixed-point tolerance (default 1e-10)")
    common.add_argument("--workers", type=int, default=1,
                        help="Monte Carlo worker threads (results do not depend on it)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="riscap", description=__doc__.splitlines()[1])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("spectrum", parents=[common], help="eigenvalue CDFs of an RIS covariance")
    s.add_argument("--out", required=True)
    s.add_argument("--side", choices=["in", "out"], default="in")
    s.add_argument("--thresholds", type=int, default=201)
    s.add_argument("--dump", help="also write index,m1,m2,eigenvalue,source rows here")

    s = sub.add_parser("fig3", parents=[common], help="MI versus angle spread")
    s.add_argument("--out", required=True)
    s.add_argument("--sigmas", type=_floats, default=[2, 5, 10, 20, 30, 40, 60])
    s.add_argument("--ns", type=_ints, default=[100, 400])
    s.add_argument("--mc", action=argparse.BooleanOptionalAction, default=False)

    s = sub.add_parser("fig4", parents=[common], help="MI versus incoming angle")
    s.add_argument("--out", required=True)
    s.add_argument("--theta1", type=_floats, default=list(range(10, 91, 10)))
    s.add_argument("--sigmas", type=_floats, default=[2, 10])
    s.add_argument("--sum-deg", type=float, default=100.0)

    s = sub.add_parser("validate", parents=[common], help="large-system MI versus Monte Carlo")
    s.add_argument("--max-gap", type=float, default=0.05)
    s.add_argument("--out")

    s = sub.add_parser("optimize", parents=[common], help="optimise RIS phases")
    s.add_argument("--out", required=True)

    s = sub.add_parser("fixed-point-trace", parents=[common], help="fixed-point convergence")
    s.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        scn = read_scenario_file(args.scenario)
        if args.seed is not None:
            scn = scn.replace(seed=args.seed)
        if args.samples is not None:
            scn = scn.replace(n_samples=args.samples)
        tol = args.tolerance
        if args.command == "spectrum":
            cmd_spectrum(scn, args.out, args.side, args.thresholds, args.dump)
        elif args.command == "fig3":
            cmd_fig3(scn, args.out, args.sigmas, args.ns, args.mc, args.samples, tol,
                     args.workers)
        elif args.command == "fig4":
            cmd_fig4(scn, args.out, args.theta1, args.sigmas, args.sum_deg, tol)
        elif args.command == "validate":
            if not cmd_validate(scn, args.samples, args.max_gap, tol, out=args.out,
                                workers=args.workers):
                print("error: relative gap exceeds threshold", file=sys.stderr)
                return EXIT_VALIDATION
        elif args.command == "optimize":
            cmd_optimize(scn, args.out, tol)
        elif args.command == "fixed-point-trace":
            cmd_fixed_point_trace(scn, args.out, tol)
    except (ScenarioError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, QuadratureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
