#!/usr/bin/env python3
"""
main.py

Command-line entry point:
  theta       surface density theta(nu) (and half-space masses)
  feps        one evaluation of F_eps(E)
  limit       the limit functional F(E)
  converge    epsilon sweep F_eps -> F with CSV/JSON report
  lowerbound  perturbed-graph lower-bound study with CSV/JSON report
  oracle      fixed-seed Monte Carlo oracle vs quadrature
  selfcheck   invariant suite

Exit codes: 0 pass, 1 criteria failed, 2 usage or config error.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np

# Ensure project root is in path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config import Config
from utils.config_parser import ConfigError, ExperimentConfigParser
from utils.data_structures import ExperimentConfig
from utils.logging_utils import ConsoleFormatter, log_error, log_step, setup_logging
from numerics.density import integrate_density, theta
from numerics.kernels import (
    absolute_moment_along,
    first_radial_moment,
    halfspace_mass,
    halfspace_table,
    kernel_total_mass,
    make_bump_kernel,
    slice_integral,
)
from numerics.nonlocal_energy import ResolutionError, evaluate_functional
from numerics.shapes import boundary_quadrature, shape_from_spec
from lab import oracles
from lab.goldens import freeze_goldens
from lab.experiments import ExperimentRunner, build_context
from lab.reporting import (
    format_convergence,
    format_lower_bound,
    format_selfcheck,
    output_paths,
    write_convergence_csv,
    write_json_report,
    write_lower_bound_csv,
)
from lab.selfcheck import FAULTS, selfcheck

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2

ORACLE_QUANTITIES = ("halfspace", "theta", "slice", "moment", "mass", "radial_moment")


def _load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfigParser().parse_file(path)


def _direction(text: Optional[str], dim: int) -> np.ndarray:
    """Parse '--nu a,b,...' and normalize; defaults to e_N."""
    if text is None:
        nu = np.zeros(dim)
        nu[-1] = 1.0
        return nu
    try:
        nu = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ValueError(f"--nu must be comma-separated numbers, got '{text}'")
    if nu.shape != (dim,) or not np.linalg.norm(nu) > 0.0:
        raise ValueError(f"--nu needs {dim} components and a nonzero norm, got '{text}'")
    return nu / np.linalg.norm(nu)


# ----------------------------
# Subcommands
# ----------------------------
def cmd_theta(args) -> int:
    cfg = _load_config(args.config)
    ctx = build_context(cfg)
    nu = _direction(args.nu, ctx.dim)
    value = theta(ctx, nu)
    print(f"theta({_vec(nu)}) = {value:.15g}   [{ctx.profile.name}, radial={ctx.kernel.is_radial}]")
    if args.t is not None:
        print(f"halfspace_mass(t={args.t:g}) = {halfspace_mass(ctx.kernel, nu, args.t):.15g}")
    if args.table:
        for record in halfspace_table(ctx.kernel, nu, args.table):
            print(f"  t = {record.offset:.6f}   mass = {record.value:.15g}")
    return EXIT_PASS


def cmd_feps(args) -> int:
    cfg = _load_config(args.config)
    runner = ExperimentRunner(cfg)
    epsilon = args.epsilon if args.epsilon is not None else cfg.schedule.epsilon0
    dom = runner.domain_for(epsilon)
    evaluation = evaluate_functional(runner.shape, epsilon, runner.profile, runner.kernel, dom,
                                     supersample=cfg.schedule.supersample, method=cfg.schedule.method)
    print(f"F_eps = {evaluation.value:.15g}   (eps = {epsilon:g}, resolution = {evaluation.resolution}, "
          f"stencil radius = {evaluation.stencil_radius}, raw stencil mass = {evaluation.raw_stencil_mass:.12g})")
    return EXIT_PASS


def cmd_limit(args) -> int:
    cfg = _load_config(args.config)
    ctx = build_context(cfg)
    shape = shape_from_spec(cfg.shape, cfg.kernel.dim)
    bq = boundary_quadrature(shape, cfg.domain.to_domain(), cfg.shape.boundary_order)
    value = integrate_density(ctx, bq)
    print(f"F(E) = {value:.15g}   ({len(bq)} boundary nodes, measure {bq.total_weight:.12g})")
    if bq.flags:
        print(ConsoleFormatter.warning(f"quadrature flags: {', '.join(bq.flags)}"))
    return EXIT_PASS


def cmd_converge(args) -> int:
    cfg = _load_config(args.config)
    report = ExperimentRunner(cfg).run_convergence()
    csv_path, json_path = output_paths(cfg)
    write_convergence_csv(csv_path, report)
    if cfg.output.write_json:
        write_json_report(json_path, "convergence", report, cfg)
    print(format_convergence(report))
    if report.passed:
        print(ConsoleFormatter.success("Convergence criteria met"))
        return EXIT_PASS
    print(ConsoleFormatter.error("Convergence criteria not met"))
    return EXIT_FAIL


def cmd_lowerbound(args) -> int:
    cfg = _load_config(args.config)
    report = ExperimentRunner(cfg).run_lower_bound()
    csv_path, json_path = output_paths(cfg)
    write_lower_bound_csv(csv_path, report)
    if cfg.output.write_json:
        write_json_report(json_path, "lower_bound", report, cfg)
    print(format_lower_bound(report))
    if report.passed is None:
        print(ConsoleFormatter.warning("Pass criteria not applicable for this schedule"))
        return EXIT_PASS
    if report.passed:
        print(ConsoleFormatter.success("Lower-bound criteria met"))
        return EXIT_PASS
    print(ConsoleFormatter.error("Lower-bound criteria not met"))
    return EXIT_FAIL


def cmd_oracle(args) -> int:
    if args.freeze_goldens:
        recorded = freeze_goldens(args.freeze_goldens, refresh=args.refresh)
        for name, estimate in recorded.items():
            print(f"{name}: {estimate.estimate:.15g} +- {estimate.standard_error:.3e}   ({estimate.command})")
        print(ConsoleFormatter.success(f"{len(recorded)} golden value(s) recorded in {args.freeze_goldens}"))
        return EXIT_PASS

    cfg = _load_config(args.config)
    ctx = build_context(cfg)
    K = ctx.kernel
    if args.unnormalized:
        K = make_bump_kernel(cfg.kernel.dim, cfg.kernel.anisotropy, normalize=False)
    nu = _direction(args.nu, K.dim)
    t = args.t if args.t is not None else 0.5
    n, seed = args.samples, args.seed

    if args.quantity == "halfspace":
        estimate, quadrature = oracles.mc_halfspace_oracle(K, nu, t, n, seed), halfspace_mass(K, nu, t)
    elif args.quantity == "theta":
        estimate, quadrature = oracles.mc_theta_oracle(ctx, nu, n, seed), theta(ctx, nu)
    elif args.quantity == "slice":
        estimate, quadrature = oracles.mc_slice_oracle(K, nu, t, n, seed), slice_integral(K, nu, t)
    elif args.quantity == "moment":
        estimate, quadrature = oracles.mc_moment_oracle(K, nu, n, seed), absolute_moment_along(K, nu)
    elif args.quantity == "mass":
        estimate, quadrature = oracles.mc_mass_oracle(K, n, seed), kernel_total_mass(K, Config.REFERENCE_MASS_ORDER)
    else:
        estimate, quadrature = oracles.radial_moment_oracle(K), first_radial_moment(K)

    print(f"{estimate.quantity}: oracle = {estimate.estimate:.15g} +- {estimate.standard_error:.3e} "
          f"(n = {estimate.samples}, seed = {estimate.seed})")
    print(f"{estimate.quantity}: quadrature = {quadrature:.15g}")
    print(f"command: {estimate.command}")
    sigmas = abs(quadrature - estimate.estimate) / estimate.standard_error if estimate.standard_error > 0 else 0.0
    if estimate.agrees_with(quadrature):
        print(ConsoleFormatter.success(f"Agreement within {Config.ORACLE_SIGMA:g} SE ({sigmas:.2f} SE)"))
        return EXIT_PASS
    print(ConsoleFormatter.error(f"Disagreement: {sigmas:.2f} SE"))
    return EXIT_FAIL


def cmd_selfcheck(args) -> int:
    summary = selfcheck(inject_fault=args.inject_fault, trials=args.trials, seed=args.seed)
    print(format_selfcheck(summary))
    if summary.passed:
        print(ConsoleFormatter.success("All checks passed"))
        return EXIT_PASS
    print(ConsoleFormatter.error(f"{len(summary.failures())} check(s) failed"))
    return EXIT_FAIL


def _vec(v: np.ndarray) -> str:
    return "(" + ", ".join(f"{x:.6g}" for x in v) + ")"


# ----------------------------
# Parser
# ----------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perimeter-lab",
        description="Nonlocal perimeter functionals F_eps, their anisotropic limit F and verification tools.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="Log to the console as well as the log file.")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    def with_config(p, required=False):
        p.add_argument("--config", required=required, help="Experiment file (.cfg).")
        return p

    p = with_config(sub.add_parser("theta", help="Surface density theta(nu)."))
    p.add_argument("--nu", help="Direction, comma-separated (normalized). Default e_N.")
    p.add_argument("--t", type=float, help="Also print the half-space mass at this offset.")
    p.add_argument("--table", type=int, default=0, help="Print half-space masses at this many offsets.")
    p.set_defaults(func=cmd_theta)

    p = with_config(sub.add_parser("feps", help="Evaluate F_eps(E) once."))
    p.add_argument("--epsilon", type=float, help="Interaction scale (default: schedule epsilon0).")
    p.set_defaults(func=cmd_feps)

    p = with_config(sub.add_parser("limit", help="Evaluate the limit F(E)."))
    p.set_defaults(func=cmd_limit)

    p = with_config(sub.add_parser("converge", help="Epsilon sweep against F(E)."), required=True)
    p.set_defaults(func=cmd_converge)

    p = with_config(sub.add_parser("lowerbound", help="Lower-bound study on perturbed graphs."), required=True)
    p.set_defaults(func=cmd_lowerbound)

    p = with_config(sub.add_parser("oracle", help="Monte Carlo oracle vs quadrature."))
    p.add_argument("--quantity", choices=ORACLE_QUANTITIES, default="halfspace")
    p.add_argument("--nu", help="Direction, comma-separated (normalized). Default e_N.")
    p.add_argument("--t", type=float, help="Offset (halfspace) or slice position (slice). Default 0.5.")
    p.add_argument("--samples", type=int, default=Config.ORACLE_SAMPLES)
    p.add_argument("--unnormalized", action="store_true", help="Use the raw bump (c = 1), e.g. for its mass m0.")
    p.add_argument("--freeze-goldens", metavar="PATH", help="Record every unfrozen golden value in PATH.")
    p.add_argument("--refresh", action="store_true", help="With --freeze-goldens, re-record frozen values too.")
    p.add_argument("--seed", type=int, default=Config.ORACLE_SEED)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("selfcheck", help="Run the invariant suite.")
    p.add_argument("--inject-fault", choices=FAULTS, help="Corrupt one component to prove the suite catches it.")
    p.add_argument("--trials", type=int, default=Config.CONVEXITY_TRIALS, help="Convexity probe trials per profile.")
    p.add_argument("--seed", type=int, default=Config.ORACLE_SEED)
    p.set_defaults(func=cmd_selfcheck)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_PASS

    if args.verbose:
        setup_logging(Config.LOG_FILE, console_level=logging.INFO, console=True)

    for warning in Config.validate_config():
        log_step("CLI", warning, level="warning")

    log_step("CLI", f"Command '{args.command}'")
    try:
        return args.func(args)
    except (ConfigError, ResolutionError) as e:
        log_error("CLI", args.command, e)
        print(ConsoleFormatter.error(str(e)), file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as e:
        log_error("CLI", args.command, e)
        print(ConsoleFormatter.error(str(e)), file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
