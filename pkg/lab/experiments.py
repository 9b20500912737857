"""
Experiment runner: epsilon sweeps of F_eps against the limit F(E), and the
graph lower-bound study on perturbed graph sequences.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from utils.data_structures import (
    ConvergenceReport,
    ConvergenceRow,
    Domain,
    ExperimentConfig,
    Kernel,
    LowerBoundReport,
    LowerBoundRow,
    NonlocalEvaluation,
    PerturbationSpec,
)
from utils.logging_utils import Timer, log_error, log_performance, log_record, log_step
from numerics.density import DensityContext, integrate_density
from numerics.kernels import make_bump_kernel
from numerics.nonlocal_energy import evaluate_functional, required_resolution
from numerics.profiles import builtin_profile
from numerics.shapes import Graph, Shape, boundary_quadrature, cosine_perturbation, shape_from_spec

NO_LIMIT_FLAG = "no-limit schedule"
RESOLUTION_FLAG = "resolution-limited"


# ---------------------------------------------------------------------------
# Extrapolation and rate fitting
# ---------------------------------------------------------------------------

def richardson_extrapolate(base_values: Sequence, p: float, r: float = 2.0):
    """
    Richardson extrapolation of approximations whose step shrinks by ``r``
    between entries and whose leading error term has order ``p``.

    Works elementwise on arrays, so it can also propagate coefficient vectors.
    """
    n = len(base_values)
    if n < 2:
        raise ValueError("richardson_extrapolate requires at least two base values.")

    vals = [np.asarray(v, dtype=float) for v in base_values]
    for j in range(1, n):
        factor = r ** (p * j)
        for k in range(n - 1, j - 1, -1):
            vals[k] = (factor * vals[k] - vals[k - 1]) / (factor - 1.0)

    result = vals[-1]
    return float(result) if result.ndim == 0 else result


def observed_order(values: Sequence[float], r: float) -> Optional[float]:
    """Order p from the last three values, (v1 - v0)/(v2 - v1) = r^p."""
    if len(values) < 3:
        return None
    d1 = values[-2] - values[-3]
    d2 = values[-1] - values[-2]
    if d1 == 0.0 or d2 == 0.0 or (d1 > 0) != (d2 > 0):
        return None
    return math.log(abs(d1 / d2)) / math.log(r)


def fit_rate(epsilons: Sequence[float], errors: Sequence[float],
             points: int = Config.RATE_FIT_POINTS) -> Tuple[Optional[float], str]:
    """Least-squares slope of log|error| against log(eps) over the last ``points`` rows."""
    if len(errors) < points:
        return None, "insufficient data"
    eps = np.asarray(epsilons[-points:], dtype=float)
    err = np.asarray(errors[-points:], dtype=float)
    if np.any(err <= 0.0):
        return None, "zero error in fit window"
    slope = np.polyfit(np.log(eps), np.log(err), 1)[0]
    return float(slope), f"least squares over last {points} points"


# ---------------------------------------------------------------------------
# Runner
# ---------------------------------------------------------------------------

def build_kernel(cfg: ExperimentConfig) -> Kernel:
    return make_bump_kernel(cfg.kernel.dim, cfg.kernel.anisotropy)


def build_context(cfg: ExperimentConfig, kernel: Optional[Kernel] = None) -> DensityContext:
    return DensityContext(
        kernel=kernel or build_kernel(cfg),
        profile=builtin_profile(cfg.profile.name, cfg.profile.parameter),
        theta_order=cfg.profile.theta_order,
        slice_order=cfg.kernel.slice_order,
        halfspace_order=cfg.kernel.halfspace_order,
    )


class ExperimentRunner:
    """Runs the epsilon-sweep and lower-bound studies for one experiment config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.ctx = build_context(cfg)
        self.kernel = self.ctx.kernel
        self.profile = self.ctx.profile
        self.base_domain = cfg.domain.to_domain()
        self.shape = shape_from_spec(cfg.shape, cfg.kernel.dim)
        log_step("CONVERGENCE", f"Runner initialized: {cfg.shape.kind} / {self.profile.name} / dim {self.kernel.dim}")

    # -- planning ----------------------------------------------------------

    def domain_for(self, epsilon: float) -> Domain:
        """Grid for one epsilon under the configured resolution policy."""
        schedule = self.cfg.schedule
        if schedule.policy == "fixed":
            return self.base_domain
        resolution = max(8, required_resolution(self.base_domain, epsilon, schedule.points_per_epsilon))
        return self.base_domain.with_resolution(resolution)

    def reference_value(self, shape: Shape) -> Tuple[float, List[str]]:
        bq = boundary_quadrature(shape, self.base_domain, self.cfg.shape.boundary_order)
        return integrate_density(self.ctx, bq), list(bq.flags)

    def _evaluate(self, task: Tuple[Shape, float, Domain]) -> Tuple[NonlocalEvaluation, float]:
        shape, epsilon, dom = task
        with Timer(f"F_eps eps={epsilon:.6g}", quiet=True) as timer:
            evaluation = evaluate_functional(
                shape, epsilon, self.profile, self.kernel, dom,
                supersample=self.cfg.schedule.supersample,
                method=self.cfg.schedule.method,
            )
        log_performance("NONLOCAL", "evaluate_functional", timer.get_elapsed(),
                        additional_info={"epsilon": epsilon, "resolution": dom.resolution})
        return evaluation, timer.get_elapsed()

    def _evaluate_all(self, tasks: List[Tuple[Shape, float, Domain]]) -> List[Tuple[NonlocalEvaluation, float]]:
        if Config.ENABLE_PARALLEL_PROCESSING and len(tasks) > 1:
            with ThreadPoolExecutor(max_workers=Config.MAX_WORKERS) as executor:
                return list(executor.map(self._evaluate, tasks))
        return [self._evaluate(task) for task in tasks]

    # -- studies -----------------------------------------------------------

    def run_convergence(self) -> ConvergenceReport:
        """F_eps at each scheduled epsilon against the limit F(E)."""
        schedule = self.cfg.schedule
        epsilons = schedule.epsilons()
        log_step("CONVERGENCE", f"Sweep over {len(epsilons)} epsilon values from {epsilons[0]:.6g}")

        reference, flags = self.reference_value(self.shape)
        log_step("CONVERGENCE", f"Reference F(E) = {reference:.12g}")

        tasks = [(self.shape, eps, self.domain_for(eps)) for eps in epsilons]
        doubled = []
        if schedule.resolution_check:
            doubled = [(shape, eps, dom.with_resolution(2 * dom.resolution)) for shape, eps, dom in tasks]
        try:
            results = self._evaluate_all(tasks + doubled)
        except Exception as e:
            log_error("CONVERGENCE", "run_convergence", e, {"policy": schedule.policy})
            raise
        checks = results[len(tasks):] or [None] * len(tasks)

        scale = abs(reference) if reference != 0.0 else 1.0
        rows = []
        previous = None
        for (evaluation, elapsed), check in zip(results[:len(tasks)], checks):
            error = abs(evaluation.value - reference)
            row = ConvergenceRow(epsilon=evaluation.epsilon, resolution=evaluation.resolution,
                                 value=evaluation.value, abs_error=error, rel_error=error / scale,
                                 wall_time=elapsed)
            if check is not None:
                row.doubled_value = check[0].value
                row.resolution_delta = abs(check[0].value - evaluation.value)
            if previous is not None:
                row.epsilon_increment = abs(evaluation.value - previous)
            previous = evaluation.value
            log_record("CONVERGENCE", "row", row.model_dump())
            rows.append(row)

        resolution_limited = any(
            row.resolution_delta is not None and row.epsilon_increment is not None
            and row.resolution_delta >= row.epsilon_increment
            for row in rows
        )
        if resolution_limited:
            flags.append(RESOLUTION_FLAG)
            log_step("CONVERGENCE", "Resolution doubling moves F_eps as much as the epsilon step", level="warning")

        errors = [row.abs_error for row in rows]
        values = [row.value for row in rows]
        rate, note = fit_rate(epsilons, errors)

        ratio = 1.0 / schedule.ratio
        order = observed_order(values, ratio)
        extrapolated = extrapolated_rel = None
        if len(values) >= 2:
            p = order if order is not None and 0.5 <= order <= 3.0 else 1.0
            extrapolated = richardson_extrapolate(values[-2:], p, ratio)
            extrapolated_rel = abs(extrapolated - reference) / scale
        else:
            flags.append("no extrapolation")

        final_rel = rows[-1].rel_error
        monotone = all(b < a for a, b in zip(errors, errors[1:]))
        passed = final_rel <= schedule.tolerance and (extrapolated_rel is None or extrapolated_rel <= schedule.tolerance)

        report = ConvergenceReport(
            rows=rows, reference=reference, rate=rate, rate_note=note, observed_order=order,
            extrapolated=extrapolated, extrapolated_rel_error=extrapolated_rel,
            final_rel_error=final_rel, monotone=monotone,
            resolution_limited=resolution_limited, tolerance=schedule.tolerance,
            passed=passed, flags=flags,
        )
        log_step("CONVERGENCE", f"Done: final rel error {final_rel:.3e}, passed={passed}",
                 level="info" if passed else "warning")
        return report

    def run_lower_bound(self, perturbation: Optional[PerturbationSpec] = None) -> LowerBoundReport:
        """F_{eps_h}(E_h) against F(E) for graphs u_h = u + (amplitude/h) phi."""
        spec = perturbation or self.cfg.perturbation
        if not isinstance(self.shape, Graph):
            raise ValueError(f"Lower-bound study needs a graph shape, got '{self.cfg.shape.kind}'")

        reference, flags = self.reference_value(self.shape)
        log_step("LOWER_BOUND", f"Reference F(E) = {reference:.12g}; h values {spec.h_values}")

        phi = cosine_perturbation(spec.frequency) if spec.kind == "cosine" else None
        tasks, amplitudes = [], []
        for h in spec.h_values:
            amplitude = spec.amplitude / h if phi is not None else 0.0
            epsilon = spec.fixed_epsilon if spec.fixed_epsilon is not None else spec.epsilon_scale / h
            shape = self.shape.perturbed(amplitude, phi) if amplitude != 0.0 else self.shape
            tasks.append((shape, epsilon, self.domain_for(epsilon)))
            amplitudes.append(amplitude)

        try:
            results = self._evaluate_all(tasks)
        except Exception as e:
            log_error("LOWER_BOUND", "run_lower_bound", e, {"h_values": spec.h_values})
            raise

        rows = []
        for h, amplitude, (evaluation, elapsed) in zip(spec.h_values, amplitudes, results):
            row = LowerBoundRow(h=h, amplitude=amplitude, epsilon=evaluation.epsilon,
                                resolution=evaluation.resolution, value=evaluation.value,
                                reference=reference, deficit=reference - evaluation.value,
                                wall_time=elapsed)
            log_record("LOWER_BOUND", "row", row.model_dump())
            rows.append(row)

        epsilons = [row.epsilon for row in rows]
        trend = extrapolated = passed = None
        if len(set(epsilons)) < 2:
            flags.append(NO_LIMIT_FLAG)
            log_step("LOWER_BOUND", "Epsilon does not shrink with h; pass criteria not applicable", level="warning")
        else:
            trend, extrapolated = (float(c) for c in np.polyfit(epsilons, [row.deficit for row in rows], 1))
            # liminf bound: the tail of the sequence may not exceed the allowance
            allowance = spec.tolerance * abs(reference)
            tail = rows[len(rows) // 2:]
            passed = max(row.deficit for row in tail) <= allowance

        report = LowerBoundReport(rows=rows, reference=reference, deficit_trend=trend,
                                  extrapolated_deficit=extrapolated, tolerance=spec.tolerance,
                                  passed=passed, flags=flags)
        log_step("LOWER_BOUND", f"Done: final deficit {rows[-1].deficit:.3e}, passed={passed}")
        return report


def run_convergence(cfg: ExperimentConfig) -> ConvergenceReport:
    return ExperimentRunner(cfg).run_convergence()


def run_lower_bound(cfg: ExperimentConfig, perturbation: Optional[PerturbationSpec] = None) -> LowerBoundReport:
    return ExperimentRunner(cfg).run_lower_bound(perturbation)
