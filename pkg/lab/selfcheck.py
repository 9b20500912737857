"""
Release gate: runs the invariant suite and collects a pass/fail table.
"""

from dataclasses import replace
from typing import Callable, List, Optional, Tuple

import numpy as np

from config import Config
from utils.data_structures import CheckResult, Domain, IndicatorField, SelfCheckSummary, Stencil
from utils.logging_utils import Timer, log_error, log_step
from numerics.density import (
    DensityContext,
    closed_form_c_NG,
    convexity_probe,
    theta,
    theta_tilde_direct,
    theta_tilde_many,
)
from numerics.kernels import (
    absolute_moment_along,
    halfspace_mass,
    halfspace_masses,
    kernel_total_mass,
    make_bump_kernel,
)
from numerics.nonlocal_energy import build_stencil, convolve_direct, convolve_fft, eval_F_eps
from numerics.profiles import BUILTIN_PROFILES, builtin_profile, check_profile
from numerics.shapes import Ball, Box

FAULTS = ("stencil-rescale",)

CheckFn = Callable[[], Tuple[bool, str]]


def _random_units(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    v = rng.standard_normal((count, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


class SelfCheck:
    """Kernel laws, path equivalence, closed-form cross-checks and convexity probes."""

    def __init__(self, inject_fault: Optional[str] = None, trials: int = Config.CONVEXITY_TRIALS,
                 seed: int = Config.ORACLE_SEED):
        if inject_fault is not None and inject_fault not in FAULTS:
            raise ValueError(f"Unknown fault '{inject_fault}'. Available: {', '.join(FAULTS)}")
        self.inject_fault = inject_fault
        self.trials = trials
        self.seed = seed
        self.radial = make_bump_kernel(2)
        self.anisotropic = make_bump_kernel(2, [[1.5, 0.0], [0.0, 1.0]])
        log_step("SELFCHECK", f"Self-check initialized (fault={inject_fault}, trials={trials})")

    def checks(self) -> List[Tuple[str, CheckFn]]:
        return [
            ("kernel mass", self.check_kernel_mass),
            ("kernel evenness", self.check_evenness),
            ("half-space laws", self.check_halfspace_laws),
            ("profiles", self.check_profiles),
            ("closed forms", self.check_closed_forms),
            ("isotropy", self.check_isotropy),
            ("zero profile", self.check_zero_profile),
            ("homogeneity", self.check_homogeneity),
            ("convexity", self.check_convexity),
            ("path equivalence", self.check_path_equivalence),
            ("trivial F_eps", self.check_trivial_functional),
        ]

    def run(self) -> SelfCheckSummary:
        results = []
        for name, check in self.checks():
            with Timer(name, quiet=True) as timer:
                try:
                    passed, detail = check()
                except Exception as e:
                    log_error("SELFCHECK", name, e)
                    passed, detail = False, f"raised {type(e).__name__}: {e}"
            results.append(CheckResult(name=name, passed=passed, detail=detail, elapsed=timer.get_elapsed()))
            log_step("SELFCHECK", f"{name}: {'PASS' if passed else 'FAIL'} ({detail})",
                     level="info" if passed else "error")
        return SelfCheckSummary(results=results)

    # -- kernels -----------------------------------------------------------

    def check_kernel_mass(self) -> Tuple[bool, str]:
        worst = max(abs(kernel_total_mass(K, Config.REFERENCE_MASS_ORDER) - 1.0)
                    for K in (self.radial, self.anisotropic))
        return worst < 1e-8, f"max |mass - 1| = {worst:.2e}"

    def check_evenness(self) -> Tuple[bool, str]:
        rng = np.random.default_rng(self.seed)
        z = rng.uniform(-1.0, 1.0, size=(10_000, 2))
        ok = all(np.array_equal(K(z), K(-z)) for K in (self.radial, self.anisotropic))
        return ok, "exact on 1e4 probes"

    def check_halfspace_laws(self) -> Tuple[bool, str]:
        rng = np.random.default_rng(self.seed)
        worst_half, rising = 0.0, 0
        ts = np.linspace(0.0, 1.0, 50)
        for K in (self.radial, self.anisotropic):
            for nu in _random_units(rng, 3, 2):
                masses = halfspace_masses(K, nu, ts)
                worst_half = max(worst_half, abs(masses[0] - 0.5))
                rising += int(np.count_nonzero(np.diff(masses) > 1e-12))
                if halfspace_mass(K, nu, 1.0) != 0.0:
                    return False, "mass at t=1 is not 0"
        passed = worst_half <= 1e-8 and rising == 0
        return passed, f"max |m(0) - 1/2| = {worst_half:.2e}, increases = {rising}"

    def check_profiles(self) -> Tuple[bool, str]:
        bad = []
        for name in BUILTIN_PROFILES:
            profile = builtin_profile(name, 2.0 if name == "power" else None)
            if check_profile(profile, 100):
                bad.append(name)
        return not bad, "all builtins clean" if not bad else f"violations in {bad}"

    # -- density -----------------------------------------------------------

    def check_closed_forms(self) -> Tuple[bool, str]:
        ctx = DensityContext(self.radial, builtin_profile("identity"))
        nu = np.array([0.6, 0.8])
        value = theta(ctx, nu)
        half_moment = 0.5 * absolute_moment_along(self.radial, nu)
        c_ng = closed_form_c_NG(self.radial)
        spread = max(abs(value - half_moment), abs(value - c_ng), abs(half_moment - c_ng))

        aniso = DensityContext(self.anisotropic, builtin_profile("identity"))
        e1 = np.array([1.0, 0.0])
        aniso_gap = abs(theta(aniso, e1) - 0.5 * absolute_moment_along(self.anisotropic, e1))
        worst = max(spread, aniso_gap)
        return worst < 1e-6, f"theta / moment / c_NG spread {worst:.2e}"

    def check_isotropy(self) -> Tuple[bool, str]:
        ctx = DensityContext(self.radial, builtin_profile("power", 2.0))
        rng = np.random.default_rng(self.seed)
        base = theta(ctx, np.array([0.0, 1.0]))
        worst = max(abs(theta(ctx, nu) - base) for nu in _random_units(rng, 50, 2))
        return worst < 1e-8, f"max deviation {worst:.2e} over 50 directions"

    def check_zero_profile(self) -> Tuple[bool, str]:
        ctx = DensityContext(self.anisotropic, builtin_profile("zero"))
        value = theta(ctx, np.array([1.0, 0.0]))
        return value == 0.0, f"theta = {value!r}"

    def check_homogeneity(self) -> Tuple[bool, str]:
        ctx = DensityContext(self.anisotropic, builtin_profile("expm1"))
        rng = np.random.default_rng(self.seed)
        vs = rng.uniform(-1.0, 1.0, size=(1000, 2))
        base = theta_tilde_many(ctx, vs)
        worst = 0.0
        for lam in (2.0, 5.0):
            worst = max(worst, float(np.max(np.abs(theta_tilde_many(ctx, lam * vs) - lam * base))))
        # the shared radial integral against the per-direction slice path
        for v in vs[:5]:
            worst = max(worst, abs(theta_tilde_direct(ctx, v) - float(theta_tilde_many(ctx, v[None, :])[0])))
        return worst <= 1e-10, f"max |theta~(lv) - l theta~(v)| = {worst:.2e} over 1000 vectors"

    def check_convexity(self) -> Tuple[bool, str]:
        counts = {}
        for name, parameter in (("identity", None), ("power", 2.0), ("expm1", None)):
            ctx = DensityContext(self.anisotropic, builtin_profile(name, parameter))
            counts[name] = len(convexity_probe(ctx, self.trials, self.seed))
        return not any(counts.values()), f"violations {counts} over {self.trials} trials"

    # -- nonlocal ----------------------------------------------------------

    def _fft_stencil(self, st: Stencil, rng: np.random.Generator) -> Stencil:
        if self.inject_fault != "stencil-rescale":
            return st
        # Skip the unit-mass rescale and jitter the weights
        corrupted = st.weights * st.raw_mass * (1.0 + 1e-6 * rng.standard_normal(st.weights.shape))
        return replace(st, weights=corrupted)

    def check_path_equivalence(self) -> Tuple[bool, str]:
        dom = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=64)
        st = build_stencil(self.radial, 8 * dom.isotropic_spacing, dom)
        rng = np.random.default_rng(self.seed)
        fft_stencil = self._fft_stencil(st, rng)
        worst = 0.0
        for _ in range(10):
            field = IndicatorField(domain=dom, values=rng.integers(0, 2, size=dom.shape).astype(float))
            worst = max(worst, float(np.max(np.abs(convolve_fft(field, fft_stencil) - convolve_direct(field, st)))))
        return worst <= Config.PATH_EQUIVALENCE_TOL, f"max |fft - direct| = {worst:.2e}"

    def check_trivial_functional(self) -> Tuple[bool, str]:
        dom = Domain(lower=(0.0, 0.0), upper=(1.0, 1.0), resolution=64)
        f = builtin_profile("identity")
        eps = 0.125
        empty = eval_F_eps(Ball(center=(3.0, 3.0), radius=0.5), eps, f, self.radial, dom)
        whole = eval_F_eps(Box(lower=dom.lower, upper=dom.upper), eps, f, self.radial, dom)
        return empty == 0.0 and whole == 0.0, f"F_eps(empty) = {empty!r}, F_eps(Omega) = {whole!r}"


def selfcheck(inject_fault: Optional[str] = None, trials: int = Config.CONVEXITY_TRIALS,
              seed: int = Config.ORACLE_SEED) -> SelfCheckSummary:
    """Run every check and return the summary (never raises on a failed check)."""
    return SelfCheck(inject_fault=inject_fault, trials=trials, seed=seed).run()
