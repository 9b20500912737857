"""
Fixed-seed Monte Carlo oracles for kernel and density quantities.

Every oracle draws from its own ``default_rng`` built from the given seed,
in fixed batches, so results never depend on call order or threading.
"""

from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from config import Config
from utils.data_structures import Kernel, OracleEstimate
from utils.logging_utils import log_record, log_step
from utils.quadrature import gauss_legendre_interval, unit_ball_volume, unit_sphere_area
from numerics.density import DensityContext
from numerics.kernels import check_unit, householder_frame
from lab.experiments import richardson_extrapolate


def _command(quantity: str, **options) -> str:
    parts = [f"python main.py oracle --quantity {quantity}"]
    for key, value in options.items():
        if value is None:
            continue
        if isinstance(value, (list, tuple, np.ndarray)):
            value = ",".join(f"{float(x):.17g}" for x in value)
        parts.append(f"--{key} {value}")
    return " ".join(parts)


def _check_samples(n: int):
    if n < Config.ORACLE_MIN_SAMPLES:
        raise ValueError(f"Oracle needs at least {Config.ORACLE_MIN_SAMPLES} samples, got {n}")


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed))


def ball_samples(rng: np.random.Generator, dim: int, n: int,
                 batch: int = Config.ORACLE_BATCH) -> Iterator[np.ndarray]:
    """Uniform points in the open unit ball by rejection from the cube, in batches."""
    remaining = n
    while remaining > 0:
        cube = rng.uniform(-1.0, 1.0, size=(batch, dim))
        accepted = cube[np.einsum("ij,ij->i", cube, cube) < 1.0][:remaining]
        remaining -= accepted.shape[0]
        yield accepted


class _Moments:
    """Running sum and sum of squares of integrand samples."""

    def __init__(self, width: int = 1):
        self.count = 0
        self.total = np.zeros(width)
        self.squares = np.zeros(width)

    def add(self, values: np.ndarray):
        values = values.reshape(values.shape[0], -1)
        self.count += values.shape[0]
        self.total += values.sum(axis=0)
        self.squares += (values * values).sum(axis=0)

    def add_sums(self, count: int, total: np.ndarray, squares: np.ndarray):
        self.count += count
        self.total += total
        self.squares += squares

    def mean(self) -> np.ndarray:
        return self.total / self.count

    def standard_error(self) -> np.ndarray:
        n = self.count
        variance = np.clip((self.squares - self.total * self.total / n) / (n - 1), 0.0, None)
        return np.sqrt(variance / n)


def _ball_integral(integrand: Callable[[np.ndarray], np.ndarray], dim: int, n: int, seed: int,
                   batch: int = Config.ORACLE_BATCH):
    """|B| * mean(integrand) over uniform ball samples with its standard error."""
    moments = _Moments()
    for points in ball_samples(_rng(seed), dim, n, batch):
        moments.add(integrand(points))
    volume = unit_ball_volume(dim)
    return float(volume * moments.mean()[0]), float(volume * moments.standard_error()[0])


def _emit(quantity: str, estimate: float, se: float, n: int, seed: int, command: str) -> OracleEstimate:
    result = OracleEstimate(quantity=quantity, estimate=estimate, standard_error=se,
                            samples=n, seed=seed, command=command)
    log_record("ORACLE", quantity, result.model_dump())
    return result


def mc_halfspace_oracle(K: Kernel, nu, t: float, n: int = Config.ORACLE_SAMPLES,
                        seed: int = Config.ORACLE_SEED) -> OracleEstimate:
    """Kernel mass of {z . nu >= t} by uniform sampling of the unit ball."""
    _check_samples(n)
    nu = check_unit(nu, K.dim)
    estimate, se = _ball_integral(lambda z: K.evaluate(z) * (z @ nu >= t), K.dim, n, seed)
    return _emit("halfspace", estimate, se, n, seed, _command("halfspace", nu=nu, t=t, samples=n, seed=seed))


def mc_mass_oracle(K: Kernel, n: int = Config.ORACLE_SAMPLES,
                   seed: int = Config.ORACLE_SEED) -> OracleEstimate:
    """Total mass of K."""
    _check_samples(n)
    estimate, se = _ball_integral(K.evaluate, K.dim, n, seed)
    return _emit("mass", estimate, se, n, seed, _command("mass", samples=n, seed=seed))


def mc_moment_oracle(K: Kernel, nu, n: int = Config.ORACLE_SAMPLES,
                     seed: int = Config.ORACLE_SEED) -> OracleEstimate:
    """Integral of K(z) |z . nu|."""
    _check_samples(n)
    nu = check_unit(nu, K.dim)
    estimate, se = _ball_integral(lambda z: K.evaluate(z) * np.abs(z @ nu), K.dim, n, seed)
    return _emit("moment", estimate, se, n, seed, _command("moment", nu=nu, samples=n, seed=seed))


def mc_slice_oracle(K: Kernel, nu, s: float, n: int = Config.ORACLE_SAMPLES,
                    seed: int = Config.ORACLE_SEED,
                    thicknesses: Sequence[float] = Config.SLAB_THICKNESSES) -> OracleEstimate:
    """
    Slice integral as thin-slab mass / thickness, extrapolated in the thickness.

    Points are uniform in the slab {|z . nu - s| <= delta/2} intersected with
    the rotated cube; all thicknesses reuse the same uniform draws, so the
    extrapolated estimator is a fixed linear combination per sample and its
    standard error is exact.
    """
    _check_samples(n)
    nu = check_unit(nu, K.dim)
    dim = K.dim
    Q = householder_frame(nu)
    deltas = np.asarray(thicknesses, dtype=float)
    ratios = deltas[:-1] / deltas[1:]
    if not np.allclose(ratios, ratios[0]):
        raise ValueError(f"Slab thicknesses must shrink geometrically, got {deltas.tolist()}")
    coefficients = richardson_extrapolate(list(np.eye(len(deltas))), 2, float(ratios[0]))

    moments = _Moments()
    rng = _rng(seed)
    remaining = n
    while remaining > 0:
        count = min(Config.ORACLE_BATCH, remaining)
        plane = rng.uniform(-1.0, 1.0, size=(count, dim - 1))
        jitter = rng.uniform(-0.5, 0.5, size=count)
        remaining -= count
        # mass / delta = 2^(N-1) * mean of G over the slab, for each delta
        samples = np.empty((count, len(deltas)))
        for k, delta in enumerate(deltas):
            y = np.concatenate([plane, (s + delta * jitter)[:, None]], axis=1)
            samples[:, k] = K.evaluate(y @ Q.T)
        moments.add(samples @ coefficients)

    area = 2.0 ** (dim - 1)
    estimate = float(area * moments.mean()[0])
    se = float(area * moments.standard_error()[0])
    return _emit("slice", estimate, se, n, seed, _command("slice", nu=nu, t=s, samples=n, seed=seed))


def mc_theta_oracle(ctx: DensityContext, nu, n: int = Config.ORACLE_SAMPLES,
                    seed: int = Config.ORACLE_SEED, strata: int = Config.ORACLE_STRATA) -> OracleEstimate:
    """
    theta(nu) from stratified offsets: one half-space estimate per stratum
    midpoint on common ball samples, f applied per stratum.

    The standard error adds per-stratum errors scaled by the local slope of f
    (a triangle bound, valid under any correlation) plus the size of the
    midpoint-rule correction.
    """
    _check_samples(n)
    K = ctx.kernel
    nu = check_unit(nu, K.dim)
    midpoints = (np.arange(strata) + 0.5) / strata

    moments = _Moments(strata)
    for z in ball_samples(_rng(seed), K.dim, n):
        projections = z @ nu
        order = np.argsort(projections, kind="stable")
        projections = projections[order]
        g = K.evaluate(z[order])
        # suffix sums over {z . nu >= t_j} for every stratum midpoint
        cum = np.concatenate([[0.0], np.cumsum(g)])
        cum_sq = np.concatenate([[0.0], np.cumsum(g * g)])
        start = np.searchsorted(projections, midpoints, side="left")
        moments.add_sums(g.shape[0], cum[-1] - cum[start], cum_sq[-1] - cum_sq[start])

    volume = unit_ball_volume(K.dim)
    masses = np.clip(volume * moments.mean(), 0.0, 1.0)
    errors = volume * moments.standard_error()

    values = ctx.profile(masses)
    step = 1e-6
    slopes = np.abs(ctx.profile(np.clip(masses + step, 0.0, 1.0)) - ctx.profile(np.clip(masses - step, 0.0, 1.0))) / (2 * step)

    midpoint_sum = float(np.mean(values))
    correction = 0.0
    if strata >= 4:
        correction = ((values[-1] - values[-2]) - (values[1] - values[0])) / (24.0 * strata)
    estimate = midpoint_sum + correction
    se = float(np.mean(slopes * errors)) + abs(correction)

    log_step("ORACLE", f"theta oracle: {strata} strata, correction {correction:.3e}", level="debug")
    return _emit("theta", estimate, se, n, seed, _command("theta", nu=nu, samples=n, seed=seed))


def radial_moment_oracle(K: Kernel, order: int = 2048, seed: Optional[int] = None) -> OracleEstimate:
    """Integral of K(z)|z| for a radial kernel as H^{N-1}(S^{N-1}) * int g(r) r^N dr.

    Deterministic; the reported error is the change from halving the order,
    floored at Config.RADIAL_ORACLE_FLOOR relative.
    """
    g = K.radial_profile
    if g is None:
        raise ValueError("radial_moment_oracle requires a radially symmetric kernel")

    def integral(m: int) -> float:
        r, w = gauss_legendre_interval(m, 0.0, 1.0)
        return unit_sphere_area(K.dim) * float(np.dot(w, g(r) * r ** K.dim))

    fine, coarse = integral(order), integral(order // 2)
    # never below the accuracy of the tensor rules this value is checked against
    error = max(abs(fine - coarse), Config.RADIAL_ORACLE_FLOOR * abs(fine))
    return _emit("radial_moment", fine, error, order, seed or 0,
                 _command("radial_moment", samples=order))
