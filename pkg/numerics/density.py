"""
Surface density theta(nu), its one-homogeneous extension, the limit
functional F(E), closed forms for radial kernels and identity profiles,
and the convexity probe.
"""

import threading
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from config import Config
from utils.data_structures import BoundaryQuadrature, ConvexityViolation, Domain, Kernel, Profile
from utils.logging_utils import log_step
from utils.quadrature import gauss_legendre_interval, unit_ball_volume, unit_sphere_area
from numerics.kernels import (absolute_moment_along, check_unit, first_radial_moment, halfspace_masses,
                              make_bump_kernel, support_extent)
from numerics.shapes import Shape, boundary_quadrature


@dataclass
class DensityContext:
    """Kernel, profile and quadrature orders, plus a per-direction theta cache."""
    kernel: Kernel
    profile: Profile
    theta_order: int = Config.THETA_ORDER
    slice_order: int = Config.SLICE_ORDER
    halfspace_order: int = Config.HALFSPACE_ORDER
    _cache: Dict[Tuple[int, ...], float] = field(default_factory=dict, init=False, repr=False)
    _radial_integral: Optional[float] = field(default=None, init=False, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, init=False, repr=False)

    def __post_init__(self):
        for name in ("theta_order", "slice_order", "halfspace_order"):
            if getattr(self, name) < 8:
                raise ValueError(f"{name} must be >= 8, got {getattr(self, name)}")

    @property
    def dim(self) -> int:
        return self.kernel.dim

    def cache_size(self) -> int:
        with self._lock:
            return len(self._cache)


def _quantize(nu: np.ndarray) -> Tuple[Tuple[int, ...], np.ndarray]:
    key = np.rint(nu / Config.THETA_CACHE_QUANTUM).astype(np.int64)
    representative = key * Config.THETA_CACHE_QUANTUM
    return tuple(int(k) for k in key), representative / np.linalg.norm(representative)


def _profile_integral(ctx: DensityContext, direction: np.ndarray, length: float) -> float:
    """Integral over s in [0, length] of f(mass of {z . direction >= s / length})."""
    extent = support_extent(ctx.kernel, direction)
    s, w = gauss_legendre_interval(ctx.theta_order, 0.0, length * extent)
    masses = halfspace_masses(ctx.kernel, direction, np.clip(s / length, 0.0, 1.0),
                              ctx.slice_order, ctx.halfspace_order)
    value = float(np.dot(w, ctx.profile(np.clip(masses, 0.0, 1.0))))
    # Past the support extent every mass is 0
    if extent < 1.0:
        value += length * (1.0 - extent) * float(ctx.profile(0.0))
    return value


def _theta_uncached(ctx: DensityContext, nu: np.ndarray) -> float:
    return _profile_integral(ctx, nu, 1.0)


def theta(ctx: DensityContext, nu) -> float:
    """theta(nu) = integral over t in [0, 1] of f(halfspace_mass(K, nu, t))."""
    nu = check_unit(nu, ctx.dim)
    key, representative = _quantize(nu)
    with ctx._lock:
        cached = ctx._cache.get(key)
    if cached is not None:
        return cached

    # Evaluated at the quantized direction so the cache is a pure function of the key
    value = _theta_uncached(ctx, representative)
    with ctx._lock:
        return ctx._cache.setdefault(key, value)


def theta_tilde(ctx: DensityContext, v) -> float:
    """One-homogeneous extension |v| theta(v/|v|), zero at the origin."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    return norm * theta(ctx, v / norm)


def theta_tilde_direct(ctx: DensityContext, v) -> float:
    """Integral over s in [0, |v|] of f(mass of {z . v >= s}), without the substitution."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    # {z . v >= s} = {z . (v / |v|) >= s / |v|}
    return _profile_integral(ctx, v / norm, norm)


def _radial_profile_integral(ctx: DensityContext) -> float:
    """
    J = integral over s in [0, 1] of f(m(s)), m the half-space mass of the
    radial bump carrying the same total mass as ctx.kernel.

    G(z) = c G0(Az) gives mass({z . nu >= t}) = m(t / |A^-1 nu|), so every
    direction shares this one integral.
    """
    with ctx._lock:
        if ctx._radial_integral is not None:
            return ctx._radial_integral

    K = ctx.kernel
    radial = make_bump_kernel(K.dim)
    total = K.normalization / (float(np.linalg.det(K.matrix)) * radial.normalization)
    e_n = np.zeros(K.dim)
    e_n[-1] = 1.0
    s, w = gauss_legendre_interval(ctx.theta_order, 0.0, 1.0)
    masses = total * halfspace_masses(radial, e_n, s, ctx.slice_order, ctx.halfspace_order)
    value = float(np.dot(w, ctx.profile(np.clip(masses, 0.0, 1.0))))

    with ctx._lock:
        if ctx._radial_integral is None:
            ctx._radial_integral = value
        return ctx._radial_integral


def theta_tilde_many(ctx: DensityContext, vs) -> np.ndarray:
    """
    theta_tilde for every row of ``vs`` at once.

    theta_tilde(v) = |A^-1 v| J + (|v| - |A^-1 v|) f(0); the second term
    covers offsets past the support extent.
    """
    vs = np.asarray(vs, dtype=float)
    if vs.ndim != 2 or vs.shape[1] != ctx.dim:
        raise ValueError(f"Vectors must have shape (n, {ctx.dim}), got {vs.shape}")
    norms = np.linalg.norm(vs, axis=1)
    extents = np.linalg.norm(np.linalg.solve(ctx.kernel.matrix, vs.T), axis=0)
    f0 = float(ctx.profile(0.0))
    return extents * _radial_profile_integral(ctx) + (norms - extents) * f0


def theta_many(ctx: DensityContext, nus) -> np.ndarray:
    """theta at every row of ``nus`` (unit vectors)."""
    nus = np.asarray(nus, dtype=float)
    if nus.ndim != 2 or nus.shape[1] != ctx.dim:
        raise ValueError(f"Directions must have shape (n, {ctx.dim}), got {nus.shape}")
    deviation = np.abs(np.linalg.norm(nus, axis=1) - 1.0)
    if np.any(deviation > Config.UNIT_NORM_TOL):
        raise ValueError(f"Directions must be unit vectors (max | |nu| - 1 | = {deviation.max():.3g})")
    return theta_tilde_many(ctx, nus)


def affine_theta_tilde(K: Kernel, alpha: float, beta: float, v,
                       order: int = Config.TENSOR_ORDER) -> float:
    """Extension for f(t) = alpha t + beta: (alpha/2) int G |z . v| dz + beta |v|."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        return 0.0
    moment = absolute_moment_along(K, v / norm, order)
    return 0.5 * alpha * norm * moment + beta * norm


def _require_radial(K: Kernel, operation: str):
    if not K.is_radial:
        raise ValueError(f"{operation} requires a radially symmetric kernel")


def radial_constant(ctx: DensityContext) -> float:
    """theta(e_N), valid for every direction when the kernel is radial."""
    _require_radial(ctx.kernel, "radial_constant")
    e_n = np.zeros(ctx.dim)
    e_n[-1] = 1.0
    return theta(ctx, e_n)


def closed_form_c_NG(K: Kernel, order: int = Config.TENSOR_ORDER) -> float:
    """c_{N,G} = |B^{N-1}| / H^{N-1}(S^{N-1}) * int G(z)|z| dz."""
    _require_radial(K, "closed_form_c_NG")
    prefactor = unit_ball_volume(K.dim - 1) / unit_sphere_area(K.dim)
    return prefactor * first_radial_moment(K, order)


def integrate_density(ctx: DensityContext, bq: BoundaryQuadrature) -> float:
    """Sum of theta(normal) * weight over a boundary quadrature."""
    if len(bq) == 0:
        return 0.0
    if ctx.kernel.is_radial:
        return radial_constant(ctx) * float(np.sum(bq.weights))

    # One theta per distinct normal; box and slab faces share a handful
    keys = np.rint(bq.normals / Config.THETA_CACHE_QUANTUM).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    values = np.array([theta(ctx, bq.normals[i] / np.linalg.norm(bq.normals[i])) for i in first])
    return float(np.dot(bq.weights, values[inverse.ravel()]))


def limit_functional(ctx: DensityContext, S: Shape, dom: Domain,
                     order: int = Config.BOUNDARY_ORDER) -> float:
    """F(E) = integral over the boundary of E in Omega of theta(nu_E)."""
    bq = boundary_quadrature(S, dom, order)
    value = integrate_density(ctx, bq)
    log_step("DENSITY", f"F(E) for {type(S).__name__} = {value:.12g} ({len(bq)} nodes, flags={bq.flags})")
    return value


def convexity_gap(ctx: DensityContext, v, w) -> float:
    """theta_tilde((v+w)/2) - (theta_tilde(v) + theta_tilde(w))/2."""
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    return theta_tilde(ctx, 0.5 * (v + w)) - 0.5 * (theta_tilde(ctx, v) + theta_tilde(ctx, w))


def _sample_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / dim)
    return directions * radii[:, None]


def convexity_probe(ctx: DensityContext, trials: int = Config.CONVEXITY_TRIALS,
                    seed: int = Config.ORACLE_SEED,
                    radius: float = Config.CONVEXITY_RADIUS) -> List[ConvexityViolation]:
    """Midpoint-convexity check of theta_tilde on fixed-seed pairs in the ball of radius 2."""
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    vs = _sample_ball(rng, trials, ctx.dim, radius)
    ws = _sample_ball(rng, trials, ctx.dim, radius)

    values = theta_tilde_many(ctx, np.concatenate([0.5 * (vs + ws), vs, ws]))
    mid, at_v, at_w = np.split(values, 3)
    gaps = mid - 0.5 * (at_v + at_w)
    violations = [ConvexityViolation(v=vs[i].tolist(), w=ws[i].tolist(), gap=float(gaps[i]))
                  for i in np.nonzero(gaps > Config.CONVEXITY_TOL)[0]]

    level = "warning" if violations else "info"
    log_step("DENSITY", f"Convexity probe ({ctx.profile.name}, {trials} trials): {len(violations)} violation(s)",
             level=level)
    return violations
