"""
Admissible kernels G: construction, total mass, hyperplane slices,
half-space masses and moments.

Half-space masses always go through the slice decomposition
(outer Gauss-Legendre in the offset times an inner rule on the slice disk);
masked N-dimensional quadrature is never used for them.
"""

from typing import List, Optional, Sequence

import numpy as np

from config import Config
from utils.data_structures import HalfspaceMass, Kernel
from utils.logging_utils import log_step
from utils.quadrature import (
    ball_rule,
    gauss_legendre_batch,
    gauss_legendre_interval,
    tensor_panels,
    tensor_rule,
    unit_sphere_area,
)

# Upper bound on kernel evaluations held in memory at once
_CHUNK_POINTS = 1_000_000


def reference_bump_mass(dim: int, order: int = Config.REFERENCE_MASS_ORDER) -> float:
    """m0 = integral of exp(-1/(1-|z|^2)) over the unit ball of R^dim."""
    r, w = gauss_legendre_interval(order, 0.0, 1.0)
    radial = np.exp(-1.0 / (1.0 - r * r)) * r ** (dim - 1)
    return unit_sphere_area(dim) * float(np.dot(w, radial))


def _validate_anisotropy(dim: int, anisotropy) -> Optional[np.ndarray]:
    if anisotropy is None:
        return None
    A = np.asarray(anisotropy, dtype=float)
    if A.shape != (dim, dim):
        raise ValueError(f"Anisotropy must be a {dim}x{dim} matrix, got shape {A.shape}")
    if not np.allclose(A, A.T, rtol=0.0, atol=1e-12):
        raise ValueError("Anisotropy matrix must be symmetric")
    eigenvalues = np.linalg.eigvalsh(A)
    if eigenvalues[0] <= 0.0:
        raise ValueError(f"Anisotropy matrix must be positive definite, eigenvalues {eigenvalues.tolist()}")
    if eigenvalues[0] < 1.0 - 1e-12:
        raise ValueError(
            f"Smallest singular value {eigenvalues[0]:.6g} < 1: support {{|Az| <= 1}} leaves the unit ball"
        )
    return A


def make_bump_kernel(dim: int, anisotropy=None, normalize: bool = True) -> Kernel:
    """
    Build the bump kernel c * exp(-1/(1-|Az|^2)) on {|Az| < 1}.

    Args:
        dim: Space dimension N >= 2
        anisotropy: Optional symmetric positive-definite N x N matrix with
            smallest singular value >= 1 (identity when absent)
        normalize: Fix c so the total mass is 1; otherwise c = 1

    Returns:
        Immutable Kernel
    """
    if dim < 2:
        raise ValueError(f"Kernel dimension must be >= 2, got {dim}")
    A = _validate_anisotropy(dim, anisotropy)

    # int G0(Az) dz = m0 / det(A)
    det = 1.0 if A is None else float(np.linalg.det(A))
    normalization = det / reference_bump_mass(dim) if normalize else 1.0

    frozen = None if A is None else tuple(tuple(float(x) for x in row) for row in A)
    kernel = Kernel(dim=dim, normalization=normalization, anisotropy=frozen)

    log_step("KERNELS", f"Bump kernel dim={dim} radial={kernel.is_radial} c={normalization:.12g}", level="debug")
    return kernel


def _weighted_sum(values_fn, points: np.ndarray, weights: np.ndarray) -> float:
    """Sum weights * values_fn(points) in fixed chunk order."""
    total = 0.0
    for start in range(0, points.shape[0], _CHUNK_POINTS):
        stop = start + _CHUNK_POINTS
        total += float(np.dot(weights[start:stop], values_fn(points[start:stop])))
    return total


def kernel_total_mass(K: Kernel, quad_order: int = Config.TENSOR_ORDER) -> float:
    """Tensor-product Gauss-Legendre mass of K over [-1, 1]^N."""
    if quad_order < 2:
        raise ValueError(f"quad_order must be >= 2, got {quad_order}")
    points, weights = tensor_rule([(-1.0, 1.0)] * K.dim, quad_order)
    return _weighted_sum(K.evaluate, points, weights)


def check_unit(nu, dim: int) -> np.ndarray:
    """Return nu as a float array, rejecting wrong shape or non-unit norm."""
    nu = np.asarray(nu, dtype=float)
    if nu.shape != (dim,):
        raise ValueError(f"Direction must have shape ({dim},), got {nu.shape}")
    deviation = abs(float(np.linalg.norm(nu)) - 1.0)
    if deviation > Config.UNIT_NORM_TOL:
        raise ValueError(f"Direction {nu.tolist()} is not a unit vector (| |nu| - 1 | = {deviation:.3g})")
    return nu


def householder_frame(nu: np.ndarray) -> np.ndarray:
    """Orthogonal Q with Q[:, -1] = nu; the first N-1 columns span nu-perp."""
    nu = np.asarray(nu, dtype=float)
    dim = nu.shape[0]
    mu = -nu if nu[-1] < 0.0 else nu
    u = mu.copy()
    u[-1] += 1.0
    Q = np.eye(dim) - 2.0 * np.outer(u, u) / float(np.dot(u, u))
    Q[:, -1] = nu
    return Q


def _slice_geometry(K: Kernel, nu: np.ndarray):
    """
    Affine map from the unit (N-1)-ball onto the slice of supp K.

    On {z . nu = s} the support {|Az| <= 1} is an ellipsoid with radius
    factor R(s) = sqrt(1 - kappa s^2). Points are z = s * center + R * (x @ spread.T)
    for x in the unit ball, with Jacobian jacobian * R^(N-1). In these
    coordinates |Az|^2 = 1 - R^2 (1 - |x|^2), so K vanishes smoothly on the
    rim of the unit ball. Radial kernels give kappa = 1 and the plain disk
    of radius sqrt(1 - s^2).
    """
    dim = K.dim
    Q = householder_frame(nu)
    perp = Q[:, :-1]
    A = K.matrix
    B = A @ perp
    a = A @ nu
    M = B.T @ B
    shift = np.linalg.solve(M, B.T @ a)
    kappa = float(a @ a - (B.T @ a) @ shift)
    L = np.linalg.cholesky(M)
    spread = perp @ np.linalg.inv(L.T)
    center = nu - perp @ shift
    jacobian = 1.0 / float(np.prod(np.diag(L)))
    return center, spread, kappa, jacobian


def support_extent(K: Kernel, nu) -> float:
    """Largest z . nu over the support of K (1 for radial kernels)."""
    nu = check_unit(nu, K.dim)
    return _extent(_slice_geometry(K, nu)[2])


def _extent(kappa: float) -> float:
    return min(1.0, 1.0 / float(np.sqrt(kappa)))


def _slice_values(K: Kernel, nu: np.ndarray, offsets: np.ndarray, order: int) -> np.ndarray:
    """Slice integrals at every entry of ``offsets`` (1-D array)."""
    dim = K.dim
    center, spread, kappa, jacobian = _slice_geometry(K, nu)
    disk_points, disk_weights = ball_rule(dim - 1, order)
    in_plane = disk_points @ spread.T
    radius = np.sqrt(np.clip(1.0 - kappa * offsets * offsets, 0.0, None))

    out = np.empty(offsets.shape[0])
    step = max(1, _CHUNK_POINTS // max(1, in_plane.shape[0]))
    for start in range(0, offsets.shape[0], step):
        s = offsets[start:start + step]
        r = radius[start:start + step]
        z = s[:, None, None] * center[None, None, :] + r[:, None, None] * in_plane[None, :, :]
        out[start:start + step] = jacobian * r ** (dim - 1) * (K.evaluate(z) @ disk_weights)
    out[radius == 0.0] = 0.0
    return out


def slice_integral(K: Kernel, nu, s: float, order: int = Config.SLICE_ORDER) -> float:
    """Integral of K over the hyperplane {z . nu = s}."""
    nu = check_unit(nu, K.dim)
    if abs(s) >= 1.0:
        return 0.0
    return float(_slice_values(K, nu, np.array([float(s)]), order)[0])


def halfspace_masses(K: Kernel, nu, ts: Sequence[float],
                     slice_order: int = Config.SLICE_ORDER,
                     outer_order: int = Config.HALFSPACE_ORDER) -> np.ndarray:
    """Vectorized halfspace_mass over offsets ``ts`` in [0, 1]."""
    nu = check_unit(nu, K.dim)
    ts = np.asarray(ts, dtype=float).ravel()
    if ts.size and (ts.min() < 0.0 or ts.max() > 1.0):
        raise ValueError(f"Offsets must lie in [0, 1], got range [{ts.min()}, {ts.max()}]")

    # Slices vanish beyond the support extent, so the outer rule stops there
    extent = _extent(_slice_geometry(K, nu)[2])
    inside = ts < extent
    masses = np.zeros(ts.shape[0])
    if np.any(inside):
        nodes, weights = gauss_legendre_batch(outer_order, ts[inside], extent)
        slices = _slice_values(K, nu, nodes.ravel(), slice_order).reshape(nodes.shape)
        masses[inside] = np.sum(weights * slices, axis=1)
    return masses


def halfspace_mass(K: Kernel, nu, t: float,
                   slice_order: int = Config.SLICE_ORDER,
                   outer_order: int = Config.HALFSPACE_ORDER) -> float:
    """Kernel mass of {z . nu >= t}, integrating slice_integral over [t, 1]."""
    return float(halfspace_masses(K, nu, [t], slice_order, outer_order)[0])


def halfspace_table(K: Kernel, nu, n: int = 51,
                    slice_order: int = Config.SLICE_ORDER,
                    outer_order: int = Config.HALFSPACE_ORDER) -> List[HalfspaceMass]:
    """Half-space masses on a uniform grid of ``n`` offsets in [0, 1]."""
    if n < 2:
        raise ValueError(f"Table needs at least 2 offsets, got {n}")
    nu = check_unit(nu, K.dim)
    ts = np.linspace(0.0, 1.0, n)
    values = np.clip(halfspace_masses(K, nu, ts, slice_order, outer_order), 0.0, 1.0)
    normal = [float(x) for x in nu]
    return [HalfspaceMass(normal=normal, offset=float(t), value=float(v)) for t, v in zip(ts, values)]


def absolute_moment_along(K: Kernel, nu, order: int = Config.TENSOR_ORDER) -> float:
    """Integral of K(z) |z . nu| dz (no factor 1/2)."""
    nu = check_unit(nu, K.dim)
    Q = householder_frame(nu)
    # Frame coordinates y with z = Q y; the last axis is split where |y_N| kinks
    return sum(_weighted_sum(lambda pts: K.evaluate(pts @ Q.T) * np.abs(pts[:, -1]), y, w)
               for y, w in tensor_panels(K.dim, order, [K.dim - 1]))


def first_radial_moment(K: Kernel, order: int = Config.TENSOR_ORDER) -> float:
    """Integral of K(z) |z| dz by orthant-split tensor quadrature."""
    return sum(_weighted_sum(lambda pts: K.evaluate(pts) * np.linalg.norm(pts, axis=-1), points, weights)
               for points, weights in tensor_panels(K.dim, order, range(K.dim)))
