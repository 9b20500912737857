"""
Quadrature rules shared by the numerics modules.

Every rule returns ``(points, weights)`` as read-only numpy arrays. Rules are
cached per order, so repeated calls are cheap and always return the same
nodes in the same order (fixed summation order downstream).
"""

from functools import lru_cache
from typing import Iterator, Sequence, Tuple

import numpy as np
from scipy import special

Rule = Tuple[np.ndarray, np.ndarray]


def _freeze(*arrays: np.ndarray) -> Tuple[np.ndarray, ...]:
    for arr in arrays:
        arr.setflags(write=False)
    return arrays


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> Rule:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    if order < 1:
        raise ValueError(f"Quadrature order must be >= 1, got {order}")
    x, w = special.roots_legendre(order)
    return _freeze(np.asarray(x, dtype=float), np.asarray(w, dtype=float))


def gauss_legendre_interval(order: int, a: float, b: float) -> Rule:
    """Gauss-Legendre rule mapped to [a, b]."""
    x, w = gauss_legendre(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def gauss_legendre_batch(order: int, lower: np.ndarray, upper: float) -> Rule:
    """One Gauss-Legendre rule per lower bound, all ending at ``upper``.

    Returns arrays of shape (len(lower), order).
    """
    x, w = gauss_legendre(order)
    lower = np.asarray(lower, dtype=float)[:, None]
    half = 0.5 * (upper - lower)
    return lower + half * (x[None, :] + 1.0), half * w[None, :]


def tensor_rule(intervals: Sequence[Tuple[float, float]], order: int) -> Rule:
    """Tensor-product Gauss-Legendre rule over a box given by per-axis intervals."""
    axes = [gauss_legendre_interval(order, a, b) for a, b in intervals]
    grids = np.meshgrid(*[nodes for nodes, _ in axes], indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.ones(points.shape[0])
    wgrids = np.meshgrid(*[wts for _, wts in axes], indexing="ij")
    for wg in wgrids:
        weights = weights * wg.ravel()
    return points, weights


def tensor_panels(dim: int, order: int, split_axes: Sequence[int]) -> Iterator[Rule]:
    """Tensor rules over the panels of [-1, 1]^dim with the listed axes split at 0.

    Splitting puts a panel edge on the plane where an integrand has a kink
    (|z . e_k| or |z| at the origin), which keeps Gauss-Legendre spectral.
    Panels come in a fixed order.
    """
    split = set(split_axes)
    panels = [[(-1.0, 0.0), (0.0, 1.0)] if axis in split else [(-1.0, 1.0)]
              for axis in range(dim)]
    for combo in np.ndindex(*[len(p) for p in panels]):
        yield tensor_rule([panels[axis][k] for axis, k in enumerate(combo)], order)



@lru_cache(maxsize=None)
def sphere_rule(dim: int, order: int) -> Rule:
    """Product rule on the unit sphere S^{dim-1} in R^dim.

    dim=1: the two points +-1. dim=2: trapezoid with ``order`` angles.
    dim>=3: Gauss-Gegenbauer latitudes times the rule on S^{dim-2}.
    Weights sum to the surface measure of the sphere.
    """
    if dim < 1:
        raise ValueError(f"Sphere dimension must be >= 1, got {dim}")
    if dim == 1:
        return _freeze(np.array([[-1.0], [1.0]]), np.array([1.0, 1.0]))
    if dim == 2:
        phi = 2.0 * np.pi * np.arange(order) / order
        points = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return _freeze(points, np.full(order, 2.0 * np.pi / order))

    x, w = special.roots_gegenbauer(order, 0.5 * (dim - 2))
    sub_points, sub_weights = sphere_rule(dim - 1, order)
    scale = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    points = np.concatenate(
        [
            (scale[:, None, None] * sub_points[None, :, :]).reshape(-1, dim - 1),
            np.repeat(x, sub_points.shape[0])[:, None],
        ],
        axis=-1,
    )
    weights = (w[:, None] * sub_weights[None, :]).ravel()
    return _freeze(points, weights)


@lru_cache(maxsize=None)
def ball_rule(dim: int, order: int) -> Rule:
    """Rule on the closed unit ball of R^dim (dim=1 is the segment [-1, 1])."""
    if dim == 1:
        x, w = gauss_legendre(order)
        return _freeze(x[:, None].copy(), w.copy())

    r, wr = gauss_legendre_interval(order, 0.0, 1.0)
    directions, wd = sphere_rule(dim, order)
    points = (r[:, None, None] * directions[None, :, :]).reshape(-1, dim)
    weights = ((wr * r ** (dim - 1))[:, None] * wd[None, :]).ravel()
    return _freeze(points, weights)


def unit_ball_volume(dim: int) -> float:
    """Lebesgue measure of the unit ball in R^dim."""
    return float(np.pi ** (dim / 2.0) / special.gamma(dim / 2.0 + 1.0))


def unit_sphere_area(dim: int) -> float:
    """Hausdorff measure H^{dim-1} of the unit sphere in R^dim."""
    return float(2.0 * np.pi ** (dim / 2.0) / special.gamma(dim / 2.0))
