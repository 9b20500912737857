"""
Analytic test sets: exact indicators, boundary quadratures and voxel
rasterization over the domain box.

All sets are closed: boundary points belong to the set.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, List, Sequence, Tuple, Union

import numpy as np

from config import Config
from utils.data_structures import BoundaryQuadrature, Domain, IndicatorField, ShapeSpec
from utils.logging_utils import log_step
from utils.quadrature import gauss_legendre_interval, sphere_rule, tensor_rule, unit_ball_volume

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Node spacing limits above which a quadrature is flagged as coarse
COARSE_ANGLE = 0.2
COARSE_GRADIENT_JUMP = 0.25


# ---------------------------------------------------------------------------
# Height maps for graph sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeightMap:
    """u: R^{N-1} -> R with its gradient, both acting on arrays (..., N-1)."""
    name: str
    value: ArrayFn = field(compare=False)
    gradient: ArrayFn = field(compare=False)

    def plus(self, amplitude: float, other: "HeightMap") -> "HeightMap":
        """u + amplitude * phi."""
        a = float(amplitude)
        return HeightMap(
            name=f"{self.name}+{a:g}*{other.name}",
            value=lambda x: self.value(x) + a * other.value(x),
            gradient=lambda x: self.gradient(x) + a * other.gradient(x),
        )


def constant_height(base: float) -> HeightMap:
    c = float(base)
    return HeightMap(
        name=f"constant({c:g})",
        value=lambda x: np.full(np.shape(x)[:-1], c),
        gradient=lambda x: np.zeros(np.shape(x)),
    )


def sine_height(base: float, amplitude: float, frequency: float) -> HeightMap:
    """u(x) = base + amplitude * sin(2 pi frequency x_1)."""
    b, a, k = float(base), float(amplitude), 2.0 * np.pi * float(frequency)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        g[..., 0] = a * k * np.cos(k * x[..., 0])
        return g

    return HeightMap(
        name=f"sine({b:g},{a:g},{frequency:g})",
        value=lambda x: b + a * np.sin(k * np.asarray(x, dtype=float)[..., 0]),
        gradient=gradient,
    )


def cosine_perturbation(frequency: float) -> HeightMap:
    """phi(x) = cos(2 pi frequency x_1)."""
    k = 2.0 * np.pi * float(frequency)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        g = np.zeros(x.shape)
        g[..., 0] = -k * np.sin(k * x[..., 0])
        return g

    return HeightMap(
        name=f"cosine({frequency:g})",
        value=lambda x: np.cos(k * np.asarray(x, dtype=float)[..., 0]),
        gradient=gradient,
    )


# ---------------------------------------------------------------------------
# Shapes
# ---------------------------------------------------------------------------

def _clip_box(lower: np.ndarray, upper: np.ndarray, dom: Domain) -> Tuple[np.ndarray, np.ndarray, bool]:
    """Intersect a box with the domain; report whether anything was cut."""
    lo = np.maximum(lower, dom.lower)
    hi = np.minimum(upper, dom.upper)
    clipped = bool(np.any(lo != lower) or np.any(hi != upper))
    return lo, hi, clipped


def _inside_open(value: float, axis: int, dom: Domain) -> bool:
    return dom.lower[axis] < value < dom.upper[axis]


def _face_rule(dim: int, axis: int, value: float, lower: np.ndarray, upper: np.ndarray,
               order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Tensor rule on the face {x_axis = value} over the rectangle [lower, upper] of the other axes."""
    others = [k for k in range(dim) if k != axis]
    pts, wts = tensor_rule([(lower[k], upper[k]) for k in others], order)
    points = np.empty((pts.shape[0], dim))
    points[:, others] = pts
    points[:, axis] = value
    return points, wts


@dataclass(frozen=True)
class Ball:
    center: Tuple[float, ...]
    radius: float

    def __post_init__(self):
        if self.radius <= 0.0:
            raise ValueError(f"Ball radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains(self, points: np.ndarray) -> np.ndarray:
        d = np.asarray(points, dtype=float) - np.asarray(self.center)
        return np.einsum("...i,...i->...", d, d) <= self.radius * self.radius

    def volume(self) -> float:
        return unit_ball_volume(self.dim) * self.radius ** self.dim

    def boundary(self, dom: Domain, order: int) -> BoundaryQuadrature:
        directions, w = sphere_rule(self.dim, order)
        points = np.asarray(self.center) + self.radius * directions
        weights = self.radius ** (self.dim - 1) * w
        flags = []
        if 2.0 * np.pi / order > COARSE_ANGLE:
            flags.append("coarse-order")
        return _keep_inside(points, np.array(directions), weights, dom, flags)


@dataclass(frozen=True)
class Box:
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"Box requires lower < upper componentwise, got {self.lower} / {self.upper}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points >= np.asarray(self.lower)) & (points <= np.asarray(self.upper)), axis=-1)

    def volume(self) -> float:
        return float(np.prod(np.asarray(self.upper) - np.asarray(self.lower)))

    def boundary(self, dom: Domain, order: int) -> BoundaryQuadrature:
        dim = self.dim
        lo, hi, clipped = _clip_box(np.asarray(self.lower, float), np.asarray(self.upper, float), dom)
        parts: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        for axis in range(dim):
            if np.any(np.delete(hi - lo, axis) <= 0.0):
                continue
            for value, sign in ((self.lower[axis], -1.0), (self.upper[axis], 1.0)):
                if not _inside_open(value, axis, dom):
                    clipped = True
                    continue
                points, weights = _face_rule(dim, axis, value, lo, hi, order)
                normals = np.zeros_like(points)
                normals[:, axis] = sign
                parts.append((points, normals, weights))
        return _assemble(parts, dim, ["clipped"] if clipped else [])


@dataclass(frozen=True)
class Slab:
    """{x : offset_low <= x . normal <= offset_high}."""
    normal: Tuple[float, ...]
    offset_low: float
    offset_high: float

    def __post_init__(self):
        if abs(float(np.linalg.norm(self.normal)) - 1.0) > Config.UNIT_NORM_TOL:
            raise ValueError(f"Slab normal {self.normal} is not a unit vector")
        if self.offset_low >= self.offset_high:
            raise ValueError(f"Slab needs offset_low < offset_high, got {self.offset_low} / {self.offset_high}")

    @property
    def dim(self) -> int:
        return len(self.normal)

    def contains(self, points: np.ndarray) -> np.ndarray:
        s = np.asarray(points, dtype=float) @ np.asarray(self.normal)
        return (s >= self.offset_low) & (s <= self.offset_high)

    def _axis(self) -> int:
        n = np.asarray(self.normal)
        nonzero = np.nonzero(n)[0]
        return int(nonzero[0]) if nonzero.size == 1 else -1

    def boundary(self, dom: Domain, order: int) -> BoundaryQuadrature:
        n = np.asarray(self.normal, dtype=float)
        axis = self._axis()
        parts = []
        for offset, sign in ((self.offset_low, -1.0), (self.offset_high, 1.0)):
            if axis >= 0:
                value = offset * n[axis]
                if not _inside_open(value, axis, dom):
                    continue
                points, weights = _face_rule(self.dim, axis, value, np.asarray(dom.lower), np.asarray(dom.upper), order)
            elif self.dim == 2:
                segment = _clip_line(n, offset, dom)
                if segment is None:
                    continue
                points, weights = segment_rule(segment[0], segment[1], order)
            else:
                raise ValueError("Slab boundary quadrature supports axis-aligned normals only for N >= 3")
            normals = np.tile(sign * n, (points.shape[0], 1))
            parts.append((points, normals, weights))
        return _assemble(parts, self.dim, [])


@dataclass(frozen=True)
class Graph:
    """{(x, y) : x in closed D, 0 <= y <= u(x)} over the base rectangle D."""
    base_lower: Tuple[float, ...]
    base_upper: Tuple[float, ...]
    height: HeightMap
    graph_only: bool = True

    def __post_init__(self):
        if len(self.base_lower) != len(self.base_upper) or any(
                lo >= hi for lo, hi in zip(self.base_lower, self.base_upper)):
            raise ValueError(f"Graph base requires lower < upper, got {self.base_lower} / {self.base_upper}")

    @property
    def dim(self) -> int:
        return len(self.base_lower) + 1

    def contains(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        x, y = points[..., :-1], points[..., -1]
        in_base = np.all((x >= np.asarray(self.base_lower)) & (x <= np.asarray(self.base_upper)), axis=-1)
        return in_base & (y >= 0.0) & (y <= self.height.value(x))

    def perturbed(self, amplitude: float, phi: HeightMap) -> "Graph":
        return replace(self, height=self.height.plus(amplitude, phi))

    def volume(self, order: int = Config.BOUNDARY_ORDER) -> float:
        pts, wts = tensor_rule(list(zip(self.base_lower, self.base_upper)), order)
        return float(np.dot(wts, self.height.value(pts)))

    def boundary(self, dom: Domain, order: int) -> BoundaryQuadrature:
        base = list(zip(self.base_lower, self.base_upper))
        x, w = tensor_rule(base, order)
        u = self.height.value(x)
        grad = self.height.gradient(x)
        jac = np.sqrt(1.0 + np.einsum("...i,...i->...", grad, grad))
        points = np.concatenate([x, u[:, None]], axis=-1)
        normals = np.concatenate([-grad, np.ones((x.shape[0], 1))], axis=-1) / jac[:, None]
        parts = [(points, normals, w * jac)]

        flags = []
        grid = grad.reshape((order,) * (self.dim - 1) + (self.dim - 1,))
        for axis in range(self.dim - 1):
            jumps = np.linalg.norm(np.diff(grid, axis=axis), axis=-1)
            if jumps.size and float(jumps.max()) > COARSE_GRADIENT_JUMP:
                flags.append("coarse-order")
                break
        if np.any(u <= 0.0):
            log_step("SHAPES", "Graph height is not positive on D", level="warning")

        if not self.graph_only:
            parts.extend(self._floor_and_sides(x, w, order))
        return _keep_inside(*_stack(parts, self.dim), dom, flags)

    def _floor_and_sides(self, x: np.ndarray, w: np.ndarray, order: int):
        dim = self.dim
        floor = np.concatenate([x, np.zeros((x.shape[0], 1))], axis=-1)
        floor_normals = np.zeros_like(floor)
        floor_normals[:, -1] = -1.0
        parts = [(floor, floor_normals, w)]

        t, wt = gauss_legendre_interval(order, 0.0, 1.0)
        for axis in range(dim - 1):
            others = [(lo, hi) for k, (lo, hi) in enumerate(zip(self.base_lower, self.base_upper)) if k != axis]
            side_x, side_w = tensor_rule(others, order) if others else (np.zeros((1, 0)), np.ones(1))
            for value, sign in ((self.base_lower[axis], -1.0), (self.base_upper[axis], 1.0)):
                xb = np.insert(side_x, axis, value, axis=1)
                u = self.height.value(xb)
                # y in [0, u(x)] for each lateral base node
                y = u[:, None] * t[None, :]
                pts = np.concatenate([np.repeat(xb, order, axis=0), y.reshape(-1, 1)], axis=-1)
                wts = (side_w[:, None] * u[:, None] * wt[None, :]).ravel()
                nrm = np.zeros_like(pts)
                nrm[:, axis] = sign
                parts.append((pts, nrm, wts))
        return parts


Shape = Union[Ball, Box, Slab, Graph]


def _stack(parts, dim: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not parts:
        return np.zeros((0, dim)), np.zeros((0, dim)), np.zeros(0)
    return (np.concatenate([p for p, _, _ in parts]),
            np.concatenate([n for _, n, _ in parts]),
            np.concatenate([w for _, _, w in parts]))


def _assemble(parts, dim: int, flags: List[str]) -> BoundaryQuadrature:
    points, normals, weights = _stack(parts, dim)
    return BoundaryQuadrature(points=points, normals=normals, weights=weights, flags=flags)


def _keep_inside(points, normals, weights, dom: Domain, flags: List[str]) -> BoundaryQuadrature:
    keep = dom.contains_open(points)
    if not np.all(keep):
        flags = flags + ["clipped"]
    return BoundaryQuadrature(points=points[keep], normals=normals[keep], weights=weights[keep], flags=flags)


def _clip_line(n: np.ndarray, offset: float, dom: Domain):
    """Segment of the line {x . n = offset} inside the closed 2-D domain, or None."""
    origin = offset * n
    direction = np.array([-n[1], n[0]])
    s_lo, s_hi = -np.inf, np.inf
    for axis in range(2):
        if direction[axis] == 0.0:
            if not dom.lower[axis] <= origin[axis] <= dom.upper[axis]:
                return None
            continue
        a = (dom.lower[axis] - origin[axis]) / direction[axis]
        b = (dom.upper[axis] - origin[axis]) / direction[axis]
        s_lo, s_hi = max(s_lo, min(a, b)), min(s_hi, max(a, b))
    if s_lo >= s_hi:
        return None
    return origin + s_lo * direction, origin + s_hi * direction


def segment_rule(start: np.ndarray, end: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    s, w = gauss_legendre_interval(order, 0.0, 1.0)
    length = float(np.linalg.norm(end - start))
    return start + s[:, None] * (end - start), w * length


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def indicator(S: Shape, x: Sequence[float]) -> int:
    """Exact membership (1 on the closed set, 0 outside)."""
    return int(bool(S.contains(np.asarray(x, dtype=float))))


def rasterize(S: Shape, dom: Domain, supersample: int = Config.SUPERSAMPLE) -> IndicatorField:
    """
    Fraction of supersample^N stratified sub-points inside S for every voxel.

    Sub-points sit at ((j + 0.5)/k - 0.5) h from each voxel center. The grid is
    processed in blocks of first-axis rows; each block is reduced independently.
    """
    if supersample < 1:
        raise ValueError(f"supersample must be >= 1, got {supersample}")
    if S.dim != dom.dim:
        raise ValueError(f"Shape dimension {S.dim} does not match domain dimension {dom.dim}")

    k, n, dim = supersample, dom.resolution, dom.dim
    offsets = ((np.arange(k) + 0.5) / k - 0.5)
    axes = [(dom.axis_centers(a)[:, None] + offsets[None, :] * dom.spacing[a]).ravel() for a in range(dim)]

    per_row = k ** dim * n ** (dim - 1)
    rows = max(1, Config.RASTER_CHUNK_POINTS // per_row)
    values = np.empty(dom.shape)
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        grids = np.meshgrid(axes[0][start * k:stop * k], *axes[1:], indexing="ij")
        inside = S.contains(np.stack(grids, axis=-1))
        blocks = inside.reshape(sum(((m, k) for m in (stop - start,) + (n,) * (dim - 1)), ()))
        counts = blocks.sum(axis=tuple(range(1, 2 * dim, 2)), dtype=np.int64)
        values[start:stop] = counts / float(k ** dim)

    log_step("SHAPES", f"Rasterized {type(S).__name__} at {n}^{dim}, supersample {k}", level="debug")
    return IndicatorField(domain=dom, values=values, supersample=k)


def boundary_quadrature(S: Shape, dom: Domain, order: int = Config.BOUNDARY_ORDER) -> BoundaryQuadrature:
    """Nodes on the boundary of S inside Omega, with outward normals and area weights."""
    if order < 4:
        raise ValueError(f"Boundary quadrature order must be >= 4, got {order}")
    bq = S.boundary(dom, order)
    if bq.flags:
        log_step("SHAPES", f"{type(S).__name__} boundary quadrature flags: {bq.flags}", level="warning")
    return bq


def shape_from_spec(spec: ShapeSpec, dim: int) -> Shape:
    """Build a shape from the [shape] section of an experiment file."""
    if spec.kind == "ball":
        _require_len("center", spec.center, dim)
        return Ball(center=tuple(spec.center), radius=spec.radius)
    if spec.kind == "box":
        _require_len("lower", spec.lower, dim)
        _require_len("upper", spec.upper, dim)
        return Box(lower=tuple(spec.lower), upper=tuple(spec.upper))
    if spec.kind == "slab":
        _require_len("normal", spec.normal, dim)
        return Slab(normal=tuple(spec.normal), offset_low=spec.offset_low, offset_high=spec.offset_high)

    _require_len("base_lower", spec.base_lower, dim - 1)
    _require_len("base_upper", spec.base_upper, dim - 1)
    if spec.height == "constant":
        height = constant_height(spec.base)
    else:
        height = sine_height(spec.base, spec.amplitude, spec.frequency)
    return Graph(base_lower=tuple(spec.base_lower), base_upper=tuple(spec.base_upper),
                 height=height, graph_only=spec.graph_only)


def _require_len(name: str, value: Sequence[float], expected: int):
    if len(value) != expected:
        raise ValueError(f"Shape key '{name}' needs {expected} component(s), got {len(value)}")
