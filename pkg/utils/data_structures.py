from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import Config

ArrayFn = Callable[[np.ndarray], np.ndarray]


# ---------------------------------------------------------------------------
# Kernels and profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Even, nonnegative bump kernel supported in the closed unit ball.

    G(z) = normalization * exp(-1 / (1 - |A z|^2)) for |A z| < 1, else 0.
    """
    dim: int
    normalization: float
    anisotropy: Optional[Tuple[Tuple[float, ...], ...]] = None
    support_radius: float = 1.0

    @property
    def matrix(self) -> np.ndarray:
        if self.anisotropy is None:
            return np.eye(self.dim)
        return np.array(self.anisotropy, dtype=float)

    @property
    def isotropic_scale(self) -> Optional[float]:
        """a when A = a*I (including the identity), otherwise None."""
        if self.anisotropy is None:
            return 1.0
        A = self.matrix
        a = A[0, 0]
        if np.array_equal(A, a * np.eye(self.dim)):
            return float(a)
        return None

    @property
    def is_radial(self) -> bool:
        return self.isotropic_scale is not None

    @property
    def radial_profile(self) -> Optional[ArrayFn]:
        """g with G(z) = g(|z|), present iff the kernel is radially symmetric."""
        a = self.isotropic_scale
        if a is None:
            return None
        c = self.normalization

        def g(r: np.ndarray) -> np.ndarray:
            r2 = (a * np.asarray(r, dtype=float)) ** 2
            return c * _bump(r2)

        return g

    @property
    def key(self) -> Tuple:
        return (self.dim, self.normalization, self.anisotropy)

    def evaluate(self, z: np.ndarray) -> np.ndarray:
        """Evaluate on points of shape (..., dim)."""
        z = np.asarray(z, dtype=float)
        a = self.isotropic_scale
        if a is not None:
            r2 = np.einsum("...i,...i->...", z, z)
            if a != 1.0:
                r2 = (a * a) * r2
        else:
            Az = z @ self.matrix.T
            r2 = np.einsum("...i,...i->...", Az, Az)
        return self.normalization * _bump(r2)

    __call__ = evaluate

    def scaled(self, factor: float) -> "Kernel":
        """Kernel multiplied by a positive constant."""
        return Kernel(self.dim, self.normalization * factor, self.anisotropy, self.support_radius)


def _bump(r2: np.ndarray) -> np.ndarray:
    inside = r2 < 1.0
    gap = np.where(inside, 1.0 - r2, 1.0)
    return np.where(inside, np.exp(-1.0 / gap), 0.0)


class HalfspaceMass(BaseModel):
    """Kernel mass of the half-space {z . normal >= offset}."""
    model_config = ConfigDict(frozen=True)

    normal: List[float]
    offset: float = Field(..., ge=0.0, le=1.0)
    value: float = Field(..., ge=0.0, le=1.0)


@dataclass(frozen=True)
class Profile:
    """Interaction function f on [0, 1] with convexity/smoothness metadata."""
    name: str
    fn: ArrayFn = field(repr=False, compare=False)
    convex_flag: bool
    smooth_flag: bool
    parameter: Optional[float] = None

    def __call__(self, t) -> np.ndarray:
        return self.fn(np.asarray(t, dtype=float))

    @property
    def key(self) -> Tuple:
        return (self.name, self.parameter)

    @classmethod
    def from_callable(cls, name: str, fn: ArrayFn, convex: bool = False,
                      smooth: bool = False) -> "Profile":
        """Wrap a user function; claims are metadata checked by check_profile."""
        return cls(name=name, fn=fn, convex_flag=convex, smooth_flag=smooth)


class ProfileViolation(BaseModel):
    """One failed standing assumption on a profile."""
    kind: Literal["f0", "monotone", "convexity"]
    location: List[float]
    detail: str


class ConvexityViolation(BaseModel):
    """Pair (v, w) where the midpoint value of theta-tilde exceeds the chord."""
    v: List[float]
    w: List[float]
    gap: float


# ---------------------------------------------------------------------------
# Domain, fields, quadratures
# ---------------------------------------------------------------------------

class Domain(BaseModel):
    """Open axis-aligned box Omega with a voxel grid of ``resolution`` per axis."""
    model_config = ConfigDict(frozen=True)

    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    resolution: int = Field(..., ge=8)

    @model_validator(mode="after")
    def _check_corners(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("Domain corners must have the same dimension")
        if len(self.lower) < 2:
            raise ValueError("Domain dimension must be >= 2")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError(f"Domain requires lower < upper componentwise, got {self.lower} / {self.upper}")
        return self

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def spacing(self) -> np.ndarray:
        return self.extent / self.resolution

    @property
    def isotropic_spacing(self) -> float:
        h = self.spacing
        if not np.allclose(h, h[0], rtol=1e-12, atol=0.0):
            raise ValueError(f"Voxel spacing must be equal on all axes, got {h.tolist()}")
        return float(h[0])

    @property
    def voxel_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.resolution,) * self.dim

    def axis_centers(self, axis: int) -> np.ndarray:
        h = self.spacing[axis]
        return self.lower[axis] + (np.arange(self.resolution) + 0.5) * h

    def contains_open(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float)
        return np.all((points > np.asarray(self.lower)) & (points < np.asarray(self.upper)), axis=-1)

    def with_resolution(self, resolution: int) -> "Domain":
        return Domain(lower=self.lower, upper=self.upper, resolution=resolution)


@dataclass
class IndicatorField:
    """Voxel sampling of the indicator of E inside Omega, with fractional fill."""
    domain: Domain
    values: np.ndarray
    supersample: int = 1

    def volume(self) -> float:
        return float(np.sum(self.values, dtype=np.float64) * self.domain.voxel_volume)


@dataclass
class BoundaryQuadrature:
    """Nodes on the boundary of E inside Omega with outward normals and H^{N-1} weights."""
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    flags: List[str] = field(default_factory=list)

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def __len__(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True)
class Stencil:
    """Discrete probability stencil sampling G_eps at integer offsets times h."""
    epsilon: float
    spacing: float
    radius: int
    weights: np.ndarray = field(repr=False, compare=False)
    raw_mass: float = 1.0

    @property
    def dim(self) -> int:
        return self.weights.ndim

    def offsets(self) -> np.ndarray:
        """Integer offsets aligned with ``weights.ravel()``."""
        size = 2 * self.radius + 1
        grids = np.indices((size,) * self.dim) - self.radius
        return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass(frozen=True)
class NonlocalEvaluation:
    """One evaluation of F_eps with the discretization that produced it."""
    value: float
    epsilon: float
    resolution: int
    spacing: float
    stencil_radius: int
    raw_stencil_mass: float
    complement_voxels: int
    method: str


# ---------------------------------------------------------------------------
# Experiment configuration (sections of a .cfg file)
# ---------------------------------------------------------------------------

class KernelSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: int = Field(2, ge=2)
    anisotropy: Optional[List[List[float]]] = None
    slice_order: int = Field(Config.SLICE_ORDER, ge=8)
    halfspace_order: int = Field(Config.HALFSPACE_ORDER, ge=8)
    tensor_order: int = Field(Config.TENSOR_ORDER, ge=8)


class ProfileSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "identity"
    parameter: Optional[float] = None
    theta_order: int = Field(Config.THETA_ORDER, ge=8)


class ShapeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["ball", "box", "slab", "graph"] = "ball"
    # ball
    center: List[float] = [0.5, 0.5]
    radius: float = Field(0.3, gt=0)
    # box
    lower: List[float] = [0.25, 0.25]
    upper: List[float] = [0.75, 0.75]
    # slab
    normal: List[float] = [1.0, 0.0]
    offset_low: float = 0.25
    offset_high: float = 0.75
    # graph
    base_lower: List[float] = [0.0]
    base_upper: List[float] = [1.0]
    height: Literal["constant", "sine"] = "sine"
    base: float = 0.5
    amplitude: float = 0.1
    frequency: float = 1.0
    graph_only: bool = True
    # boundary quadrature
    boundary_order: int = Field(Config.BOUNDARY_ORDER, ge=4)


class DomainSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    lower: List[float] = [0.0, 0.0]
    upper: List[float] = [1.0, 1.0]
    resolution: int = Field(64, ge=8)

    def to_domain(self, resolution: Optional[int] = None) -> Domain:
        return Domain(lower=tuple(self.lower), upper=tuple(self.upper),
                      resolution=resolution or self.resolution)


class ScheduleSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epsilon0: float = Field(0.125, gt=0)
    ratio: float = Field(0.5, gt=0, lt=1)
    count: int = Field(4, ge=1)
    policy: Literal["adaptive", "fixed"] = "adaptive"
    points_per_epsilon: int = Field(Config.POINTS_PER_EPSILON, ge=Config.MIN_POINTS_PER_EPSILON)
    supersample: int = Field(Config.SUPERSAMPLE, ge=1)
    method: Literal["fft", "direct"] = "fft"
    tolerance: float = Field(Config.CONVERGENCE_TOL, gt=0)
    seed: int = Config.ORACLE_SEED
    # re-evaluate every row at twice the resolution
    resolution_check: bool = True

    @field_validator("supersample")
    @classmethod
    def _odd_supersample(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError(f"supersample must be odd, got {v}: even counts leave voxels filled exactly 1/2")
        return v

    def epsilons(self) -> List[float]:
        return [self.epsilon0 * self.ratio ** k for k in range(self.count)]


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: str = Config.OUTPUT_DIR
    stem: str = "run"
    write_json: bool = True


class PerturbationSpec(BaseModel):
    """u_h = u + (amplitude / h) * phi with eps_h = epsilon_scale / h."""
    model_config = ConfigDict(extra="forbid")

    kind: Literal["cosine", "none"] = "cosine"
    frequency: float = 2.0
    amplitude: float = 1.0
    h_values: List[int] = [8, 16, 32, 64]
    epsilon_scale: float = Field(0.125, gt=0)
    fixed_epsilon: Optional[float] = Field(None, gt=0)
    tolerance: float = Field(Config.LOWER_BOUND_TOL, gt=0)

    @field_validator("h_values")
    @classmethod
    def _sorted_positive(cls, v: List[int]) -> List[int]:
        if not v or any(h <= 0 for h in v):
            raise ValueError("h_values must be a nonempty list of positive integers")
        return sorted(v)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kernel: KernelSpec = Field(default_factory=KernelSpec)
    profile: ProfileSpec = Field(default_factory=ProfileSpec)
    shape: ShapeSpec = Field(default_factory=ShapeSpec)
    domain: DomainSpec = Field(default_factory=DomainSpec)
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    output: OutputSpec = Field(default_factory=OutputSpec)
    perturbation: PerturbationSpec = Field(default_factory=PerturbationSpec)

    @model_validator(mode="after")
    def _check_schedule(self):
        extent = np.asarray(self.domain.upper) - np.asarray(self.domain.lower)
        if len(self.domain.lower) != self.kernel.dim:
            raise ValueError(f"Domain dimension {len(self.domain.lower)} != kernel dim {self.kernel.dim}")
        if not np.allclose(extent, extent[0], rtol=1e-12, atol=0.0):
            raise ValueError("Domain must be a cube so voxels are isotropic")
        if self.schedule.policy == "fixed":
            h = float(extent[0]) / self.domain.resolution
            smallest = min(self.schedule.epsilons())
            if smallest < Config.MIN_POINTS_PER_EPSILON * h * (1.0 - 1e-12):
                raise ValueError(
                    f"Fixed resolution {self.domain.resolution} gives h={h:.6g}; "
                    f"epsilon={smallest:.6g} needs epsilon >= {Config.MIN_POINTS_PER_EPSILON}h"
                )
        return self


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

class ConvergenceRow(BaseModel):
    epsilon: float
    resolution: int
    value: float
    abs_error: float
    rel_error: float
    # F_eps at twice the resolution and |doubled - value|
    doubled_value: Optional[float] = None
    resolution_delta: Optional[float] = None
    # |value - previous row value|, absent on the first row
    epsilon_increment: Optional[float] = None
    wall_time: float = Field(0.0, exclude=True)


class ConvergenceReport(BaseModel):
    rows: List[ConvergenceRow]
    reference: float
    rate: Optional[float] = None
    rate_note: str = ""
    observed_order: Optional[float] = None
    extrapolated: Optional[float] = None
    extrapolated_rel_error: Optional[float] = None
    final_rel_error: float
    monotone: bool
    # some row moved more under resolution doubling than between epsilons
    resolution_limited: bool = False
    tolerance: float
    passed: bool
    flags: List[str] = []


class LowerBoundRow(BaseModel):
    h: int
    amplitude: float
    epsilon: float
    resolution: int
    value: float
    reference: float
    deficit: float
    wall_time: float = Field(0.0, exclude=True)


class LowerBoundReport(BaseModel):
    rows: List[LowerBoundRow]
    reference: float
    deficit_trend: Optional[float] = None
    extrapolated_deficit: Optional[float] = None
    tolerance: float
    passed: Optional[bool] = None
    flags: List[str] = []


class OracleEstimate(BaseModel):
    quantity: str
    estimate: float
    standard_error: float = Field(..., ge=0)
    samples: int
    seed: int
    command: str = ""

    def agrees_with(self, value: float, sigmas: float = Config.ORACLE_SIGMA) -> bool:
        return abs(value - self.estimate) <= sigmas * self.standard_error + 1e-15


class CheckResult(BaseModel):
    name: str
    passed: bool
    detail: str = ""
    elapsed: float = 0.0


class SelfCheckSummary(BaseModel):
    results: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]
