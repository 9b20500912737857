"""
Numerics module for the perimeter lab: kernels, profiles, shapes,
the nonlocal functional F_eps and the limit density.
"""

from .kernels import make_bump_kernel, kernel_total_mass, halfspace_mass, slice_integral
from .profiles import builtin_profile, check_profile
from .shapes import Ball, Box, Slab, Graph, rasterize, boundary_quadrature
from .nonlocal_energy import ResolutionError, build_stencil, eval_F_eps
from .density import DensityContext, theta, theta_many, theta_tilde, theta_tilde_many, limit_functional

__all__ = [
    'make_bump_kernel', 'kernel_total_mass', 'halfspace_mass', 'slice_integral',
    'builtin_profile', 'check_profile',
    'Ball', 'Box', 'Slab', 'Graph', 'rasterize', 'boundary_quadrature',
    'ResolutionError', 'build_stencil', 'eval_F_eps',
    'DensityContext', 'theta', 'theta_many', 'theta_tilde', 'theta_tilde_many', 'limit_functional',
]
