"""
Interaction profiles f on [0, 1] and checks of their standing assumptions.
"""

from typing import List, Optional

import numpy as np

from config import Config
from utils.data_structures import Profile, ProfileViolation
from utils.logging_utils import log_step

BUILTIN_PROFILES = ("identity", "power", "expm1", "saturating", "zero")

_EXPM1_ONE = float(np.expm1(1.0))


def builtin_profile(name: str, parameter: Optional[float] = None) -> Profile:
    """
    Look up a builtin profile.

    identity: t; power: t^p (p >= 1); expm1: (e^t - 1)/(e - 1);
    saturating: 2t/(1+t); zero: 0.
    """
    key = name.strip().lower()

    if key == "identity":
        return Profile("identity", lambda t: np.array(t, dtype=float, copy=True), True, True)

    if key == "power":
        if parameter is None:
            raise ValueError("Profile 'power' requires a parameter p >= 1")
        p = float(parameter)
        if not p >= 1.0:
            raise ValueError(f"Profile 'power' requires p >= 1, got {parameter}")
        return Profile("power", lambda t: np.power(t, p), True, True, parameter=p)

    if key == "expm1":
        return Profile("expm1", lambda t: np.expm1(t) / _EXPM1_ONE, True, True)

    if key == "saturating":
        return Profile("saturating", lambda t: 2.0 * t / (1.0 + t), False, True)

    if key == "zero":
        return Profile("zero", lambda t: np.zeros_like(t, dtype=float), True, True)

    raise ValueError(f"Unknown profile '{name}'. Available: {', '.join(BUILTIN_PROFILES)}")


def check_profile(f: Profile, samples: int = 100) -> List[ProfileViolation]:
    """
    Check f(0) = 0, monotonicity on a uniform grid and, when claimed,
    midpoint convexity on every pair of grid points.

    Violations are returned, never raised.
    """
    if samples < 2:
        raise ValueError(f"samples must be >= 2, got {samples}")

    violations: List[ProfileViolation] = []

    f0 = float(f(np.array([0.0]))[0])
    if f0 != 0.0:
        violations.append(ProfileViolation(kind="f0", location=[0.0], detail=f"f(0) = {f0!r}"))

    grid = np.linspace(0.0, 1.0, samples)
    values = f(grid)

    drops = np.nonzero(np.diff(values) < 0.0)[0]
    for i in drops:
        violations.append(ProfileViolation(
            kind="monotone",
            location=[float(grid[i]), float(grid[i + 1])],
            detail=f"f decreases from {values[i]:.6g} to {values[i + 1]:.6g}",
        ))

    if f.convex_flag:
        i, j = np.triu_indices(samples, k=1)
        mid = f(0.5 * (grid[i] + grid[j]))
        excess = mid - 0.5 * (values[i] + values[j])
        for k in np.nonzero(excess > Config.PROFILE_CONVEXITY_TOL)[0]:
            violations.append(ProfileViolation(
                kind="convexity",
                location=[float(grid[i[k]]), float(grid[j[k]])],
                detail=f"midpoint excess {excess[k]:.3g}",
            ))

    if violations:
        log_step("PROFILES", f"Profile '{f.name}' has {len(violations)} violation(s)", level="warning")
    return violations
