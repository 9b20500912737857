"""
Golden values: oracle estimates frozen next to the command that reproduces them.

Entries without an estimate are recorded with
``python main.py oracle --freeze-goldens <path>``, which runs each entry's
oracle and writes the estimate and standard error back in place.
"""

import json
import os
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from config import Config
from utils.data_structures import Kernel, OracleEstimate
from utils.logging_utils import log_step
from numerics.kernels import (
    absolute_moment_along,
    first_radial_moment,
    halfspace_mass,
    kernel_total_mass,
    make_bump_kernel,
    slice_integral,
)
from lab import oracles

ANISOTROPY = [[1.5, 0.0], [0.0, 1.0]]
ANISOTROPIC_CONFIG = "configs/anisotropic_theta.cfg"

# m0 = pi * (exp(-1) - E1(1)), the raw mass of the 2-D bump
REFERENCE_MASS_2D = 0.466512393178


class GoldenValue(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str
    quantity: Literal["halfspace", "slice", "moment", "mass", "radial_moment"]
    kernel: Literal["radial", "anisotropic", "unnormalized"] = "radial"
    nu: Optional[List[float]] = None
    t: Optional[float] = None
    # quadrature order for the deterministic radial_moment oracle
    samples: int = Field(Config.ORACLE_SAMPLES, ge=2)
    seed: int = Config.ORACLE_SEED
    estimate: Optional[float] = None
    standard_error: Optional[float] = Field(None, ge=0.0)
    command: str = ""

    @property
    def is_frozen(self) -> bool:
        return self.estimate is not None and self.standard_error is not None

    def reproduction_command(self) -> str:
        parts = ["python main.py oracle"]
        if self.kernel == "anisotropic":
            parts.append(f"--config {ANISOTROPIC_CONFIG}")
        parts.append(f"--quantity {self.quantity}")
        if self.nu is not None:
            parts.append("--nu " + ",".join(f"{x:g}" for x in self.nu))
        if self.t is not None:
            parts.append(f"--t {self.t:g}")
        parts.append(f"--samples {self.samples} --seed {self.seed}")
        if self.kernel == "unnormalized":
            parts.append("--unnormalized")
        return " ".join(parts)

    def frozen(self) -> OracleEstimate:
        if not self.is_frozen:
            raise ValueError(f"Golden value '{self.name}' has not been recorded")
        return OracleEstimate(quantity=self.quantity, estimate=self.estimate,
                              standard_error=self.standard_error, samples=self.samples,
                              seed=self.seed, command=self.command)


def golden_kernel(entry: GoldenValue) -> Kernel:
    if entry.kernel == "anisotropic":
        return make_bump_kernel(2, ANISOTROPY)
    return make_bump_kernel(2, normalize=entry.kernel != "unnormalized")


def run_oracle(entry: GoldenValue) -> OracleEstimate:
    """The oracle behind one golden entry, at the recorded sample count and seed."""
    K = golden_kernel(entry)
    if entry.quantity == "halfspace":
        return oracles.mc_halfspace_oracle(K, entry.nu, entry.t, entry.samples, entry.seed)
    if entry.quantity == "slice":
        return oracles.mc_slice_oracle(K, entry.nu, entry.t, entry.samples, entry.seed)
    if entry.quantity == "moment":
        return oracles.mc_moment_oracle(K, entry.nu, entry.samples, entry.seed)
    if entry.quantity == "mass":
        return oracles.mc_mass_oracle(K, entry.samples, entry.seed)
    return oracles.radial_moment_oracle(K, order=entry.samples)


def quadrature_value(entry: GoldenValue) -> float:
    """The quadrature the golden value checks."""
    K = golden_kernel(entry)
    if entry.quantity == "halfspace":
        return halfspace_mass(K, entry.nu, entry.t)
    if entry.quantity == "slice":
        return slice_integral(K, entry.nu, entry.t)
    if entry.quantity == "moment":
        return absolute_moment_along(K, entry.nu)
    if entry.quantity == "mass":
        return kernel_total_mass(K, Config.REFERENCE_MASS_ORDER)
    return first_radial_moment(K)


def load_goldens(path: str) -> List[GoldenValue]:
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    entries = [GoldenValue(**item) for item in payload["goldens"]]
    for entry in entries:
        if entry.command != entry.reproduction_command():
            raise ValueError(f"Golden '{entry.name}' records '{entry.command}', "
                             f"expected '{entry.reproduction_command()}'")
    return entries


def save_goldens(path: str, entries: List[GoldenValue]):
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    payload = {"goldens": [entry.model_dump() for entry in entries]}
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def freeze_goldens(path: str, refresh: bool = False) -> Dict[str, OracleEstimate]:
    """Run the oracle for every unrecorded entry (all of them with ``refresh``) and save."""
    entries = load_goldens(path)
    recorded = {}
    for i, entry in enumerate(entries):
        if entry.is_frozen and not refresh:
            continue
        estimate = run_oracle(entry)
        entries[i] = entry.model_copy(update={"estimate": estimate.estimate,
                                              "standard_error": estimate.standard_error})
        recorded[entry.name] = estimate
        log_step("ORACLE", f"Golden {entry.name} = {estimate.estimate:.15g} +- {estimate.standard_error:.3e}")
    save_goldens(path, entries)
    return recorded
