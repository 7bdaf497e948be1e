"""Double-well potentials and the discrete free energies they induce.

The bulk potential is the quartic double well F(r) = (1/4)(r^2 - 1)^2.  For
the linearly implicit schemes it is replaced by the C^2 truncation F_K that
continues quadratically outside [-K, K]; its second derivative is then
globally bounded by beta = 3K^2 - 1 (attained for |r| >= K).

The discrete free energy of a field u with interaction kernel J is

    E(u) = h^2 (F(u)||1) + (eps^2 [J(*)1] / 2) ||u||_2^2
           - (eps^2 / 2) h^2 (u || [J (*) u]),

reported with the full +|Omega|/4 constant carried by F itself so energy
traces are bit-comparable across schemes.  Two-step schemes dissipate
modified energies that add increment-dependent terms: (1/(4 tau)) times the
squared negative-order norm of the last increment, and for the linearly
implicit two-step variant additionally (beta/2) times its squared L2 norm.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError
from .grid import Field, inner_product, norm2, require_same_geometry
from .kernels import SampledKernel, convolve
from .spectral import SpectralCache, norm_neg1

POTENTIAL_VARIANTS = ("double_well", "truncated")


@dataclass(frozen=True)
class PotentialSpec:
    """Bulk potential selector: plain double well or its C^2 truncation at K."""

    variant: str = "double_well"
    cutoff: Optional[float] = None

    def __post_init__(self):
        if self.variant not in POTENTIAL_VARIANTS:
            raise ConfigError(f"unknown potential {self.variant!r}; expected one of {POTENTIAL_VARIANTS}")
        if self.variant == "truncated":
            if self.cutoff is None or not self.cutoff > 1.0:
                raise ConfigError(f"truncation point K must exceed 1, got {self.cutoff}")

    @property
    def curvature_bound(self) -> Optional[float]:
        """Global bound beta = 3K^2 - 1 on |F''| (truncated variant only)."""
        if self.variant == "truncated":
            return 3.0 * self.cutoff**2 - 1.0
        return None


DOUBLE_WELL = PotentialSpec("double_well")


def potential_value(spec: PotentialSpec, r):
    """F(r), elementwise."""
    r = np.asarray(r, dtype=np.float64)
    well = 0.25 * (r**2 - 1.0) ** 2
    if spec.variant == "double_well":
        return well
    k = spec.cutoff
    a = 0.5 * (3.0 * k**2 - 1.0)
    c = 0.25 * (3.0 * k**4 + 1.0)
    outer = a * r**2 - np.sign(r) * 2.0 * k**3 * r + c
    return np.where(np.abs(r) > k, outer, well)


def potential_d1(spec: PotentialSpec, r):
    """F'(r), elementwise."""
    r = np.asarray(r, dtype=np.float64)
    inner = r**3 - r
    if spec.variant == "double_well":
        return inner
    k = spec.cutoff
    outer = (3.0 * k**2 - 1.0) * r - np.sign(r) * 2.0 * k**3
    return np.where(np.abs(r) > k, outer, inner)


def potential_d2(spec: PotentialSpec, r):
    """F''(r), elementwise; bounded by 3K^2 - 1 for the truncated variant."""
    r = np.asarray(r, dtype=np.float64)
    inner = 3.0 * r**2 - 1.0
    if spec.variant == "double_well":
        return inner
    return np.where(np.abs(r) > spec.cutoff, 3.0 * spec.cutoff**2 - 1.0, inner)


def energy(u: Field, kernel: SampledKernel, epsilon: float, spec: PotentialSpec = DOUBLE_WELL) -> float:
    """Discrete free energy of u (with F replaced by F_K for a truncated spec)."""
    require_same_geometry(kernel, u)
    h2 = u.geometry.h**2
    bulk = h2 * float(np.sum(potential_value(spec, u.values), dtype=np.longdouble))
    conv_u = convolve(kernel, u)
    quad = 0.5 * epsilon**2 * (kernel.conv_one * norm2(u) ** 2 - h2 * inner_product(u, conv_u))
    return bulk + quad


def chemical_potential(u: Field, kernel: SampledKernel, epsilon: float,
                       spec: PotentialSpec = DOUBLE_WELL) -> Field:
    """Variational derivative F'(u) + eps^2 [J(*)1] u - eps^2 [J (*) u]."""
    require_same_geometry(kernel, u)
    conv_u = convolve(kernel, u)
    values = potential_d1(spec, u.values) + epsilon**2 * (kernel.conv_one * u.values - conv_u.values)
    return Field(u.geometry, values)


def modified_energy_two_step(u: Field, du: Field, tau: float, kernel: SampledKernel,
                             epsilon: float, cache: SpectralCache,
                             spec: PotentialSpec = DOUBLE_WELL) -> float:
    """Modified energy E(u) + (1/(4 tau)) ||du||_{-1}^2 dissipated by the two-step scheme.

    ``du`` must have zero mean (difference of equal-mass states); the
    negative-order norm's precondition propagates.
    """
    return energy(u, kernel, epsilon, spec) + norm_neg1(du, cache) ** 2 / (4.0 * tau)


def modified_energy_two_step_linear(u: Field, du: Field, tau: float, beta: float,
                                    kernel: SampledKernel, epsilon: float,
                                    cache: SpectralCache, spec: PotentialSpec) -> float:
    """Modified energy of the linearly implicit two-step scheme.

    Adds (beta/2) ||du||_2^2 on top of the two-step modified energy; ``spec``
    is expected to be the truncated potential whose curvature bound is beta.
    """
    base = modified_energy_two_step(u, du, tau, kernel, epsilon, cache, spec)
    return base + 0.5 * beta * norm2(du) ** 2
