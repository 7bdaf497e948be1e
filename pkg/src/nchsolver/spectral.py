"""Discrete differential operators on the periodic staggered grid.

The gradient maps cell values to edge values by forward differences, the
divergence maps edge values back by backward differences, and the Laplacian
is their composition -- the standard 5-point periodic stencil.  All three
are circulant, hence diagonal in the discrete Fourier basis: the mode
(k, l) of minus the Laplacian carries the eigenvalue

    lambda_{k,l} = (2/h^2) (2 - cos(2 pi k / N) - cos(2 pi l / N)) >= 0,

with a simple zero at the constant mode (k = l = 0).  On zero-mean fields
minus the Laplacian is invertible; the inverse and the induced negative
norm ||u||_{-1} = sqrt(h^2 ((-Lap)^{-1} u || u)) are computed by dividing
DFT coefficients by lambda and zeroing the constant mode.

The dense matrix of minus the Laplacian is never assembled here; it exists
only in the test oracles that validate these symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonZeroMeanError
from .grid import EdgeField, Field, GridGeometry, mean, norm2

# Relative tolerance under which a nominally zero-mean input is accepted
# and silently projected before inverting the Laplacian.
ZERO_MEAN_RTOL = 1e-12


def laplacian_eigenvalues(geometry: GridGeometry) -> np.ndarray:
    """Eigenvalues of minus the discrete Laplacian, indexed by DFT mode (k, l)."""
    n, h = geometry.n, geometry.h
    c = np.cos(2.0 * np.pi * np.arange(n) / n)
    return (2.0 / h**2) * (2.0 - np.add.outer(c, c))


@dataclass(frozen=True)
class SpectralCache:
    """Per-mode DFT symbols shared by solvers and norms.

    ``laplacian_symbol`` holds the symbol of the Laplacian (non-positive,
    zero exactly at the constant mode).  ``kernel_symbol`` optionally holds
    the symbol of a sampled interaction kernel's convolution operator.
    Immutable, safe to share across threads.
    """

    geometry: GridGeometry
    laplacian_symbol: np.ndarray = field(repr=False)
    kernel_symbol: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        sym = np.asarray(self.laplacian_symbol, dtype=np.float64)
        sym.setflags(write=False)
        object.__setattr__(self, "laplacian_symbol", sym)
        if self.kernel_symbol is not None:
            ks = np.asarray(self.kernel_symbol, dtype=np.float64)
            ks.setflags(write=False)
            object.__setattr__(self, "kernel_symbol", ks)

    @property
    def minus_laplacian_eigenvalues(self) -> np.ndarray:
        return -self.laplacian_symbol

    def with_kernel(self, kernel_symbol: np.ndarray) -> "SpectralCache":
        return SpectralCache(self.geometry, self.laplacian_symbol, kernel_symbol)


def make_cache(geometry: GridGeometry, kernel_symbol: Optional[np.ndarray] = None) -> SpectralCache:
    """Build the spectral cache for a grid (optionally carrying a kernel symbol)."""
    return SpectralCache(geometry, -laplacian_eigenvalues(geometry), kernel_symbol)


def gradient(phi: Field) -> EdgeField:
    """Center-to-edge forward differences (D_x phi, D_y phi)."""
    v, h = phi.values, phi.geometry.h
    gx = (np.roll(v, -1, axis=0) - v) / h
    gy = (np.roll(v, -1, axis=1) - v) / h
    return EdgeField(phi.geometry, gx, gy)


def divergence(f: EdgeField) -> Field:
    """Edge-to-center backward differences d_x f^x + d_y f^y."""
    h = f.geometry.h
    dx = (f.x - np.roll(f.x, 1, axis=0)) / h
    dy = (f.y - np.roll(f.y, 1, axis=1)) / h
    return Field(f.geometry, dx + dy)


def laplacian(phi: Field) -> Field:
    """5-point periodic Laplacian, realized exactly as divergence(gradient(phi))."""
    return divergence(gradient(phi))


def laplacian_apply(values: np.ndarray, h: float) -> np.ndarray:
    """Array-level 5-point Laplacian used in solver hot paths."""
    gx = (np.roll(values, -1, axis=0) - values) / h
    gy = (np.roll(values, -1, axis=1) - values) / h
    return (gx - np.roll(gx, 1, axis=0)) / h + (gy - np.roll(gy, 1, axis=1)) / h


def laplacian_spectral(phi: Field, cache: SpectralCache) -> Field:
    """Laplacian applied through its DFT symbol; equals the stencil to rounding."""
    out = np.fft.ifft2(np.fft.fft2(phi.values) * cache.laplacian_symbol).real
    return Field(phi.geometry, out)


def dft_forward(phi: Field) -> np.ndarray:
    """Forward 2D DFT of the field values (unnormalized, numpy convention)."""
    return np.fft.fft2(phi.values)


def dft_inverse(modes: np.ndarray, geometry: GridGeometry) -> Field:
    """Inverse 2D DFT; the (numerically tiny) imaginary residue is discarded."""
    return Field(geometry, np.fft.ifft2(modes).real)


def _zero_mean_values(phi: Field, what: str) -> np.ndarray:
    """Check the zero-mean precondition and return mean-projected values."""
    m = mean(phi)
    bound = ZERO_MEAN_RTOL * norm2(phi) / np.sqrt(phi.geometry.area)
    if abs(m) > bound:
        raise NonZeroMeanError(
            f"{what} is only defined for zero-mean fields: |mean| = {abs(m):.3e} "
            f"exceeds {bound:.3e}"
        )
    return phi.values - m


def inverse_laplacian_zero_mean(phi: Field, cache: SpectralCache) -> Field:
    """Solve -Lap(psi) = phi for the zero-mean psi, via the spectral inverse."""
    values = _zero_mean_values(phi, "the inverse Laplacian")
    lam = cache.minus_laplacian_eigenvalues
    modes = np.fft.fft2(values)
    out = np.zeros_like(modes)
    np.divide(modes, lam, out=out, where=lam > 0.0)
    return Field(phi.geometry, np.fft.ifft2(out).real)


def norm_neg1(phi: Field, cache: SpectralCache) -> float:
    """Negative-order norm ||phi||_{-1} = sqrt(h^2 ((-Lap)^{-1} phi || phi)).

    Defined for zero-mean fields only; inputs within the zero-mean tolerance
    are projected before inversion.
    """
    values = _zero_mean_values(phi, "the negative-order norm")
    lam = cache.minus_laplacian_eigenvalues
    modes = np.fft.fft2(values)
    power = (modes.real**2 + modes.imag**2)
    quad = np.sum(
        np.divide(power, lam, out=np.zeros_like(power), where=lam > 0.0),
        dtype=np.longdouble,
    )
    # Parseval: sum_ij psi phi = (1/N^2) sum_kl |phi_hat|^2 / lambda.
    n = phi.geometry.n
    return float(np.sqrt(phi.geometry.h**2 * quad / n**2))
