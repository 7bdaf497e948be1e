"""Cell-centered and edge-centered periodic grid functions on a square domain.

The domain is the square (0, L) x (0, L) covered by an N x N uniform grid
with mesh size h = L/N.  Cell centers sit at ((i+1/2)h, (j+1/2)h) for
0-based indices i, j; edge midpoints sit halfway between neighbouring cell
centers.  Periodic wrap is realized by modular index arithmetic (no ghost
layers), so storage index i and i +/- N address the same value.

Inner products and norms follow the staggered-grid convention: the raw
pairing (phi||psi) = sum_ij phi_ij psi_ij is unweighted, the L2 pairing is
h^2 (phi||psi), and

    ||phi||_2 = sqrt(h^2 (phi||phi)),     ||phi||_4 = (h^2 sum phi^4)^(1/4).

All reductions accumulate pairwise in extended precision (long double) so
energy-monotonicity checks are not limited by summation error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GeometryMismatchError


def _reduce(values: np.ndarray) -> float:
    # Pairwise summation in the widest native float type.
    return float(np.sum(values, dtype=np.longdouble))


@dataclass(frozen=True)
class GridGeometry:
    """Uniform N x N periodic grid on the square (0, length)^2."""

    n: int
    length: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"grid needs at least 2 cells per axis, got {self.n}")
        if not (self.length > 0.0 and np.isfinite(self.length)):
            raise ValueError(f"domain edge length must be positive, got {self.length}")

    @property
    def h(self) -> float:
        """Mesh size length/n."""
        return self.length / self.n

    @property
    def area(self) -> float:
        """Measure of the domain, length^2."""
        return self.length * self.length

    def cell_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of cell centers: 1D arrays x_i = (i+1/2)h."""
        c = (np.arange(self.n) + 0.5) * self.h
        return c, c.copy()

    def vertex_coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Coordinates of grid vertices: 1D arrays v_i = i*h (i = 0..n-1, periodic)."""
        v = np.arange(self.n) * self.h
        return v, v.copy()


def _freeze(values: np.ndarray) -> np.ndarray:
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class Field:
    """Cell-centered periodic grid function; immutable after construction."""

    geometry: GridGeometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        n = self.geometry.n
        if values.shape != (n, n):
            raise ValueError(f"expected values of shape ({n}, {n}), got {values.shape}")
        if not np.isfinite(values).all():
            raise ValueError("field values must be finite (no NaN/Inf)")
        if values.base is not None or values.flags.writeable:
            values = values.copy()
        object.__setattr__(self, "values", _freeze(values))

    @classmethod
    def from_values(cls, geometry: GridGeometry, values) -> "Field":
        return cls(geometry, np.array(values, dtype=np.float64))

    @classmethod
    def constant(cls, geometry: GridGeometry, value: float) -> "Field":
        return cls(geometry, np.full((geometry.n, geometry.n), float(value)))

    @classmethod
    def zeros(cls, geometry: GridGeometry) -> "Field":
        return cls.constant(geometry, 0.0)

    def at(self, i: int, j: int) -> float:
        """Value at (possibly out-of-range) indices, resolved by periodic wrap."""
        n = self.geometry.n
        return float(self.values[i % n, j % n])


@dataclass(frozen=True)
class EdgeField:
    """Edge-centered periodic vector field.

    ``x[i, j]`` lives on the vertical edge between cells (i, j) and (i+1, j);
    ``y[i, j]`` on the horizontal edge between cells (i, j) and (i, j+1).
    """

    geometry: GridGeometry
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.geometry.n
        for name in ("x", "y"):
            comp = np.asarray(getattr(self, name), dtype=np.float64)
            if comp.shape != (n, n):
                raise ValueError(f"expected {name}-component of shape ({n}, {n}), got {comp.shape}")
            if not np.isfinite(comp).all():
                raise ValueError("edge field values must be finite (no NaN/Inf)")
            if comp.base is not None or comp.flags.writeable:
                comp = comp.copy()
            object.__setattr__(self, name, _freeze(comp))


def require_same_geometry(a, b) -> GridGeometry:
    if a.geometry != b.geometry:
        raise GeometryMismatchError(f"geometry mismatch: {a.geometry} vs {b.geometry}")
    return a.geometry


def inner_product(phi: Field, psi: Field) -> float:
    """Unweighted pairing (phi||psi) = sum_ij phi_ij psi_ij.

    The L2 pairing is h^2 times this value; callers supply the weight.
    """
    require_same_geometry(phi, psi)
    return _reduce(phi.values * psi.values)


def edge_inner_x(f: np.ndarray, g: np.ndarray) -> float:
    """Edge pairing [f||g]_x = (1/2) sum_ij (f g at i+1/2 + f g at i-1/2).

    For periodic data both half-sums run over the same edge set, so this
    equals the plain sum; the averaged form is kept for the operator
    identity checks.
    """
    return 0.5 * (_reduce(f * g) + _reduce(np.roll(f, 1, axis=0) * np.roll(g, 1, axis=0)))


def edge_inner_y(f: np.ndarray, g: np.ndarray) -> float:
    """Edge pairing [f||g]_y, the y-direction analogue of [f||g]_x."""
    return 0.5 * (_reduce(f * g) + _reduce(np.roll(f, 1, axis=1) * np.roll(g, 1, axis=1)))


def edge_inner_product(f: EdgeField, g: EdgeField) -> float:
    """Vector pairing [f^x||g^x]_x + [f^y||g^y]_y used by summation by parts."""
    require_same_geometry(f, g)
    return edge_inner_x(f.x, g.x) + edge_inner_y(f.y, g.y)


def mean(phi: Field) -> float:
    """Average value (phi||1)/N^2."""
    return _reduce(phi.values) / phi.geometry.n**2


def project_zero_mean(phi: Field) -> Field:
    """Subtract the mean, returning the zero-mass part of the field."""
    return Field(phi.geometry, phi.values - mean(phi))


def norm2(phi: Field) -> float:
    """Discrete L2 norm ||phi||_2 = sqrt(h^2 (phi||phi))."""
    return phi.geometry.h * np.sqrt(_reduce(phi.values * phi.values))


def norm4(phi: Field) -> float:
    """Discrete L4 norm ||phi||_4 = (h^2 sum phi^4)^(1/4)."""
    return (phi.geometry.h**2 * _reduce(phi.values**4)) ** 0.25
