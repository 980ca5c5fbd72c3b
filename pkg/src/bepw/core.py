"""Grids, pressure laws, field containers, discrete norms and spectral filters.

The shared numerical substrate for the whole laboratory: uniform tensor
grids (a truncated real line in the first axis plus periodic transverse
axes, or fully periodic test boxes), scalar and vector fields over them,
discrete L^p norms, high-order derivatives, and the smooth low/high
frequency splitting used by the kernel estimates and the high-frequency
energy diagnostics.

All operations are pure: they read immutable snapshots and return new
containers.  Frequencies follow the physical convention xi = 2*pi*k/L per
axis, so cutoff radii can be compared directly against wave-speed bounds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class BepwError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(BepwError):
    """A parameter is outside the supported range."""


class DomainError(BepwError):
    """Field data violates a mathematical precondition (positivity, decay, ...)."""


class ConvergenceError(BepwError):
    """An iterative solver failed to converge."""


class SolvabilityError(BepwError):
    """A solve has no admissible solution for the given data."""


# ---------------------------------------------------------------------------
# pressure law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PressureLaw:
    """Barotropic gamma-law pressure P(rho) = kappa * rho**gamma."""

    kappa: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if self.kappa <= 0.0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        if self.gamma < 1.0:
            raise ParameterError(f"gamma must be >= 1, got {self.gamma}")

    def p(self, rho):
        return self.kappa * np.asarray(rho, dtype=float) ** self.gamma

    def dp(self, rho):
        """P'(rho) = kappa*gamma*rho**(gamma-1); the squared sound speed."""
        return self.kappa * self.gamma * np.asarray(rho, dtype=float) ** (self.gamma - 1.0)

    def d2p(self, rho):
        g = self.gamma
        return self.kappa * g * (g - 1.0) * np.asarray(rho, dtype=float) ** (g - 2.0)


def _check_positive_density(rho: np.ndarray):
    arr = np.asarray(rho)
    if np.any(arr <= 0.0):
        idx = np.unravel_index(int(np.argmin(arr)), arr.shape)
        raise DomainError(
            f"non-positive density {arr[idx]:.6g} at node {tuple(int(i) for i in idx)}"
        )


def pressure(law: PressureLaw, rho):
    """Evaluate P(rho) pointwise on a scalar, array, or ScalarField."""
    if isinstance(rho, ScalarField):
        _check_positive_density(rho.values)
        return rho.with_values(law.p(rho.values))
    _check_positive_density(np.asarray(rho, dtype=float))
    out = law.p(rho)
    return float(out) if np.ndim(rho) == 0 else out


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Uniform tensor grid in 1, 2 or 3 dimensions.

    Axis 0 spans [x_min, x_max) with ``points[0]`` nodes; it is an open-line
    truncation unless ``periodic_x1`` is set (fully periodic test boxes).
    Axes 1..dims-1 are periodic with the given lengths and power-of-two
    point counts.  Nodes sit at x_min + i*h (half-open convention), so
    spacing * points equals the extent on every axis.
    """

    dims: int
    points: tuple
    x1_extent: tuple
    lengths: tuple = ()
    periodic_x1: bool = False

    def __post_init__(self):
        if self.dims not in (1, 2, 3):
            raise ParameterError(f"dims must be 1, 2 or 3, got {self.dims}")
        pts = tuple(int(n) for n in np.atleast_1d(self.points))
        if len(pts) != self.dims:
            raise ParameterError(f"need {self.dims} point counts, got {pts}")
        if any(n < 1 for n in pts):
            raise ParameterError(f"point counts must be positive, got {pts}")
        lo, hi = float(self.x1_extent[0]), float(self.x1_extent[1])
        if not hi > lo:
            raise ParameterError(f"empty axis-0 extent {self.x1_extent}")
        lens = tuple(float(L) for L in self.lengths)
        if len(lens) != self.dims - 1:
            raise ParameterError(f"need {self.dims - 1} periodic lengths, got {lens}")
        if any(L <= 0 for L in lens):
            raise ParameterError(f"periodic lengths must be positive, got {lens}")
        for ax, n in enumerate(pts):
            if self.is_periodic(ax) and not _is_pow2(n):
                raise ParameterError(
                    f"axis {ax} is periodic and needs a power-of-two point count, got {n}"
                )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "x1_extent", (lo, hi))
        object.__setattr__(self, "lengths", lens)

    # -- geometry -----------------------------------------------------------

    @property
    def shape(self) -> tuple:
        return self.points

    def extent(self, axis: int) -> float:
        self._check_axis(axis)
        if axis == 0:
            return self.x1_extent[1] - self.x1_extent[0]
        return self.lengths[axis - 1]

    @property
    def spacing(self) -> tuple:
        return tuple(self.extent(ax) / self.points[ax] for ax in range(self.dims))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def is_periodic(self, axis: int) -> bool:
        self._check_axis(axis)
        return axis > 0 or self.periodic_x1

    @property
    def fully_periodic(self) -> bool:
        return self.periodic_x1

    def coords(self, axis: int) -> np.ndarray:
        self._check_axis(axis)
        h = self.spacing[axis]
        x0 = self.x1_extent[0] if axis == 0 else 0.0
        return x0 + h * np.arange(self.points[axis])

    def wavenumbers(self, axis: int) -> np.ndarray:
        """Physical frequencies xi = 2*pi*k/L along one axis."""
        self._check_axis(axis)
        n = self.points[axis]
        return 2.0 * np.pi * np.fft.fftfreq(n, d=self.spacing[axis])

    def radial_wavenumbers(self) -> np.ndarray:
        """|xi| on the full tensor frequency grid."""
        axes = [self.wavenumbers(ax) for ax in range(self.dims)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.sqrt(sum(k * k for k in mesh))

    def _check_axis(self, axis: int):
        if not 0 <= axis < self.dims:
            raise ParameterError(f"axis {axis} out of range for a {self.dims}-d grid")


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

def _assert_finite(values: np.ndarray, what: str):
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise DomainError(f"non-finite value in {what} at node {tuple(int(i) for i in bad)}")


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ParameterError(
                f"field shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        _assert_finite(self.values, "scalar field")

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    grid: Grid
    values: np.ndarray  # shape (dims,) + grid.shape, one component per axis

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        want = (self.grid.dims,) + self.grid.shape
        if self.values.shape != want:
            raise ParameterError(f"vector shape {self.values.shape}, expected {want}")
        _assert_finite(self.values, "vector field")

    def component(self, axis: int) -> ScalarField:
        self.grid._check_axis(axis)
        return ScalarField(self.grid, self.values[axis])

    def with_values(self, values) -> "VectorField":
        return VectorField(self.grid, values)

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.values.copy())


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def lp_norm(f, p: float) -> float:
    """Discrete L^p norm (Riemann sum with cell-volume weight; max for p=inf).

    Vector fields are measured through their pointwise Euclidean magnitude.
    """
    if isinstance(f, VectorField):
        mag = np.sqrt(np.sum(f.values * f.values, axis=0))
    elif isinstance(f, ScalarField):
        mag = np.abs(f.values)
    else:
        raise ParameterError(f"lp_norm expects a field, got {type(f).__name__}")
    p = float(p)
    if math.isinf(p):
        return float(np.max(mag)) if mag.size else 0.0
    if p < 1.0:
        raise ParameterError(f"p must satisfy p >= 1 or p = inf, got {p}")
    vol = f.grid.cell_volume
    return float((np.sum(mag ** p) * vol) ** (1.0 / p))


# ---------------------------------------------------------------------------
# derivatives
# ---------------------------------------------------------------------------

# 4th-order one-sided closures; rows are offsets from the boundary node.
_D1_EDGE = np.array(
    [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
    ]
) / 12.0

_D2_EDGE = np.array(
    [
        [45.0, -154.0, 214.0, -156.0, 61.0, -10.0],
        [10.0, -15.0, -4.0, 14.0, -6.0, 1.0],
    ]
) / 12.0


def _fd_derivative_1d(v: np.ndarray, h: float, order: int) -> np.ndarray:
    """4th-order finite differences along the last axis with one-sided ends."""
    out = np.empty_like(v)
    if order == 1:
        out[..., 2:-2] = (
            -v[..., 4:] + 8.0 * v[..., 3:-1] - 8.0 * v[..., 1:-3] + v[..., :-4]
        ) / (12.0 * h)
        edge = _D1_EDGE
        npt, scale = 5, 12.0 * h
    else:
        out[..., 2:-2] = (
            -v[..., 4:] + 16.0 * v[..., 3:-1] - 30.0 * v[..., 2:-2]
            + 16.0 * v[..., 1:-3] - v[..., :-4]
        ) / (12.0 * h * h)
        edge = _D2_EDGE
        npt, scale = 6, 12.0 * h * h
    for row in (0, 1):
        out[..., row] = np.tensordot(v[..., :npt], edge[row] * 12.0 / scale, axes=([-1], [0]))
        out[..., -1 - row] = np.tensordot(
            v[..., -npt:][..., ::-1],
            edge[row] * (12.0 / scale) * ((-1.0) ** order),
            axes=([-1], [0]),
        )
    return out


def derivative(f: ScalarField, axis: int, order: int = 1) -> ScalarField:
    """Differentiate along one axis: spectral on periodic axes, 4th-order
    centered differences with one-sided closures on the open axis."""
    grid = f.grid
    grid._check_axis(axis)
    if order not in (1, 2):
        raise ParameterError(f"order must be 1 or 2, got {order}")
    if grid.points[axis] < 8:
        raise ParameterError(f"axis {axis} needs at least 8 points, has {grid.points[axis]}")
    if grid.is_periodic(axis):
        k = grid.wavenumbers(axis)
        mult = (1j * k) if order == 1 else -(k * k)
        shape = [1] * grid.dims
        shape[axis] = k.size
        hat = np.fft.fft(f.values, axis=axis) * mult.reshape(shape)
        vals = np.fft.ifft(hat, axis=axis).real
    else:
        moved = np.moveaxis(f.values, axis, -1)
        vals = np.moveaxis(_fd_derivative_1d(moved, grid.spacing[axis], order), -1, axis)
    return f.with_values(vals)


# ---------------------------------------------------------------------------
# frequency decomposition
# ---------------------------------------------------------------------------

def eps0(mu_max: float) -> float:
    """Largest admissible cutoff radius for a frozen coefficient bounded by mu_max."""
    if mu_max <= 0.0:
        raise ParameterError(f"mu_max must be positive, got {mu_max}")
    return 0.5 * min(1.0, math.sqrt(1.0 / (4.0 * mu_max)))


def cutoff_chi(xi_norm, eps: float):
    """Radial cutoff: 1 below eps, 0 above 2*eps, quintic smoothstep between."""
    if eps <= 0.0:
        raise ParameterError(f"eps must be positive, got {eps}")
    r = np.clip((np.asarray(xi_norm, dtype=float) - eps) / eps, 0.0, 1.0)
    return 1.0 - r * r * r * (10.0 - 15.0 * r + 6.0 * r * r)


def _filter(f: ScalarField, eps: float, mu_max, low: bool) -> ScalarField:
    if mu_max is not None and eps >= eps0(mu_max):
        raise ParameterError(
            f"cutoff eps={eps:.6g} must lie below eps0={eps0(mu_max):.6g} "
            f"(real-root threshold for coefficient bound {mu_max:.6g})"
        )
    chi = cutoff_chi(f.grid.radial_wavenumbers(), eps)
    if not low:
        chi = 1.0 - chi
    vals = np.fft.ifftn(np.fft.fftn(f.values) * chi).real
    return f.with_values(vals)


def low_pass(f: ScalarField, eps: float, mu_max: float | None = None) -> ScalarField:
    """Keep the smooth low-frequency part chi(D) f of a field."""
    return _filter(f, eps, mu_max, low=True)


def high_pass(f: ScalarField, eps: float, mu_max: float | None = None) -> ScalarField:
    """Complement (1 - chi(D)) f; low_pass + high_pass recovers f."""
    return _filter(f, eps, mu_max, low=False)
