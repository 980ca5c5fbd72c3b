"""Electrostatic solves: 1D cumulative field and the multi-D Riesz gradient.

In one dimension the field is the cumulative integral of the charge
difference anchored to zero at the left boundary.  In several dimensions
the perturbed field grad(phi) = grad(Laplacian^-1) K is computed with a
mixed representation: Fourier transform on the periodic transverse axes
and, per transverse mode, a tridiagonal (Numerov) two-point solve in x1
with decaying Robin conditions; fully periodic test boxes fall back to a
pure spectral inversion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.linalg import solve_banded

from .core import (
    DomainError,
    ParameterError,
    ScalarField,
    SolvabilityError,
    VectorField,
    derivative,
    lp_norm,
)

ZERO_MODE_TOL = 1e-6


@dataclass
class ElectroSolution:
    """Field gradient with the interior residual of the discrete solve."""

    grad_phi: VectorField
    residual_norm: float
    phi: ScalarField


def solve_E_1d(rho_p: ScalarField, rho_m: ScalarField) -> ScalarField:
    """E(x1) with dE/dx1 = rho_p - rho_m and E = 0 at the left boundary."""
    if rho_p.grid.dims != 1:
        raise ParameterError("solve_E_1d expects one-dimensional fields")
    diff = rho_p.values - rho_m.values
    scale = max(1.0, float(np.max(np.abs(diff))) if diff.size else 1.0)
    if abs(diff[0]) > 1e-8 * scale:
        raise DomainError(
            f"charge difference does not decay at the left boundary ({diff[0]:.3e})"
        )
    e = cumulative_trapezoid(diff, dx=rho_p.grid.spacing[0], initial=0.0)
    return rho_p.with_values(e)


def _line_integrals(K: ScalarField) -> np.ndarray:
    return K.values.sum(axis=0) * K.grid.spacing[0]


def _check_zero_mode(K: ScalarField, tol: float):
    lines = np.atleast_1d(_line_integrals(K))
    defect = abs(float(lines.mean()))
    if defect > tol * max(1.0, float(np.max(np.abs(K.values)))):
        worst = np.unravel_index(int(np.argmax(np.abs(lines))), lines.shape)
        raise SolvabilityError(
            f"zero transverse mode carries net charge {defect:.3e} "
            f"(worst line at transverse index {tuple(int(i) for i in worst)}); "
            "a decaying far field requires zero net line charge"
        )


def _spectral_solve(K: ScalarField):
    grid = K.grid
    ksq = grid.radial_wavenumbers() ** 2
    hat = np.fft.fftn(K.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_hat = np.where(ksq > 0.0, -hat / ksq, 0.0)
    phi = np.fft.ifftn(phi_hat).real
    recon = np.fft.ifftn(-ksq * phi_hat).real
    residual = float(np.max(np.abs(recon - (K.values - K.values.mean()))))
    return ScalarField(grid, phi), residual


def _numerov_solve(K: ScalarField):
    grid = K.grid
    n1 = grid.points[0]
    if n1 < 8:
        raise ParameterError("x1 axis needs at least 8 points")
    h = grid.spacing[0]
    taxes = tuple(range(1, grid.dims))
    tshape = grid.shape[1:]

    if grid.dims == 1:
        ghat = K.values[:, None].astype(complex)
        csq = np.zeros(1)
    else:
        ghat = np.fft.rfftn(K.values, axes=taxes)
        mesh = np.meshgrid(
            *[grid.wavenumbers(ax) for ax in taxes[:-1]],
            2.0 * np.pi * np.fft.rfftfreq(grid.points[-1], d=grid.spacing[-1]),
            indexing="ij",
        )
        csq = sum(k * k for k in mesh).reshape(-1)
        ghat = ghat.reshape(n1, -1)

    nmodes = csq.size
    phi_hat = np.empty_like(ghat)
    gamma = h * h * csq / 12.0
    for m in range(nmodes):
        g = ghat[:, m]
        rhs = np.zeros(n1, dtype=complex)
        rhs[1:-1] = h * h * (g[2:] + 10.0 * g[1:-1] + g[:-2]) / 12.0
        ab = np.zeros((3, n1), dtype=complex)
        ab[0, 2:] = 1.0 - gamma[m]          # superdiagonal, interior rows
        ab[1, 1:-1] = -(2.0 + 10.0 * gamma[m])
        ab[2, :-2] = 1.0 - gamma[m]         # subdiagonal, interior rows
        c = np.sqrt(csq[m])
        if csq[m] > 0.0:
            ab[1, 0] = -1.0 - c * h / 2.0   # phi' = +c phi at the left end
            ab[0, 1] = 1.0 - c * h / 2.0
            ab[1, -1] = 1.0 + c * h / 2.0   # phi' = -c phi at the right end
            ab[2, -2] = -1.0 + c * h / 2.0
        else:
            ab[1, 0] = 1.0                  # anchor the free constant
            ab[0, 1] = 0.0
            ab[1, -1] = 1.0                 # zero-slope far field
            ab[2, -2] = -1.0
        phi_hat[:, m] = solve_banded((1, 1), ab, rhs)

    # independent re-application of the interior stencil
    res_hat = np.zeros_like(phi_hat)
    gam = gamma[None, :]
    res_hat[1:-1] = (
        (1.0 - gam) * (phi_hat[2:] + phi_hat[:-2])
        - (2.0 + 10.0 * gam) * phi_hat[1:-1]
    ) / (h * h) - (ghat[2:] + 10.0 * ghat[1:-1] + ghat[:-2]) / 12.0

    if grid.dims == 1:
        phi = phi_hat[:, 0].real
        res = res_hat[:, 0].real
    else:
        phi = np.fft.irfftn(phi_hat.reshape((n1,) + ghat_shape(tshape)), s=tshape, axes=taxes)
        res = np.fft.irfftn(res_hat.reshape((n1,) + ghat_shape(tshape)), s=tshape, axes=taxes)
    residual = float(np.max(np.abs(res[1:-1]))) if n1 > 2 else 0.0
    return ScalarField(grid, phi), residual


def ghat_shape(tshape: tuple) -> tuple:
    return tshape[:-1] + (tshape[-1] // 2 + 1,)


def riesz_gradient(K: ScalarField, zero_mode_tol: float = ZERO_MODE_TOL) -> ElectroSolution:
    """Solve Laplacian(phi) = K with a decaying far field and return grad(phi)."""
    _check_zero_mode(K, zero_mode_tol)
    if K.grid.fully_periodic:
        phi, residual = _spectral_solve(K)
    else:
        phi, residual = _numerov_solve(K)
    comps = [derivative(phi, ax, 1).values for ax in range(K.grid.dims)]
    grad = VectorField(K.grid, np.stack(comps))
    return ElectroSolution(grad_phi=grad, residual_norm=residual, phi=phi)


def hls_ratio(K: ScalarField) -> float:
    """Norm ratio |grad phi|_L6 / |K|_L2 in three dimensions."""
    if K.grid.dims != 3:
        raise ParameterError("hls_ratio is defined for three-dimensional fields")
    denom = lp_norm(K, 2)
    if denom == 0.0:
        raise DomainError("hls_ratio is undefined for identically zero charge")
    sol = riesz_gradient(K)
    return lp_norm(sol.grad_phi, 6) / denom


def farfield_magnitude(sol: ElectroSolution) -> float:
    """Largest |grad phi| on the two x1 boundary slabs."""
    g = sol.grad_phi.values
    return float(max(np.max(np.abs(g[:, 0])), np.max(np.abs(g[:, -1]))))
