"""Two-species compressible flow with friction and electrostatic coupling.

Time integration of the coupled system: per species, an Euler system with
linear momentum relaxation and an electric source of opposite polarity;
the field solves Gauss's law for the charge difference (cumulative
integral in 1D, mixed-representation Poisson solve in several
dimensions).

The step is Strang-split: half a source step, a full hyperbolic step,
half a source step.  The hyperbolic part is a dimension-by-dimension
MUSCL (minmod) reconstruction with a local Lax-Friedrichs flux advanced
by two-stage SSP Runge-Kutta; the source part integrates the relaxation
exactly and applies the electric impulse with the field frozen at the
substep start.  Ghost cells on the open axis carry the exact
time-dependent background (shifted profile and its Darcy momentum).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import snapio
from .core import (
    BepwError,
    DomainError,
    Grid,
    ParameterError,
    PressureLaw,
    ScalarField,
    VectorField,
    derivative,
    lp_norm,
)
from .electro import riesz_gradient, solve_E_1d
from .profile import (
    DiffusionProfile,
    ShiftField,
    darcy_momentum,
    eval_wave,
    shift_at,
)


class CflError(BepwError):
    """Requested time step exceeds the admissible stability bound."""


# ---------------------------------------------------------------------------
# configuration and state
# ---------------------------------------------------------------------------

@dataclass
class PerturbationSpec:
    """Initial bump added to both species' densities.

    ``width`` and ``center`` may be scalars (x1 only) or per-axis
    sequences; entries beyond the first describe a Gaussian transverse
    envelope.  ``species_sign`` multiplies the bump per species, so
    (1, -1) seeds a charge separation while (1, 1) keeps the species
    locked together.
    """

    shape: str = "dipole"  # "dipole" | "gaussian" | "none"
    amplitude: float = 0.0
    width: tuple | float = 1.0
    center: tuple | float = 0.0
    species_sign: tuple = (1.0, 1.0)

    def axis_width(self, axis: int) -> float:
        w = np.atleast_1d(self.width)
        return float(w[axis]) if axis < w.size else float(w[-1])

    def axis_center(self, axis: int) -> float:
        c = np.atleast_1d(self.center)
        return float(c[axis]) if axis < c.size else 0.0


@dataclass
class RunConfig:
    cfl: float = 0.45
    t_end: float = 10.0
    snapshot_stride: int = 16
    background: str = "auto"  # "auto" | "darcy" | "reference1d"
    keep_snapshots: bool = False
    out_dir: str | None = None
    run_id: str = "run"

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.9:
            raise ParameterError(f"cfl must lie in (0, 0.9], got {self.cfl}")
        if self.snapshot_stride < 1:
            raise ParameterError("snapshot_stride must be a positive step count")


@dataclass
class FluidState:
    t: float
    rho_p: ScalarField
    rho_m: ScalarField
    mom_p: VectorField
    mom_m: VectorField
    law: PressureLaw

    @property
    def grid(self) -> Grid:
        return self.rho_p.grid

    def mass(self) -> tuple:
        vol = self.grid.cell_volume
        return (float(self.rho_p.values.sum() * vol), float(self.rho_m.values.sum() * vol))


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def _gaussian(x, c, w):
    return np.exp(-((x - c) ** 2) / (2.0 * w * w))


def _x1_bump(grid: Grid, spec: PerturbationSpec) -> np.ndarray:
    """Mean-zero bump along x1 (a bump minus a compensating bump)."""
    x = grid.coords(0)
    a, w, c = spec.amplitude, spec.axis_width(0), spec.axis_center(0)
    if spec.shape == "none" or a == 0.0:
        return np.zeros_like(x)
    if spec.shape == "dipole":
        return a * (_gaussian(x, c + 2.0 * w, w) - _gaussian(x, c - 2.0 * w, w))
    if spec.shape == "gaussian":
        return a * (_gaussian(x, c, w) - 0.25 * _gaussian(x, c, 4.0 * w))
    raise ParameterError(f"unknown perturbation shape {spec.shape!r}")


def _transverse_envelope(grid: Grid, spec: PerturbationSpec) -> np.ndarray:
    env = np.ones(grid.shape[1:]) if grid.dims > 1 else np.ones(())
    w = np.atleast_1d(spec.width)
    for ax in range(1, grid.dims):
        if ax < w.size:
            x = grid.coords(ax)
            g = _gaussian(x, spec.axis_center(ax), spec.axis_width(ax))
            env = env * g.reshape((-1,) + (1,) * (grid.dims - 1 - ax))
    return env


def build_perturbation(grid: Grid, spec: PerturbationSpec) -> np.ndarray:
    """Perturbation with exactly zero line integral along x1 per line."""
    bump = _x1_bump(grid, spec)
    pert = bump.reshape((-1,) + (1,) * (grid.dims - 1)) * _transverse_envelope(grid, spec)
    if spec.shape == "none" or spec.amplitude == 0.0:
        return np.zeros(grid.shape)
    pert = np.broadcast_to(pert, grid.shape).copy()
    # constructive normalization: remove the per-line residual with a
    # decaying corrector so the anti-derivative stays integrable
    corrector = _gaussian(grid.coords(0), spec.axis_center(0), spec.axis_width(0))
    corrector = corrector / corrector.sum()
    line = pert.sum(axis=0)
    pert -= corrector.reshape((-1,) + (1,) * (grid.dims - 1)) * line
    return pert


def _make_state(grid, law, rho_arrays, mom1_arrays) -> FluidState:
    fields = []
    for rho, mom1 in zip(rho_arrays, mom1_arrays):
        if np.any(rho <= 0.0):
            idx = np.unravel_index(int(np.argmin(rho)), rho.shape)
            raise DomainError(
                f"initial density non-positive at node {tuple(int(i) for i in idx)}"
            )
        mom = np.zeros((grid.dims,) + grid.shape)
        mom[0] = mom1
        fields.append((ScalarField(grid, rho), VectorField(grid, mom)))
    (rp, mp), (rm, mm) = fields
    return FluidState(0.0, rp, rm, mp, mm, law)


def init_1d(
    profile: DiffusionProfile,
    spec: PerturbationSpec,
    grid: Grid,
    mom_spec: PerturbationSpec | None = None,
) -> FluidState:
    """Profile plus a mean-zero perturbation, momentum from Darcy's law."""
    if grid.dims != 1:
        raise ParameterError("init_1d expects a one-dimensional grid")
    x = grid.coords(0)
    base = eval_wave(profile, x, 0.0)
    mom1 = darcy_momentum(profile, x, 0.0)
    pert = build_perturbation(grid, spec)
    mpert = build_perturbation(grid, mom_spec) if mom_spec is not None else 0.0
    signs = spec.species_sign
    return _make_state(
        grid,
        profile.law,
        (base + signs[0] * pert, base + signs[1] * pert),
        (mom1 + mpert, mom1 + mpert),
    )


def init_md(
    profile: DiffusionProfile,
    shift: ShiftField,
    spec: PerturbationSpec,
    grid: Grid,
) -> FluidState:
    """Shifted planar data plus a per-line mean-zero perturbation."""
    if grid.dims < 2:
        raise ParameterError("init_md expects a multi-dimensional grid")
    if shift.delta0.shape != grid.shape[1:]:
        raise ParameterError(
            f"shift shape {shift.delta0.shape} does not match transverse grid {grid.shape[1:]}"
        )
    x1 = grid.coords(0).reshape((-1,) + (1,) * (grid.dims - 1))
    arg = x1 + shift.delta0
    base = np.broadcast_to(eval_wave(profile, arg, 0.0), grid.shape)
    mom1 = np.broadcast_to(darcy_momentum(profile, arg, 0.0), grid.shape)
    pert = build_perturbation(grid, spec)
    signs = spec.species_sign
    return _make_state(
        grid,
        profile.law,
        (base + signs[0] * pert, base + signs[1] * pert),
        (mom1, mom1),
    )


# ---------------------------------------------------------------------------
# background (ghost states and comparison waves)
# ---------------------------------------------------------------------------

_ZERO_SHIFT = ShiftField(np.zeros(()), 0.0)


class Background:
    """Time-dependent far-field/reference state for a run.

    Ghost cells always use the analytic shifted profile with Darcy
    momentum.  Diagnostics compare either against the same analytic
    background ("darcy") or against a concurrently advanced 1D reference
    solution mapped through the shift ("reference1d").
    """

    def __init__(self, profile: DiffusionProfile, shift: ShiftField | None, mode: str):
        if mode not in ("darcy", "reference1d"):
            raise ParameterError(f"unknown background mode {mode!r}")
        self.profile = profile
        self.shift = shift if shift is not None else _ZERO_SHIFT
        self.mode = mode
        self.companion: "_Companion1D | None" = None

    def attach_companion(self, grid: Grid, cfl: float):
        x1_grid = Grid(1, (grid.points[0],), grid.x1_extent)
        self.companion = _Companion1D(self.profile, x1_grid, cfl)

    def ghost_values(self, grid: Grid, x1_ghost: np.ndarray, t: float):
        """Background density and x1 momentum at ghost coordinates."""
        delta = shift_at(self.shift, t)
        arg = x1_ghost.reshape((-1,) + (1,) * (grid.dims - 1)) + delta
        rho = np.broadcast_to(eval_wave(self.profile, arg, t), (x1_ghost.size,) + grid.shape[1:])
        mom = np.broadcast_to(darcy_momentum(self.profile, arg, t), rho.shape)
        return rho, mom

    def comparison_fields(self, grid: Grid, t: float):
        """(rho_bar, u_bar) on the grid for perturbation diagnostics."""
        delta = shift_at(self.shift, t)
        x1 = grid.coords(0).reshape((-1,) + (1,) * (grid.dims - 1))
        arg = x1 + delta
        if self.mode == "darcy":
            rho = np.broadcast_to(eval_wave(self.profile, arg, t), grid.shape).copy()
            u1 = np.broadcast_to(darcy_momentum(self.profile, arg, t), grid.shape) / rho
        else:
            st = self.companion.advance_to(t)
            x = st.grid.coords(0)
            rho_line = st.rho_p.values
            u_line = st.mom_p.values[0] / rho_line
            rho = CubicSpline(x, rho_line)(arg)
            u1 = CubicSpline(x, u_line)(arg)
            rho = np.broadcast_to(rho, grid.shape).copy()
            u1 = np.broadcast_to(u1, grid.shape)
        u = np.zeros((grid.dims,) + grid.shape)
        u[0] = u1
        return rho, u


class _Companion1D:
    """Unperturbed 1D reference solution advanced alongside a run."""

    def __init__(self, profile: DiffusionProfile, grid: Grid, cfl: float):
        spec = PerturbationSpec(shape="none")
        self.state = init_1d(profile, spec, grid)
        self.background = Background(profile, None, "darcy")
        self.cfl = cfl

    def advance_to(self, t: float) -> FluidState:
        while self.state.t < t - 1e-12:
            dt = min(self.cfl * admissible_dt(self.state), t - self.state.t)
            self.state, _ = step(self.state, dt, self.background)
        return self.state


# ---------------------------------------------------------------------------
# field solve and sources
# ---------------------------------------------------------------------------

def _solve_gradphi(state: FluidState) -> np.ndarray:
    """Electric field gradient for the current charge difference."""
    grid = state.grid
    if grid.dims == 1:
        e = solve_E_1d(state.rho_p, state.rho_m)
        return e.values[None, :]
    charge = ScalarField(grid, state.rho_p.values - state.rho_m.values)
    return riesz_gradient(charge).grad_phi.values


def _source_half(rho, mom, gradphi, polarity, tau):
    """Exact relaxation decay plus the frozen-field electric impulse."""
    decay = np.exp(-tau)
    return mom * decay + polarity * rho * gradphi * (1.0 - decay)


# ---------------------------------------------------------------------------
# hyperbolic update
# ---------------------------------------------------------------------------

def _minmod(a, b):
    return np.where(a * b <= 0.0, 0.0, np.where(np.abs(a) < np.abs(b), a, b))


def _extend(arr, axis, lo, hi):
    """Append two ghost layers on each side along one axis."""
    if lo is None:  # periodic wrap
        head = arr.take(range(arr.shape[axis] - 2, arr.shape[axis]), axis=axis)
        tail = arr.take(range(0, 2), axis=axis)
        return np.concatenate([head, arr, tail], axis=axis)
    return np.concatenate([lo, arr, hi], axis=axis)


def _axis_divergence(rho, mom, law, grid, axis, ghosts):
    """Flux-difference along one axis; returns d(rho), d(mom), boundary mass flux."""
    dims = grid.dims
    h = grid.spacing[axis]
    if ghosts is None:
        lo_r = hi_r = None
        lo_m = hi_m = [None] * dims
    else:
        lo_r, hi_r, lo_m, hi_m = ghosts

    re = _extend(rho, axis, lo_r, hi_r)
    qe = [re]
    for comp in range(dims):
        me = _extend(mom[comp], axis, lo_m[comp], hi_m[comp])
        qe.append(me / re)

    # minmod-limited slopes on primitive variables
    recon_l, recon_r = [], []
    for q in qe:
        d = np.diff(q, axis=axis)
        n = q.shape[axis]
        dm = d.take(range(0, n - 2), axis=axis)
        dp = d.take(range(1, n - 1), axis=axis)
        sigma = _minmod(dm, dp)  # slopes for cells 1 .. n-2
        mid = q.take(range(1, n - 1), axis=axis)
        left_face = mid + 0.5 * sigma   # state at the right face of each cell
        right_face = mid - 0.5 * sigma  # state at the left face of each cell
        nf = left_face.shape[axis]
        recon_l.append(left_face.take(range(0, nf - 1), axis=axis))
        recon_r.append(right_face.take(range(1, nf), axis=axis))

    rho_l, rho_r = recon_l[0], recon_r[0]
    u_l, u_r = recon_l[1:], recon_r[1:]
    floor = 1e-14
    rho_l = np.maximum(rho_l, floor)
    rho_r = np.maximum(rho_r, floor)

    p_l, p_r = law.p(rho_l), law.p(rho_r)
    c_l, c_r = np.sqrt(law.dp(rho_l)), np.sqrt(law.dp(rho_r))
    a_face = np.maximum(np.abs(u_l[axis]) + c_l, np.abs(u_r[axis]) + c_r)

    flux = []
    # mass flux
    f_l = rho_l * u_l[axis]
    f_r = rho_r * u_r[axis]
    flux.append(0.5 * (f_l + f_r) - 0.5 * a_face * (rho_r - rho_l))
    # momentum fluxes
    for comp in range(dims):
        f_l = rho_l * u_l[comp] * u_l[axis]
        f_r = rho_r * u_r[comp] * u_r[axis]
        if comp == axis:
            f_l = f_l + p_l
            f_r = f_r + p_r
        jump = rho_r * u_r[comp] - rho_l * u_l[comp]
        flux.append(0.5 * (f_l + f_r) - 0.5 * a_face * jump)

    def diff_faces(f):
        n = f.shape[axis]
        return (f.take(range(1, n), axis=axis) - f.take(range(0, n - 1), axis=axis)) / h

    drho = -diff_faces(flux[0])
    dmom = np.stack([-diff_faces(flux[1 + comp]) for comp in range(dims)])

    boundary_mass = 0.0
    if ghosts is not None:
        nf = flux[0].shape[axis]
        f_left = flux[0].take(0, axis=axis)
        f_right = flux[0].take(nf - 1, axis=axis)
        area = grid.cell_volume / h
        boundary_mass = float((np.sum(f_right) - np.sum(f_left)) * area)
    return drho, dmom, boundary_mass


def _hyperbolic_rhs(rho, mom, law, grid, background, t):
    drho = np.zeros_like(rho)
    dmom = np.zeros_like(mom)
    outflow = 0.0
    for axis in range(grid.dims):
        if grid.is_periodic(axis):
            ghosts = None
        else:
            if background is None:
                raise ParameterError("open-axis grids need a background for ghost cells")
            h = grid.spacing[0]
            x_lo = grid.x1_extent[0] + h * np.array([-2.0, -1.0])
            x_hi = grid.x1_extent[1] + h * np.array([0.0, 1.0])
            rho_lo, mom_lo = background.ghost_values(grid, x_lo, t)
            rho_hi, mom_hi = background.ghost_values(grid, x_hi, t)
            zeros = np.zeros_like(rho_lo)
            lo_m = [mom_lo] + [zeros] * (grid.dims - 1)
            hi_m = [mom_hi] + [np.zeros_like(rho_hi)] * (grid.dims - 1)
            ghosts = (rho_lo, rho_hi, lo_m, hi_m)
        dr, dm, bf = _axis_divergence(rho, mom, law, grid, axis, ghosts)
        drho += dr
        dmom += dm
        outflow += bf
    return drho, dmom, outflow


def _check_positive(rho, what):
    if np.any(rho <= 0.0):
        idx = np.unravel_index(int(np.argmin(rho)), rho.shape)
        raise DomainError(
            f"negative density in {what} at cell {tuple(int(i) for i in idx)}"
        )


def admissible_dt(state: FluidState) -> float:
    """Largest stable time step: 1 / sum over axes of (max speed / h)."""
    grid = state.grid
    total = 0.0
    for rho, mom in ((state.rho_p, state.mom_p), (state.rho_m, state.mom_m)):
        c = np.sqrt(state.law.dp(rho.values))
        rate = 0.0
        for axis in range(grid.dims):
            s = float(np.max(np.abs(mom.values[axis] / rho.values) + c))
            rate += s / grid.spacing[axis]
        total = max(total, rate)
    if total == 0.0:
        return np.inf
    return 1.0 / total


def step(state: FluidState, dt: float, background: Background | None = None):
    """One Strang-split step; returns (new state, per-species boundary outflow)."""
    adm = admissible_dt(state)
    if dt > adm * (1.0 + 1e-9):
        raise CflError(f"dt {dt:.6g} exceeds the admissible time step {adm:.6g}")
    grid, law, t = state.grid, state.law, state.t

    species = [
        [state.rho_p.values.copy(), state.mom_p.values.copy(), +1.0],
        [state.rho_m.values.copy(), state.mom_m.values.copy(), -1.0],
    ]

    gradphi = _solve_gradphi(state)
    for sp in species:
        sp[1] = _source_half(sp[0], sp[1], gradphi, sp[2], 0.5 * dt)

    outflow = [0.0, 0.0]
    for i, sp in enumerate(species):
        rho0, mom0 = sp[0], sp[1]
        dr1, dm1, bf1 = _hyperbolic_rhs(rho0, mom0, law, grid, background, t)
        rho1 = rho0 + dt * dr1
        mom1 = mom0 + dt * dm1
        _check_positive(rho1, "hyperbolic stage 1")
        dr2, dm2, bf2 = _hyperbolic_rhs(rho1, mom1, law, grid, background, t + dt)
        sp[0] = 0.5 * (rho0 + rho1 + dt * dr2)
        sp[1] = 0.5 * (mom0 + mom1 + dt * dm2)
        _check_positive(sp[0], "hyperbolic stage 2")
        outflow[i] = 0.5 * dt * (bf1 + bf2)

    mid = FluidState(
        t + dt,
        ScalarField(grid, species[0][0]),
        ScalarField(grid, species[1][0]),
        VectorField(grid, species[0][1]),
        VectorField(grid, species[1][1]),
        law,
    )
    gradphi = _solve_gradphi(mid)
    for sp in species:
        sp[1] = _source_half(sp[0], sp[1], gradphi, sp[2], 0.5 * dt)

    out = FluidState(
        t + dt,
        ScalarField(grid, species[0][0]),
        ScalarField(grid, species[1][0]),
        VectorField(grid, species[0][1]),
        VectorField(grid, species[1][1]),
        law,
    )
    return out, tuple(outflow)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------

_SECOND_ORDER_PAIRS = {
    1: [(0, 0)],
    2: [(0, 0), (0, 1), (1, 1)],
    3: [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)],
}


def _deriv_norm(f: ScalarField, order: int) -> float:
    grid = f.grid
    if order == 0:
        return lp_norm(f, 2)
    if order == 1:
        total = sum(lp_norm(derivative(f, ax, 1), 2) ** 2 for ax in range(grid.dims))
        return float(np.sqrt(total))
    total = 0.0
    for a, b in _SECOND_ORDER_PAIRS[grid.dims]:
        if a == b:
            g = derivative(f, a, 2)
        else:
            g = derivative(derivative(f, a, 1), b, 1)
        total += lp_norm(g, 2) ** 2
    return float(np.sqrt(total))


@dataclass
class Trajectory:
    times: list = field(default_factory=list)
    series: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, key: tuple, value: float):
        self.series.setdefault(key, []).append(float(value))

    def get(self, quantity: str, p, alpha: int = 0) -> np.ndarray:
        return np.asarray(self.series[(quantity, _p_key(p), alpha)])

    def to_csv(self, path):
        with open(path, "w", encoding="ascii") as fh:
            fh.write("t,quantity,p,alpha,value\n")
            for (quantity, p, alpha), vals in self.series.items():
                for t, v in zip(self.times, vals):
                    fh.write(f"{t:.17g},{quantity},{p},{alpha},{v:.17g}\n")

    @staticmethod
    def from_csv(path) -> "Trajectory":
        traj = Trajectory()
        times_seen = []
        with open(path, "r", encoding="ascii") as fh:
            header = fh.readline().strip()
            if header != "t,quantity,p,alpha,value":
                raise ParameterError(f"unexpected norm series header {header!r}")
            for line in fh:
                t_s, quantity, p, alpha, value = line.strip().split(",")
                key = (quantity, p, int(alpha))
                traj.series.setdefault(key, []).append(float(value))
                if key == next(iter(traj.series)):
                    times_seen.append(float(t_s))
        traj.times = times_seen
        return traj


def _p_key(p) -> str:
    if isinstance(p, str):
        return p
    return "inf" if np.isinf(p) else f"{p:g}"


def _record(traj: Trajectory, state: FluidState, background: Background):
    grid = state.grid
    rho_bar, u_bar = background.comparison_fields(grid, state.t)
    traj.times.append(state.t)
    for tag, rho, mom in (
        ("p", state.rho_p, state.mom_p),
        ("m", state.rho_m, state.mom_m),
    ):
        v = ScalarField(grid, rho.values - rho_bar)
        u = VectorField(grid, mom.values / rho.values - u_bar)
        for p in (1.0, 2.0, np.inf):
            traj.add((f"V{tag}", _p_key(p), 0), lp_norm(v, p))
        for alpha in (1, 2):
            traj.add((f"V{tag}", "2", alpha), _deriv_norm(v, alpha))
        for p in (1.0, 2.0, np.inf):
            traj.add((f"U{tag}", _p_key(p), 0), lp_norm(u, p))
        for alpha in (1, 2):
            total = sum(_deriv_norm(u.component(ax), alpha) ** 2 for ax in range(grid.dims))
            traj.add((f"U{tag}", "2", alpha), float(np.sqrt(total)))
    k = ScalarField(grid, state.rho_p.values - state.rho_m.values)
    traj.add(("K", "2", 0), lp_norm(k, 2))
    if grid.dims > 1:
        gp = VectorField(grid, _solve_gradphi(state))
        traj.add(("gradphi", "6", 0), lp_norm(gp, 6))
    mass_p, mass_m = state.mass()
    traj.add(("mass_p", "1", 0), mass_p)
    traj.add(("mass_m", "1", 0), mass_m)


def _write_snapshot(state: FluidState, out_dir: Path, run_id: str, step_idx: int):
    base = out_dir / run_id
    base.mkdir(parents=True, exist_ok=True)
    snapio.save_field(base / f"rho_p_{step_idx:08d}.bepw", state.rho_p)
    snapio.save_field(base / f"rho_m_{step_idx:08d}.bepw", state.rho_m)
    for comp in range(state.grid.dims):
        snapio.save_field(base / f"mom_p{comp + 1}_{step_idx:08d}.bepw", state.mom_p.component(comp))
        snapio.save_field(base / f"mom_m{comp + 1}_{step_idx:08d}.bepw", state.mom_m.component(comp))


def run(
    state0: FluidState,
    config: RunConfig,
    profile: DiffusionProfile,
    shift: ShiftField | None = None,
    max_steps: int | None = None,
) -> Trajectory:
    """Advance a state to t_end with adaptive steps, recording norm series.

    The comparison background is a concurrently advanced 1D reference
    solution for multi-dimensional runs and the analytic Darcy wave in one
    dimension, unless overridden in the config; the choice is recorded in
    the trajectory metadata.
    """
    grid = state0.grid
    mode = config.background
    if mode == "auto":
        mode = "reference1d" if grid.dims > 1 else "darcy"
    background = Background(profile, shift, mode)
    if mode == "reference1d":
        background.attach_companion(grid, config.cfl)

    traj = Trajectory()
    traj.metadata["background"] = mode
    state = state0
    mass0 = state.mass()
    outflow_total = [0.0, 0.0]
    mu_lo = float(np.min(state.law.dp(np.minimum(state.rho_p.values, state.rho_m.values))))
    mu_hi = float(np.max(state.law.dp(np.maximum(state.rho_p.values, state.rho_m.values))))

    _record(traj, state, background)
    if config.out_dir:
        _write_snapshot(state, Path(config.out_dir), config.run_id, 0)
    if config.keep_snapshots:
        traj.snapshots.append(state)

    steps = 0
    while state.t < config.t_end - 1e-12:
        if max_steps is not None and steps >= max_steps:
            break
        dt = min(config.cfl * admissible_dt(state), config.t_end - state.t)
        state, outflow = step(state, dt, background)
        outflow_total[0] += outflow[0]
        outflow_total[1] += outflow[1]
        steps += 1
        mu_lo = min(mu_lo, float(np.min(state.law.dp(np.minimum(state.rho_p.values, state.rho_m.values)))))
        mu_hi = max(mu_hi, float(np.max(state.law.dp(np.maximum(state.rho_p.values, state.rho_m.values)))))
        if steps % config.snapshot_stride == 0:
            _record(traj, state, background)
            if config.out_dir:
                _write_snapshot(state, Path(config.out_dir), config.run_id, steps)
            if config.keep_snapshots:
                traj.snapshots.append(state)

    mass_end = state.mass()
    traj.metadata.update(
        steps=steps,
        mu_range=(mu_lo, mu_hi),
        mu_upper_bound=1.1 * mu_hi,
        mass_identity_error=tuple(
            abs(mass_end[i] - (mass0[i] - outflow_total[i])) / max(abs(mass0[i]), 1e-300)
            for i in range(2)
        ),
        mass_drift=tuple(
            abs(mass_end[i] - mass0[i]) / max(abs(mass0[i]), 1e-300) for i in range(2)
        ),
        boundary_outflow=tuple(outflow_total),
        final_state=state,
    )
    return traj
