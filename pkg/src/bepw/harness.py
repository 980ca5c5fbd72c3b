"""Decay-exponent fitting, theoretical rate catalogue, and experiments.

Fits are least squares of log(norm) against log(1+t) on a time window;
the catalogue maps each perturbation quantity to its predicted algebraic
exponent; the a-priori diagnostic forms the running supremum of
rate-weighted norms whose boundedness signals that the measured decay is
at least as fast as predicted.  The canned experiments drive profile
construction, initialization, time integration, and the pass/fail
comparison of fitted against predicted exponents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .core import DomainError, Grid, ParameterError, PressureLaw, ScalarField
from .greenfn import kernel_norm_table, kernel_table_to_csv
from .hydro import (
    FluidState,
    PerturbationSpec,
    RunConfig,
    Trajectory,
    init_1d,
    init_md,
    run,
)
from .profile import (
    DiffusionProfile,
    ShiftField,
    darcy_momentum,
    profile_to_csv,
    solve_profile,
)

# ---------------------------------------------------------------------------
# exponent fitting
# ---------------------------------------------------------------------------

@dataclass
class DecayFit:
    times: np.ndarray
    norms: np.ndarray
    window: tuple
    fitted_exponent: float
    r_squared: float
    std_error: float
    theory_exponent: float | None = None


def fit_exponent(times, norms, window=None, theory: float | None = None) -> DecayFit:
    """Least-squares slope of log(norm) against log(1+t) on a window."""
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    if window is None:
        window = (times.max() / 8.0, times.max())
    lo, hi = float(window[0]), float(window[1])
    mask = (times >= lo) & (times <= hi)
    if int(mask.sum()) < 8:
        raise ParameterError(
            f"need at least 8 samples in window [{lo:g}, {hi:g}], found {int(mask.sum())}"
        )
    y_raw = norms[mask]
    if np.any(y_raw <= 0.0):
        raise DomainError("norms must be positive for a log-log fit")
    x = np.log1p(times[mask])
    y = np.log(y_raw)
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = ym - slope * xm
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    se = math.sqrt(ss_res / max(n - 2, 1) / sxx)
    return DecayFit(times[mask], y_raw, (lo, hi), slope, r2, se, theory)


def theory_exponent(quantity: str, n: int, p: float, alpha_order: int = 0) -> float:
    """Predicted algebraic decay exponent for a perturbation quantity."""
    p = float(p)
    if not (p >= 2.0):
        raise ParameterError(f"supported norms have p in [2, inf], got {p}")
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    if alpha_order < 0:
        raise ParameterError("alpha_order must be nonnegative")
    if quantity == "V":
        return -n / 2.0 * (1.0 - inv_p) - (alpha_order + 1) / 2.0
    if quantity == "U":
        return -n / 2.0 * (1.0 - inv_p) - (alpha_order + 2) / 2.0
    if quantity == "K":
        if not p == 2.0:
            raise ParameterError("the charge-difference rate is stated for p = 2 only")
        return -1.25 * n - 2.0 - alpha_order / 2.0
    if quantity == "V1d":
        return -0.5 * (1.0 - inv_p) - (alpha_order + 1) / 2.0
    if quantity == "U1d":
        return -0.5 * (1.0 - inv_p) - (alpha_order + 2) / 2.0
    raise ParameterError(f"unknown quantity {quantity!r}")


# ---------------------------------------------------------------------------
# a-priori diagnostic
# ---------------------------------------------------------------------------

@dataclass
class AprioriDiagnostic:
    t: float
    M_value: float


def apriori_functional(traj: Trajectory, n: int) -> list:
    """Running supremum of rate-weighted norms over a recorded trajectory.

    Uses the density-perturbation series with weight exponent
    n/2 (1 - 1/p) + (alpha + 1)/2 and the velocity series with + 2 in
    place of + 1, restricted to p in {2, inf} and derivative orders
    alpha <= 2 as recorded by the solver.
    """
    times = np.asarray(traj.times, dtype=float)
    weighted = []
    for (quantity, p_key, alpha), values in traj.series.items():
        if p_key not in ("2", "inf") or alpha > 2:
            continue
        if quantity in ("Vp", "Vm"):
            off = 1.0
        elif quantity in ("Up", "Um"):
            off = 2.0
        else:
            continue
        inv_p = 0.0 if p_key == "inf" else 1.0 / float(p_key)
        w = n / 2.0 * (1.0 - inv_p) + (alpha + off) / 2.0
        weighted.append((1.0 + times) ** w * np.asarray(values))
    if not weighted:
        raise ParameterError("trajectory carries no density/velocity perturbation series")
    pointwise = np.max(np.stack(weighted), axis=0)
    running = np.maximum.accumulate(pointwise)
    return [AprioriDiagnostic(float(t), float(m)) for t, m in zip(times, running)]


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

@dataclass
class CheckRow:
    label: str
    value: float
    lo: float
    hi: float

    @property
    def passed(self) -> bool:
        return self.lo <= self.value <= self.hi


@dataclass
class Report:
    name: str
    checks: list = dc_field(default_factory=list)
    artifacts: list = dc_field(default_factory=list)
    data: dict = dc_field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = [f"experiment {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        for c in self.checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(
                f"  [{mark}] {c.label}: value {c.value:.6g} in [{c.lo:.6g}, {c.hi:.6g}]"
            )
        for a in self.artifacts:
            lines.append(f"  wrote {a}")
        return "\n".join(lines)

    def to_csv(self, path):
        with open(path, "w", encoding="ascii") as fh:
            fh.write("check,value,lo,hi,passed\n")
            for c in self.checks:
                fh.write(f"{c.label},{c.value:.17g},{c.lo:.17g},{c.hi:.17g},{int(c.passed)}\n")


# canned experiment parameter sets; overridable through the JSON config
CANNED = {
    "decay1d": {
        "law": {"kappa": 1.0, "gamma": 2.0},
        "endstates": {"rho_minus": 0.95, "rho_plus": 1.05},
        "grid": {"dims": 1, "points": [4096], "extent": [-400.0, 400.0], "lengths": []},
        "perturbation": {
            "shape": "dipole",
            "amplitude": 0.01,
            "width": 10.0,
            "center": 0.0,
            "species_sign": [1.0, 1.0],
        },
        "shift": {"type": "none", "amplitude": 0.0, "width": 1.0},
        "run": {"cfl": 0.6, "t_end": 800.0, "snapshot_stride": 64},
        "fit": {"window": [100.0, 800.0]},
    },
    "decay2d": {
        "law": {"kappa": 1.0, "gamma": 2.0},
        "endstates": {"rho_minus": 0.105, "rho_plus": 0.115},
        "grid": {
            "dims": 2,
            "points": [1024, 128],
            "extent": [-200.0, 200.0],
            "lengths": [40.0],
        },
        "perturbation": {
            "shape": "gaussian",
            "amplitude": 0.01,
            "width": [4.0, 2.5],
            "center": [0.0, 20.0],
            "species_sign": [1.0, 1.0],
        },
        "shift": {"type": "gaussian", "amplitude": 0.5, "width": 3.0},
        "run": {"cfl": 0.45, "t_end": 200.0, "snapshot_stride": 8},
        "fit": {"window": [25.0, 200.0]},
    },
    "kdecay": {
        "law": {"kappa": 1.0, "gamma": 2.0},
        "endstates": {"rho_minus": 0.0095, "rho_plus": 0.0105},
        "grid": {"dims": 1, "points": [1024], "extent": [-150.0, 150.0], "lengths": []},
        "perturbation": {
            "shape": "gaussian",
            "amplitude": 5.0e-4,
            "width": 5.0,
            "center": 0.0,
            "species_sign": [1.0, -1.0],
        },
        "shift": {"type": "none", "amplitude": 0.0, "width": 1.0},
        "run": {"cfl": 0.15, "t_end": 420.0, "snapshot_stride": 4},
        "fit": {"window": [50.0, 400.0]},
    },
    "green-norms": {
        "green": {"mu": 1.0, "eps": 0.2, "tolerance": 0.1},
    },
    "smoke3d": {
        "law": {"kappa": 1.0, "gamma": 2.0},
        "endstates": {"rho_minus": 0.95, "rho_plus": 1.05},
        "grid": {
            "dims": 3,
            "points": [256, 32, 32],
            "extent": [-64.0, 64.0],
            "lengths": [16.0, 16.0],
        },
        "perturbation": {
            "shape": "gaussian",
            "amplitude": 0.005,
            "width": [3.0, 2.0, 2.0],
            "center": [0.0, 8.0, 8.0],
            "species_sign": [1.0, 1.0],
        },
        "shift": {"type": "none", "amplitude": 0.0, "width": 1.0},
        "run": {"cfl": 0.6, "t_end": 1.0e6, "snapshot_stride": 10, "max_steps": 200},
        "fit": {"window": None},
    },
}


def build_grid(cfg: dict) -> Grid:
    return Grid(
        dims=int(cfg["dims"]),
        points=tuple(cfg["points"]),
        x1_extent=tuple(cfg["extent"]),
        lengths=tuple(cfg.get("lengths", ())),
    )


def build_shift(cfg: dict, grid: Grid) -> ShiftField:
    tshape = grid.shape[1:]
    if cfg.get("type", "none") == "none" or grid.dims == 1:
        return ShiftField(np.zeros(tshape), 0.0)
    amp = float(cfg["amplitude"])
    width = float(cfg["width"])
    r2 = np.zeros(tshape)
    for ax in range(1, grid.dims):
        x = grid.coords(ax)
        c = 0.5 * grid.lengths[ax - 1]
        r2 = r2 + ((x - c) ** 2).reshape((-1,) + (1,) * (grid.dims - 1 - ax))
    delta0 = amp * np.exp(-r2 / (2.0 * width * width))
    edge = []
    for ax in range(len(tshape)):
        edge.append(np.take(delta0, 0, axis=ax).ravel())
        edge.append(np.take(delta0, -1, axis=ax).ravel())
    delta_star = float(np.concatenate(edge).mean()) if edge else 0.0
    return ShiftField(delta0, delta_star)


def build_problem(cfg: dict):
    """Construct (profile, grid, state0, shift, run config, fit window)."""
    law = PressureLaw(**cfg["law"])
    ends = cfg["endstates"]
    profile = solve_profile(law, ends["rho_minus"], ends["rho_plus"])
    grid = build_grid(cfg["grid"])
    pert_cfg = dict(cfg["perturbation"])
    spec = PerturbationSpec(
        shape=pert_cfg["shape"],
        amplitude=float(pert_cfg["amplitude"]),
        width=tuple(np.atleast_1d(pert_cfg["width"]).astype(float)),
        center=tuple(np.atleast_1d(pert_cfg["center"]).astype(float)),
        species_sign=tuple(pert_cfg["species_sign"]),
    )
    shift = build_shift(cfg.get("shift", {}), grid)
    if grid.dims == 1:
        state0 = init_1d(profile, spec, grid)
    else:
        state0 = init_md(profile, shift, spec, grid)
    run_cfg = dict(cfg["run"])
    max_steps = run_cfg.pop("max_steps", None)
    config = RunConfig(**run_cfg)
    window = cfg.get("fit", {}).get("window")
    return profile, grid, state0, shift, config, window, max_steps


def _momentum_perturbation_series(traj: Trajectory, profile: DiffusionProfile):
    """L^2 norms of momentum minus the Darcy momentum, per kept snapshot."""
    out = {"p": [], "m": []}
    times = []
    for state in traj.snapshots:
        x = state.grid.coords(0)
        ref = darcy_momentum(profile, x, state.t)
        vol = state.grid.cell_volume
        for tag, mom in (("p", state.mom_p), ("m", state.mom_m)):
            gap = mom.values[0] - ref
            out[tag].append(float(np.sqrt(np.sum(gap * gap) * vol)))
        times.append(state.t)
    return np.asarray(times), {k: np.asarray(v) for k, v in out.items()}


def _experiment_decay1d(cfg: dict, out_dir: Path) -> Report:
    profile, grid, state0, shift, config, window, _ = build_problem(cfg)
    config.keep_snapshots = True
    traj = run(state0, config, profile, shift)
    traj.to_csv(out_dir / "decay1d_norms.csv")
    report = Report("decay1d", artifacts=[str(out_dir / "decay1d_norms.csv")])
    report.data.update(trajectory=traj, profile=profile, window=tuple(window))

    target = theory_exponent("V1d", 1, 2.0)
    for tag in ("p", "m"):
        fit = fit_exponent(traj.times, traj.get(f"V{tag}", 2), window, theory=target)
        report.checks.append(
            CheckRow(f"V{tag} L2 exponent", fit.fitted_exponent, target - 0.15, target + 0.15)
        )
    mtimes, mseries = _momentum_perturbation_series(traj, profile)
    mom_target = theory_exponent("U1d", 1, 2.0)
    for tag in ("p", "m"):
        fit = fit_exponent(mtimes, mseries[tag], window, theory=mom_target)
        report.checks.append(
            CheckRow(
                f"momentum-{tag} L2 exponent", fit.fitted_exponent, mom_target - 0.2, mom_target + 0.2
            )
        )
    diag = apriori_functional(traj, n=1)
    mfit = fit_exponent([d.t for d in diag], [d.M_value for d in diag], window)
    report.checks.append(CheckRow("a-priori slope", mfit.fitted_exponent, -0.1, 0.1))
    steps = traj.metadata["steps"]
    drift = max(traj.metadata["mass_drift"])
    report.checks.append(
        CheckRow("mass drift per 1000 steps", drift / max(steps / 1000.0, 1.0), 0.0, 1e-12)
    )
    return report


def _experiment_decay2d(cfg: dict, out_dir: Path) -> Report:
    profile, grid, state0, shift, config, window, _ = build_problem(cfg)
    traj = run(state0, config, profile, shift)
    traj.to_csv(out_dir / "decay2d_norms.csv")
    report = Report("decay2d", artifacts=[str(out_dir / "decay2d_norms.csv")])
    report.data.update(trajectory=traj, profile=profile, window=tuple(window))

    t2 = theory_exponent("V", 2, 2.0)
    tinf = theory_exponent("V", 2, np.inf)
    for tag in ("p", "m"):
        fit = fit_exponent(traj.times, traj.get(f"V{tag}", 2), window, theory=t2)
        report.checks.append(
            CheckRow(f"V{tag} L2 exponent", fit.fitted_exponent, t2 - 0.2, t2 + 0.2)
        )
        fit = fit_exponent(traj.times, traj.get(f"V{tag}", np.inf), window, theory=tinf)
        report.checks.append(
            CheckRow(f"V{tag} Linf exponent", fit.fitted_exponent, tinf - 0.25, tinf + 0.25)
        )
    diag = apriori_functional(traj, n=2)
    mfit = fit_exponent([d.t for d in diag], [d.M_value for d in diag], window)
    report.checks.append(CheckRow("a-priori slope", mfit.fitted_exponent, -0.1, 0.1))
    return report


def _experiment_kdecay(cfg: dict, out_dir: Path) -> Report:
    profile, grid, state0, shift, config, window, _ = build_problem(cfg)
    traj = run(state0, config, profile, shift)
    traj.to_csv(out_dir / "kdecay_norms.csv")
    report = Report("kdecay", artifacts=[str(out_dir / "kdecay_norms.csv")])
    report.data.update(trajectory=traj, profile=profile)

    k = traj.get("K", 2)
    early = fit_exponent(traj.times, k, (50.0, 100.0))
    late = fit_exponent(traj.times, k, (200.0, 400.0))
    ratio = abs(late.fitted_exponent) / max(abs(early.fitted_exponent), 1e-30)
    report.data.update(early=early, late=late)
    report.checks.append(CheckRow("window-growth ratio", ratio, 2.0, np.inf))
    return report


def _experiment_green_norms(cfg: dict, out_dir: Path) -> Report:
    g = cfg["green"]
    mu, eps, tol = float(g["mu"]), float(g["eps"]), float(g["tolerance"])
    report = Report("green-norms")
    rows_all = []
    for n in (1, 2):
        rows = kernel_norm_table(mu, eps, n)
        rows_all.extend(rows)
        seen = set()
        for r in rows:
            key = (r.n, r.q, r.alpha, r.tderiv)
            if key in seen:
                continue
            seen.add(key)
            qname = "inf" if np.isinf(r.q) else f"{r.q:g}"
            report.checks.append(
                CheckRow(
                    f"n={r.n} q={qname} alpha={r.alpha} tderiv={r.tderiv} slope",
                    r.fitted_slope,
                    r.theory_slope - tol,
                    r.theory_slope + tol,
                )
            )
    path = out_dir / "green_norms.csv"
    kernel_table_to_csv(rows_all, path)
    report.artifacts.append(str(path))
    report.data["rows"] = rows_all
    return report


def _experiment_smoke3d(cfg: dict, out_dir: Path) -> Report:
    profile, grid, state0, shift, config, window, max_steps = build_problem(cfg)
    traj = run(state0, config, profile, shift, max_steps=max_steps)
    traj.to_csv(out_dir / "smoke3d_norms.csv")
    report = Report("smoke3d", artifacts=[str(out_dir / "smoke3d_norms.csv")])
    report.data.update(trajectory=traj)

    times = np.asarray(traj.times)
    v = traj.get("Vp", 2)
    tail = v[times > 5.0]
    monotone = 1.0 if tail.size >= 2 and bool(np.all(np.diff(tail) < 0.0)) else 0.0
    report.checks.append(CheckRow("V L2 strictly decreasing after t=5", monotone, 1.0, 1.0))
    report.checks.append(
        CheckRow("steps completed", float(traj.metadata["steps"]), float(max_steps), float(max_steps))
    )
    drift = max(traj.metadata["mass_drift"])
    report.checks.append(CheckRow("mass drift per 1000 steps", drift / 1.0, 0.0, 1e-12))
    return report


_EXPERIMENTS = {
    "decay1d": _experiment_decay1d,
    "decay2d": _experiment_decay2d,
    "kdecay": _experiment_kdecay,
    "green-norms": _experiment_green_norms,
    "smoke3d": _experiment_smoke3d,
}


def deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = val
    return out


def experiment(name: str, overrides: dict | None = None, out_dir=None) -> Report:
    """Run one canned experiment, optionally overriding its parameters."""
    if name not in _EXPERIMENTS:
        raise ParameterError(
            f"unknown experiment {name!r}; choose from {sorted(_EXPERIMENTS)}"
        )
    cfg = CANNED[name]
    if overrides:
        cfg = deep_merge(cfg, overrides)
    out = Path(out_dir) if out_dir is not None else Path("bepw_out") / name
    out.mkdir(parents=True, exist_ok=True)
    report = _EXPERIMENTS[name](cfg, out)
    report.to_csv(out / "report.csv")
    report.artifacts.append(str(out / "report.csv"))
    (out / "summary.txt").write_text(report.summary() + "\n", encoding="ascii")
    return report
