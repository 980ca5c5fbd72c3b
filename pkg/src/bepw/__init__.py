"""Planar diffusion waves of the two-species Euler-Poisson system.

Construction of the self-similar background wave, a two-species
finite-volume solver with friction and electrostatic coupling, the
damped-wave kernel machinery, and a harness that fits measured decay
exponents against their predicted values.
"""

from .core import (
    BepwError,
    ConvergenceError,
    DomainError,
    Grid,
    ParameterError,
    PressureLaw,
    ScalarField,
    SolvabilityError,
    VectorField,
    derivative,
    eps0,
    high_pass,
    low_pass,
    lp_norm,
    pressure,
)
from .electro import ElectroSolution, hls_ratio, riesz_gradient, solve_E_1d
from .greenfn import (
    GreenSymbol,
    duhamel_residual,
    kernel_GL,
    kernel_norm_table,
    lambda_pm,
    sigma,
    symbol_G,
    symbol_G_t,
)
from .harness import (
    DecayFit,
    apriori_functional,
    experiment,
    fit_exponent,
    theory_exponent,
)
from .hydro import (
    CflError,
    FluidState,
    PerturbationSpec,
    RunConfig,
    Trajectory,
    init_1d,
    init_md,
    run,
    step,
)
from .profile import (
    DiffusionProfile,
    ShiftField,
    compute_delta0,
    darcy_momentum,
    eval_wave,
    sample_background,
    shift_at,
    solve_profile,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
