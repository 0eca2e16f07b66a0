"""Signed-particle approximation of scalar conservation laws with
fractional diffusion, with exact and deterministic references and
convergence diagnostics."""

from .analysis import (Bump, Entropy, ErrorReport, RegimeReport, SpaceTimeSolution,
                       TestFunction, WeakResidualAccumulator, convergence_slope,
                       entropy_residual, time_integrated_error, validate_theorem_hypotheses,
                       weak_residual, weighted_l1_distance)
from .initial_data import (FluxModel, SignedBVInitial, cdf_v0, gamma_at, initial_profile,
                           normalize, riemann_datum, sample_positions, unit_riemann_datum)
from .particles import (KillReport, NumericalAbort, ParticleState, SignedCdf,
                        SimulationConfig, SimulationResult, evaluate_cdf, euler_step,
                        init_particles, kill_pairs, run_simulation, signed_cdf,
                        total_signed_mass, total_variation)
from .piecewise import PiecewiseLinear
from .reference import (Grid1D, ReferenceSolution, apply_fractional_laplacian,
                        deterministic_solve, exact_inviscid_burgers,
                        exact_inviscid_burgers_profile, reference_cdf_on_grid)
from .stable_levy import (StableDriver, characteristic_exponent, empirical_char_function,
                          sample_increment)

__version__ = "0.1.0"
