"""piezobeam: a numerical laboratory for piezoelectric beams with magnetic
effect coupled to heat conduction carrying memory.

The package assembles the discrete semigroup generator for the coupled
beam/thermal system (with the temperature history tracked as an age-
structured variable), evolves it with a contractive implicit midpoint
scheme, and probes the stability theory numerically: energy dissipation,
static solvability, resolvent bounds, imaginary-axis resolvent scans, and
decay-regime classification.
"""

from .errors import *  # noqa: F401,F403
from .params import (PhysicalParams, MemoryKernel, DafermosReport,
                     ResolventBoundConstants, make_params, exponential_kernel,
                     tabulated_kernel, eval_sigma, eval_relaxation,
                     check_dafermos, resolvent_bound_constants,
                     poincare_constant)
from .grid import GridSpec, Blocks, build_grid, pack, unpack
from .operator import (DiscreteOperator, assemble, apply, solve_static,
                       dissipation_form, flux_potential, dump_matrix,
                       load_matrix)
from .evolution import (SineMode, SmoothBump, SeededRandom, SimConfig,
                        Trajectory, initial_state, history_from_past, step,
                        simulate)
from .diagnostics import (EnergyBreakdown, DecayFit, ExponentialModel,
                          PolynomialModel, ResolventBoundReport, energy,
                          energy_identity_residual, resolvent_solve,
                          check_resolvent_bounds, fit_exponential,
                          fit_polynomial, transient_end)
from .spectral import (EigenSummary, ResolventScan, RegimeReport,
                       REGIME_EXPONENTIAL, REGIME_POLYNOMIAL_ORDER_ONE,
                       REGIME_INCONCLUSIVE, eigenvalues, spectrum_summary,
                       resolvent_norm, resolvent_scan, classify, thread_count,
                       slow_wave_speed, resolved_band, envelope_points)
from .config import RunConfig, parse_config

__version__ = "0.1.0"
