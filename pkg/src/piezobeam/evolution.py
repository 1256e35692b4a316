"""Time integration of the semigroup dynamics and trajectory recording.

The stepper is the implicit midpoint rule

    (I - dt/2 * A) U_{n+1} = (I + dt/2 * A) U_n,

an A-stable, second-order scheme whose step map is a contraction in the
energy norm whenever A is dissipative, so discrete trajectories can never
gain energy.  The step matrix is factorized once per (operator, dt) pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import IncompatibleSpec, ShapeMismatch, SolverFailure
from .grid import pack
from .operator import DiscreteOperator, _lu_solve_real

__all__ = ["SineMode", "SmoothBump", "SeededRandom", "SimConfig", "Trajectory",
           "initial_state", "step", "simulate"]

STEP_RESIDUAL_TOL = 1e-12


@dataclass(frozen=True)
class SineMode:
    """Smooth modal initial data.

    Displacement-type blocks use sin((mode - 1/2) * pi * x / L), which
    vanishes at x = 0 with zero slope at x = L; the temperature uses
    sin(mode * pi * x / L), vanishing at both ends.  history selects the
    prescribed past temperature: "steady" holds w fixed at w0 for all past
    times, "zero" starts with an empty history.
    """

    u_mode: int = 1
    y_mode: int = 1
    w_mode: int = 1
    u_amp: float = 1.0
    v_amp: float = 0.0
    y_amp: float = 1.0
    z_amp: float = 0.0
    w_amp: float = 1.0
    history: str = "steady"


@dataclass(frozen=True)
class SmoothBump:
    """Gaussian bump of the given center/width, shaped by boundary-compatible
    masks (sin(pi x / 2L) for displacement blocks, sin(pi x / L) for the
    temperature)."""

    center: float = 0.5
    width: float = 0.15
    u_amp: float = 1.0
    v_amp: float = 0.0
    y_amp: float = 1.0
    z_amp: float = 0.0
    w_amp: float = 1.0
    history: str = "steady"


@dataclass(frozen=True)
class SeededRandom:
    """Reproducible random state, normalized to unit energy.  All stored
    degrees of freedom are boundary-compatible by construction, so no extra
    projection is needed."""

    seed: int = 0


@dataclass(frozen=True)
class SimConfig:
    dt: float | None        # None -> h/2, resolving the fastest beam waves
    t_final: float
    record_every: int = 1
    initial: object = SineMode()

    def resolve_dt(self, h: float) -> float:
        dt = 0.5 * h if self.dt is None else float(self.dt)
        if not (dt > 0.0 and math.isfinite(dt)):
            raise IncompatibleSpec(f"dt must be positive and finite, got {dt}")
        if self.t_final < 0.0:
            raise IncompatibleSpec("t_final must be >= 0")
        if self.t_final > 0.0 and dt > self.t_final:
            raise IncompatibleSpec(f"dt = {dt} exceeds t_final = {self.t_final}")
        if self.record_every < 1:
            raise IncompatibleSpec("record_every must be >= 1")
        return dt


@dataclass
class Trajectory:
    """Recorded run: times[0] = 0 and one state/energy row per record."""

    times: np.ndarray
    states: np.ndarray                 # shape (n_records, dim)
    energies: list = field(repr=False)  # EnergyBreakdown per record


def initial_state(op: DiscreteOperator, spec) -> np.ndarray:
    """Build a boundary-compatible state for the operator's grid.

    For specs that prescribe a past temperature phi0, the history block is
    the running integral eta0(x, s_k) = integral_0^{s_k} phi0(x, r) dr,
    evaluated by a cumulative trapezoid over the age nodes (exact when phi0
    is constant in s, giving eta0 = s_k * w0).
    """
    grid = op.grid
    xf, xi, L = grid.x_full, grid.x_interior, grid.length

    if isinstance(spec, SeededRandom):
        rng = np.random.default_rng(spec.seed)
        state = rng.standard_normal(grid.dim)
        nrm = op.norm_energy(state)
        if nrm > 0.0:
            state *= math.sqrt(2.0) / nrm   # energy = ||.||^2_M / 2 -> 1
        return state

    if isinstance(spec, SineMode):
        if min(spec.u_mode, spec.y_mode, spec.w_mode) < 1:
            raise IncompatibleSpec("mode numbers must be >= 1")
        shape_u = np.sin((spec.u_mode - 0.5) * np.pi * xf / L)
        shape_y = np.sin((spec.y_mode - 0.5) * np.pi * xf / L)
        shape_w = np.sin(spec.w_mode * np.pi * xi / L)
        u = spec.u_amp * shape_u
        v = spec.v_amp * shape_u
        y = spec.y_amp * shape_y
        z = spec.z_amp * shape_y
        w = spec.w_amp * shape_w
    elif isinstance(spec, SmoothBump):
        if spec.width <= 0.0:
            raise IncompatibleSpec("bump width must be > 0")
        bump_f = np.exp(-((xf - spec.center) / spec.width) ** 2) * np.sin(0.5 * np.pi * xf / L)
        bump_i = np.exp(-((xi - spec.center) / spec.width) ** 2) * np.sin(np.pi * xi / L)
        u = spec.u_amp * bump_f
        v = spec.v_amp * bump_f
        y = spec.y_amp * bump_f
        z = spec.z_amp * bump_f
        w = spec.w_amp * bump_i
    else:
        raise IncompatibleSpec(f"unknown initial spec {type(spec).__name__}")

    eta = np.zeros((grid.n_s, grid.n_interior))
    if grid.n_s and spec.history == "steady":
        # phi0(x, s) = w0(x) for all past times
        eta = grid.s_nodes[:, None] * w[None, :]
    elif spec.history not in ("steady", "zero"):
        raise IncompatibleSpec(f"unknown history mode {spec.history!r}")
    return pack(grid, u, v, y, z, w, eta)


def history_from_past(op: DiscreteOperator, w_past) -> np.ndarray:
    """eta0 from an arbitrary prescribed past phi0.

    w_past maps an age s >= 0 to the interior-node temperature profile at
    time -s; integration uses a cumulative trapezoid over [0, s_1, ..., s_K].
    """
    grid = op.grid
    ages = np.concatenate([[0.0], grid.s_nodes])
    profiles = np.stack([np.asarray(w_past(float(s))) for s in ages])
    if profiles.shape != (grid.n_s + 1, grid.n_interior):
        raise IncompatibleSpec("w_past must return interior-node profiles")
    increments = 0.5 * np.diff(ages)[:, None] * (profiles[1:] + profiles[:-1])
    return np.cumsum(increments, axis=0)


class _StepSolver:
    """Cached factorization of the midpoint step for one (op, dt) pair."""

    def __init__(self, op: DiscreteOperator, dt: float):
        half = 0.5 * dt
        eye = np.eye(op.dim)
        self.minus = eye - half * op.a_matrix
        self.plus = eye + half * op.a_matrix
        try:
            self.lu = sla.lu_factor(self.minus)
        except sla.LinAlgError as exc:  # pragma: no cover
            raise SolverFailure(str(exc)) from exc

    def advance(self, state: np.ndarray) -> np.ndarray:
        rhs = self.plus @ state
        out = _lu_solve_real(self.lu, rhs)
        nrm = np.linalg.norm(state)
        if nrm > 0.0:
            residual = np.linalg.norm(self.minus @ out - rhs)
            if residual > STEP_RESIDUAL_TOL * nrm:
                out += _lu_solve_real(self.lu, rhs - self.minus @ out)
                residual = np.linalg.norm(self.minus @ out - rhs)
                if residual > STEP_RESIDUAL_TOL * nrm:
                    raise SolverFailure(
                        f"midpoint solve stalled at residual {residual / nrm:.3e}")
        if not np.all(np.isfinite(out)):
            raise SolverFailure("midpoint step produced non-finite values")
        return out


def _step_solver(op: DiscreteOperator, dt: float) -> _StepSolver:
    cache = op.__dict__.setdefault("_step_solvers", {})
    if dt not in cache:
        cache[dt] = _StepSolver(op, dt)
    return cache[dt]


def step(op: DiscreteOperator, state: np.ndarray, dt: float) -> np.ndarray:
    """One implicit midpoint step of size dt."""
    if dt <= 0.0:
        raise SolverFailure(f"dt must be > 0, got {dt}")
    state = np.asarray(state)
    if state.shape != (op.dim,):
        raise ShapeMismatch(f"state has shape {state.shape}, wants ({op.dim},)")
    return _step_solver(op, dt).advance(state)


def simulate(op: DiscreteOperator, config: SimConfig) -> Trajectory:
    """Run the midpoint scheme and record every record_every-th state
    (plus the final one).  Deterministic for a fixed config and seed."""
    from .diagnostics import energy  # local import: diagnostics uses Trajectory

    dt = config.resolve_dt(op.grid.h)
    n_steps = int(round(config.t_final / dt)) if config.t_final > 0.0 else 0
    state = initial_state(op, config.initial)
    solver = _step_solver(op, dt) if n_steps else None

    times = [0.0]
    states = [state.copy()]
    energies = [energy(op, state)]
    for k in range(1, n_steps + 1):
        state = solver.advance(state)
        if k % config.record_every == 0 or k == n_steps:
            times.append(k * dt)
            states.append(state.copy())
            energies.append(energy(op, state))
    return Trajectory(times=np.array(times), states=np.array(states),
                      energies=energies)
