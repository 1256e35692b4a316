"""Spatial grid, history quadrature in the age variable s, and the flat
layout of the evolution state.

Layout of a state vector of dimension 4*n_x + (1 + n_s)*(n_x - 1):

    u[1..n_x] | v[1..n_x] | y[1..n_x] | z[1..n_x] | w[1..n_x-1]
              | eta_1[1..n_x-1] | ... | eta_{n_s}[1..n_x-1]

Spatial nodes are x_j = j*h with h = L/n_x.  u, v, y, z vanish at x = 0
(node 0 not stored) and u, y obey zero-slope conditions at x = L via ghost
reflection; w and every eta slice vanish at both ends (only interior nodes
stored).  eta at age s = 0 is identically zero (transport inflow) and is not
stored.

The age grid s_1 < ... < s_{n_s} is geometric, the weights approximate
integrals against the measure sigma(s) ds:

    integral sigma(s) phi(s) ds  ~=  sum_k s_weights[k] * sigma(s_k) * phi(s_k)

and are rescaled so the total mass is reproduced exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import HistoryRequiredForPositiveM, ShapeMismatch
from .params import MemoryKernel, PhysicalParams, eval_relaxation, eval_sigma

__all__ = ["GridSpec", "Blocks", "build_grid", "pack", "unpack"]

# fraction of g(0) allowed beyond the truncation age
TRUNCATION_FRACTION = 1e-8
# first age node target: s_1 <= INFLOW_FRACTION/d_sigma at the reference
# resolution, shrinking ~ n_s^-2 under refinement so the quadrature of
# smooth age integrals keeps converging
INFLOW_FRACTION = 0.05
INFLOW_REFERENCE_NS = 8
MAX_GEOMETRIC_RATIO = 4.0


class Blocks(NamedTuple):
    """Unpacked view of a state vector; eta has shape (n_s, n_x - 1)."""

    u: np.ndarray
    v: np.ndarray
    y: np.ndarray
    z: np.ndarray
    w: np.ndarray
    eta: np.ndarray


@dataclass(frozen=True)
class GridSpec:
    """Immutable spatial/history discretization."""

    n_x: int
    n_s: int
    length: float
    s_nodes: np.ndarray = field(repr=False)
    s_weights: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return self.length / self.n_x

    @property
    def n_full(self) -> int:
        """Stored nodes of u, v, y, z (x_1 .. x_{n_x})."""
        return self.n_x

    @property
    def n_interior(self) -> int:
        """Stored nodes of w and each eta slice (x_1 .. x_{n_x-1})."""
        return self.n_x - 1

    @property
    def dim(self) -> int:
        return 4 * self.n_full + (1 + self.n_s) * self.n_interior

    @property
    def x_full(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_x + 1)

    @property
    def x_interior(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_x)

    @property
    def s_steps(self) -> np.ndarray:
        """Upwind spacings s_k - s_{k-1} with s_0 = 0."""
        return np.diff(self.s_nodes, prepend=0.0)

    def offset(self, block: str, k: int = 0) -> int:
        """Start index of a block ('u','v','y','z','w','eta'); k selects the
        eta slice."""
        n, ni = self.n_full, self.n_interior
        base = {"u": 0, "v": n, "y": 2 * n, "z": 3 * n, "w": 4 * n, "eta": 4 * n + ni}
        off = base[block]
        if block == "eta":
            if not 0 <= k < max(self.n_s, 1):
                raise ShapeMismatch(f"eta slice {k} out of range")
            off += k * ni
        return off


def build_grid(params: PhysicalParams, kernel: MemoryKernel,
               n_x: int, n_s: int) -> GridSpec:
    """Construct the grid and the sigma-weighted age quadrature.

    The age grid spans (0, s_max] geometrically, with s_max chosen so the
    relaxation function has decayed below TRUNCATION_FRACTION of g(0).
    The first node targets the inflow layer (s_1 <= 0.05/d_sigma) but the
    geometric ratio is capped at 4, which wins when n_s is very small.
    With m = 0 the history block is dropped entirely regardless of n_s.
    """
    n_x = int(n_x)
    n_s = int(n_s)
    if n_x < 8:
        raise ShapeMismatch(f"n_x must be >= 8, got {n_x}")
    if params.m == 0.0:
        n_s = 0
    elif n_s < 1:
        raise HistoryRequiredForPositiveM(
            f"n_s = {n_s} requires m = 0, but m = {params.m}")

    if n_s == 0:
        s_nodes = np.zeros(0)
        s_weights = np.zeros(0)
        return GridSpec(n_x=n_x, n_s=0, length=params.length,
                        s_nodes=s_nodes, s_weights=s_weights)

    s_max = _truncation_age(kernel)
    if n_s == 1:
        # single node at the mean age of the sigma measure
        probe = np.linspace(0.0, s_max, 4097)
        sig = eval_sigma(kernel, probe)
        mean_age = float(np.trapezoid(probe * sig, probe) / np.trapezoid(sig, probe))
        s_nodes = np.array([mean_age])
    else:
        target_s1 = (INFLOW_FRACTION / kernel.d_sigma) * (INFLOW_REFERENCE_NS / n_s) ** 2
        ratio_needed = (s_max / target_s1) ** (1.0 / (n_s - 1))
        ratio = min(max(ratio_needed, 1.0 + 1e-9), MAX_GEOMETRIC_RATIO)
        s_nodes = s_max * ratio ** (-np.arange(n_s - 1, -1, -1, dtype=float))

    # trapezoid weights over [0, s_1, ..., s_K]; the s = 0 share vanishes
    # because integrands vanish at the inflow.  On a geometric grid these
    # keep the upwind transport rates q_k/step_k admissible (2*a_1 >= a_2,
    # nonincreasing beyond), so the transport block dissipates exactly.
    steps = np.diff(s_nodes, prepend=0.0)
    s_weights = np.empty(n_s)
    s_weights[:-1] = 0.5 * (steps[:-1] + steps[1:])
    s_weights[-1] = 0.5 * steps[-1]

    sigma_vals = eval_sigma(kernel, s_nodes)
    raw_mass = float(np.dot(s_weights, sigma_vals))
    if raw_mass <= 0.0:
        raise ShapeMismatch("age quadrature lost the kernel mass entirely")
    s_weights *= kernel.g0 / raw_mass

    return GridSpec(n_x=n_x, n_s=n_s, length=params.length,
                    s_nodes=s_nodes, s_weights=s_weights)


def _truncation_age(kernel: MemoryKernel) -> float:
    """Smallest age with g(s) <= TRUNCATION_FRACTION * g(0)."""
    if kernel.kind == "exponential":
        return math.log(1.0 / TRUNCATION_FRACTION) / kernel.rate
    s_tab = kernel.s_samples
    g_tab = eval_relaxation(kernel, s_tab)
    below = np.nonzero(g_tab <= TRUNCATION_FRACTION * kernel.g0)[0]
    return float(s_tab[below[0]]) if below.size else float(s_tab[-1])


def pack(grid: GridSpec, u, v, y, z, w, eta) -> np.ndarray:
    """Concatenate blocks into a flat state vector (dtype follows inputs)."""
    n, ni, ns = grid.n_full, grid.n_interior, grid.n_s
    u, v, y, z, w = (np.asarray(b) for b in (u, v, y, z, w))
    eta = np.asarray(eta) if ns else np.zeros((0, ni))
    for name, b, length in (("u", u, n), ("v", v, n), ("y", y, n), ("z", z, n),
                            ("w", w, ni)):
        if b.shape != (length,):
            raise ShapeMismatch(f"block {name} has shape {b.shape}, wants ({length},)")
    if eta.shape != (ns, ni):
        raise ShapeMismatch(f"eta has shape {eta.shape}, wants ({ns}, {ni})")
    dtype = np.result_type(u, v, y, z, w, eta, np.float64)
    out = np.empty(grid.dim, dtype=dtype)
    out[:n] = u
    out[n:2 * n] = v
    out[2 * n:3 * n] = y
    out[3 * n:4 * n] = z
    out[4 * n:4 * n + ni] = w
    out[4 * n + ni:] = eta.reshape(-1)
    return out


def unpack(grid: GridSpec, state: np.ndarray) -> Blocks:
    """Split a flat state vector into named blocks (views, not copies)."""
    state = np.asarray(state)
    if state.shape != (grid.dim,):
        raise ShapeMismatch(f"state has shape {state.shape}, wants ({grid.dim},)")
    n, ni, ns = grid.n_full, grid.n_interior, grid.n_s
    return Blocks(
        u=state[:n],
        v=state[n:2 * n],
        y=state[2 * n:3 * n],
        z=state[3 * n:4 * n],
        w=state[4 * n:4 * n + ni],
        eta=state[4 * n + ni:].reshape(ns, ni),
    )
