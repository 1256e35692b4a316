"""Physical coefficients, memory kernels, and the closed-form constants
derived from them.

The beam carries five material coefficients (rho, alpha1, gamma, beta, mu),
a thermal coupling delta, a diffusivity scale c, a mixing parameter
m in [0, 1] that blends instantaneous and hereditary heat conduction, and a
length L.  The effective stiffness alpha = alpha1 + gamma^2 * beta is always
derived, never accepted as input.

Memory kernels sigma(s) must be admissible: nonnegative, nonincreasing,
integrable with integral g(0) > 0, finite at s = 0, and decaying at the rate
d_sigma, i.e. sigma'(s) <= -d_sigma * sigma(s) at every age s (the Dafermos
condition).  The prototype is sigma(s) = k*exp(-k*s), for which the relaxation
function g(s) = exp(-k*s) has unit total mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGrid,
    KernelNotAdmissible,
    MixingAtEndpoint,
    MixingOutOfRange,
    NegativeArgument,
    NonPositiveCoefficient,
)

__all__ = [
    "PhysicalParams",
    "MemoryKernel",
    "DafermosReport",
    "ResolventBoundConstants",
    "make_params",
    "exponential_kernel",
    "tabulated_kernel",
    "eval_sigma",
    "eval_relaxation",
    "check_dafermos",
    "resolvent_bound_constants",
    "poincare_constant",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Validated beam/thermal coefficients.  Immutable; share freely."""

    rho: float      # mass density
    alpha1: float   # elastic stiffness
    gamma: float    # piezoelectric coefficient
    beta: float     # electric/magnetic stiffness
    mu: float       # magnetic permeability
    delta: float    # thermal coupling
    c: float        # diffusivity scale
    m: float        # mixing: 0 = pure Fourier, 1 = pure memory
    length: float   # beam length L

    @property
    def alpha(self) -> float:
        """Effective stiffness alpha1 + gamma^2 * beta (always derived)."""
        return self.alpha1 + self.gamma**2 * self.beta


def make_params(*, rho=1.0, alpha1=1.0, gamma=1.0, beta=1.0, mu=1.0,
                delta=1.0, c=1.0, m=0.5, length=math.pi) -> PhysicalParams:
    """Validate raw coefficients and return immutable parameters.

    Raises NonPositiveCoefficient for any non-finite or non-positive
    coefficient, MixingOutOfRange for m outside [0, 1].
    """
    named = dict(rho=rho, alpha1=alpha1, gamma=gamma, beta=beta, mu=mu,
                 delta=delta, c=c, length=length)
    for name, value in named.items():
        value = float(value)
        if not math.isfinite(value) or value <= 0.0:
            raise NonPositiveCoefficient(f"{name} must be finite and > 0, got {value}")
    m = float(m)
    if not math.isfinite(m) or not 0.0 <= m <= 1.0:
        raise MixingOutOfRange(f"m must lie in [0, 1], got {m}")
    return PhysicalParams(rho=float(rho), alpha1=float(alpha1), gamma=float(gamma),
                          beta=float(beta), mu=float(mu), delta=float(delta),
                          c=float(c), m=m, length=float(length))


@dataclass(frozen=True)
class MemoryKernel:
    """A memory kernel sigma(s) plus its admissibility data.

    kind is "exponential" (sigma = rate * exp(-rate*s)) or "tabulated"
    (piecewise-linear through samples, zero beyond the last sample).
    g0 = integral of sigma = g(0); d_sigma is the decay rate in the
    Dafermos condition; sigma0 = sigma(0).
    """

    kind: str
    g0: float
    d_sigma: float
    sigma0: float
    rate: float | None = None
    s_samples: np.ndarray | None = None
    sigma_samples: np.ndarray | None = None


def exponential_kernel(k: float) -> MemoryKernel:
    """Prototype kernel sigma(s) = k*exp(-k*s): g(0) = 1, d_sigma = k."""
    k = float(k)
    if not math.isfinite(k) or k <= 0.0:
        raise NonPositiveCoefficient(f"kernel rate k must be > 0, got {k}")
    return MemoryKernel(kind="exponential", g0=1.0, d_sigma=k, sigma0=k, rate=k)


def tabulated_kernel(s, sigma, d_sigma: float) -> MemoryKernel:
    """Kernel given by samples (s_i, sigma_i), interpolated linearly.

    Enforces the structural requirements checkable at construction:
    strictly increasing ages starting at s >= 0, sigma >= 0 and
    nonincreasing, positive total mass.  The rate claim d_sigma is *not*
    verified here; run check_dafermos for that.
    """
    s = np.asarray(s, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if s.ndim != 1 or s.shape != sigma.shape or s.size < 2:
        raise DegenerateGrid("need matching 1-D arrays with at least 2 samples")
    if s[0] < 0.0 or np.any(np.diff(s) <= 0.0):
        raise DegenerateGrid("ages must start at s >= 0 and increase strictly")
    if np.any(sigma < 0.0):
        raise KernelNotAdmissible("sigma must be nonnegative")
    if np.any(np.diff(sigma) > 0.0):
        raise KernelNotAdmissible("sigma must be nonincreasing")
    d_sigma = float(d_sigma)
    if not math.isfinite(d_sigma) or d_sigma <= 0.0:
        raise NonPositiveCoefficient(f"d_sigma must be > 0, got {d_sigma}")
    g0 = float(np.trapezoid(sigma, s))
    if g0 <= 0.0:
        raise KernelNotAdmissible("kernel has zero total mass")
    return MemoryKernel(kind="tabulated", g0=g0, d_sigma=d_sigma,
                        sigma0=float(sigma[0]), s_samples=s, sigma_samples=sigma)


def eval_sigma(kernel: MemoryKernel, s):
    """sigma(s) for scalar or array s >= 0."""
    arr = np.asarray(s, dtype=float)
    if np.any(arr < 0.0):
        raise NegativeArgument("kernel age s must be >= 0")
    if kernel.kind == "exponential":
        out = kernel.rate * np.exp(-kernel.rate * arr)
    else:
        out = np.interp(arr, kernel.s_samples, kernel.sigma_samples, right=0.0)
    return float(out) if np.isscalar(s) else out


def eval_relaxation(kernel: MemoryKernel, s):
    """g(s) = integral of sigma over [s, infinity)."""
    arr = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(arr < 0.0):
        raise NegativeArgument("kernel age s must be >= 0")
    if kernel.kind == "exponential":
        out = np.exp(-kernel.rate * arr)
    else:
        ss, sig = kernel.s_samples, kernel.sigma_samples
        cum = np.concatenate([[0.0], np.cumsum(np.diff(ss) * 0.5 * (sig[1:] + sig[:-1]))])
        consumed = np.interp(arr, ss, cum, right=cum[-1])
        out = np.maximum(kernel.g0 - consumed, 0.0)
    return float(out[0]) if np.isscalar(s) else out


@dataclass(frozen=True)
class DafermosReport:
    """Finite-difference verdict on sigma'(s) <= -d_sigma*sigma(s).

    Margins are normalized: (sigma' + d_sigma*sigma) / (d_sigma*sigma), so a
    genuine violation shows up at order one while finite-difference
    truncation stays at the percent level on a reasonably resolved grid.
    """

    holds: bool
    worst_margin: float          # max normalized margin over interior samples
    margins: np.ndarray


def check_dafermos(kernel: MemoryKernel, s_grid, tol: float = 0.05) -> DafermosReport:
    """Check the kernel decay condition on a sample grid.

    sigma' is estimated by centered differences at interior grid points and
    compared with -d_sigma*sigma there; the condition holds iff every
    normalized margin is <= tol.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size < 3:
        raise DegenerateGrid("need at least 3 grid points")
    if np.any(np.diff(s) <= 0.0):
        raise DegenerateGrid("grid must be strictly increasing")
    sig = eval_sigma(kernel, s)
    dsig = (sig[2:] - sig[:-2]) / (s[2:] - s[:-2])
    scale = np.maximum(kernel.d_sigma * sig[1:-1], 1e-12 * kernel.d_sigma * kernel.sigma0)
    margins = (dsig + kernel.d_sigma * sig[1:-1]) / scale
    worst = float(np.max(margins))
    return DafermosReport(holds=bool(worst <= tol), worst_margin=worst, margins=margins)


@dataclass(frozen=True)
class ResolventBoundConstants:
    """Constants bounding the thermal components of a resolvent solve.

    For 0 < m < 1 each constant multiplies ||F||*||U|| (energy norms) to
    bound one integral of the solution U of (i*lambda*I - A)U = F:

      temp_gradient          -> integral |w_x|^2
      history_gradient       -> integral sigma(s)|eta_x|^2 ds dx
      temperature            -> integral |w|^2
      flux_potential_gradient-> integral |Lambda_x|^2, with
                                Lambda = (1-m)w + m*integral sigma(s)eta(s)ds
    """

    temp_gradient: float
    history_gradient: float
    temperature: float
    flux_potential_gradient: float

    def as_dict(self) -> dict:
        return {
            "temp_gradient": self.temp_gradient,
            "history_gradient": self.history_gradient,
            "temperature": self.temperature,
            "flux_potential_gradient": self.flux_potential_gradient,
        }


def resolvent_bound_constants(params: PhysicalParams, kernel: MemoryKernel,
                              poincare_cp: float) -> ResolventBoundConstants:
    """Closed-form bound constants; defined only for 0 < m < 1."""
    m, c = params.m, params.c
    if m <= 0.0 or m >= 1.0:
        raise MixingAtEndpoint("constants are undefined at m = 0 or m = 1")
    if poincare_cp <= 0.0:
        raise NonPositiveCoefficient("poincare_cp must be > 0")
    k1 = 1.0 / (c * (1.0 - m))
    k2 = 2.0 / (c * m * kernel.d_sigma)
    k3 = poincare_cp * k1
    k4 = 2.0 * (1.0 - m) / c + 4.0 * kernel.g0 / (c * m * kernel.d_sigma)
    return ResolventBoundConstants(temp_gradient=k1, history_gradient=k2,
                                   temperature=k3, flux_potential_gradient=k4)


def poincare_constant(length: float, vanishing: str = "one_end") -> float:
    """Sharp 1-D Poincare constant c_p with ||f||^2 <= c_p ||f_x||^2.

    "one_end": f vanishes at a single endpoint -> (2L/pi)^2.
    "both_ends": f vanishes at both endpoints  -> (L/pi)^2.
    """
    if length <= 0.0:
        raise NonPositiveCoefficient("length must be > 0")
    if vanishing == "one_end":
        return (2.0 * length / math.pi) ** 2
    if vanishing == "both_ends":
        return (length / math.pi) ** 2
    raise ValueError(f"unknown vanishing mode {vanishing!r}")
