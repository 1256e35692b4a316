"""Assembly of the discrete generator and the energy Gram matrix.

The semigroup generator acts on (u, v, y, z, w, eta_1..eta_K) as

    u_t = v
    v_t = (alpha*u_xx - gamma*beta*y_xx - delta*w_x) / rho
    y_t = z
    z_t = (beta*y_xx - gamma*beta*u_xx) / mu
    w_t = c*Lambda_xx - delta*v_x
    eta_k,t = -(eta_k - eta_{k-1})/(s_k - s_{k-1}) + w        (eta_0 = 0)

with the flux potential Lambda = (1-m)*w + m * sum_k q_k * eta_k, where
q_k = s_weights[k]*sigma(s_k) are the age-quadrature masses.

Discretization choices that make the energy estimate hold *structurally*
(not just in the limit):

* second-order central stencils for u_xx, y_xx, w_xx, eta_xx; ghost-point
  reflection at x = L for the zero-slope conditions on u, y;
* the w-gradient feeding the v-equation is minus the weighted transpose of
  the v-gradient feeding the w-equation (which works out to the centered
  stencil with an odd ghost at x = L), so the delta-coupling is exactly
  skew in the energy inner product;
* first-order upwind for eta_s (inflow at s = 0), which dissipates because
  the rates a_k = q_k/(s_k - s_{k-1}) stay admissible (2*a_1 >= a_2 and
  nonincreasing beyond) on a geometric age grid with nonincreasing sigma;
* the Gram matrix is built from the same stiffness forms, so
  Re <A U, U>_M  =  -c(1-m)*||w_x||^2  -  (discrete memory dissipation)
  holds to rounding for every state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import ShapeMismatch, SingularOperator
from .grid import GridSpec, unpack
from .params import MemoryKernel, PhysicalParams, eval_sigma

__all__ = ["DiscreteOperator", "assemble", "apply", "solve_static",
           "dissipation_form", "flux_potential", "dump_matrix", "load_matrix"]

STATIC_RESIDUAL_TOL = 1e-10


@dataclass
class DiscreteOperator:
    """Dense generator A, energy Gram M, and the building blocks both share.

    Immutable after assembly; concurrent read-only use is safe.  Cached
    factorizations are created lazily on first use.
    """

    params: PhysicalParams
    kernel: MemoryKernel
    grid: GridSpec
    a_matrix: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    # shared difference/quadrature blocks
    stiff_full: np.ndarray = field(repr=False)      # K_L: energy form of |f_x|^2, mixed BC
    stiff_interior: np.ndarray = field(repr=False)  # K_0: same with Dirichlet ends
    weights_full: np.ndarray = field(repr=False)    # trapezoid masses, nodes 1..n_x
    weights_interior: np.ndarray = field(repr=False)
    sigma_masses: np.ndarray = field(repr=False)    # q_k = s_weights[k]*sigma(s_k)

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def _static_lu(self):
        try:
            lu, piv = sla.lu_factor(self.a_matrix)
        except sla.LinAlgError as exc:  # pragma: no cover - dense LU rarely throws
            raise SingularOperator(str(exc)) from exc
        if not np.all(np.isfinite(lu)):
            raise SingularOperator("LU factorization of the generator is not finite")
        return lu, piv

    @cached_property
    def _gram_eig(self):
        vals, vecs = sla.eigh(self.gram)
        if vals[0] <= 0.0:
            raise SingularOperator(
                f"Gram matrix not positive definite (min eigenvalue {vals[0]:.3e})")
        return vals, vecs

    @cached_property
    def gram_sqrt(self) -> np.ndarray:
        vals, vecs = self._gram_eig
        return (vecs * np.sqrt(vals)) @ vecs.T

    @cached_property
    def gram_inv_sqrt(self) -> np.ndarray:
        vals, vecs = self._gram_eig
        return (vecs / np.sqrt(vals)) @ vecs.T

    @cached_property
    def generator_sym(self) -> np.ndarray:
        """M^{1/2} A M^{-1/2}: the generator seen from the energy inner
        product, so plain 2-norms/adjoints match the physical ones."""
        return self.gram_sqrt @ self.a_matrix @ self.gram_inv_sqrt

    def norm_energy(self, state: np.ndarray) -> float:
        """||state||_M = sqrt(state^* M state) (twice the energy, squared)."""
        return float(np.sqrt(max(np.real(np.vdot(state, self.gram @ state)), 0.0)))


def assemble(params: PhysicalParams, kernel: MemoryKernel,
             grid: GridSpec) -> DiscreteOperator:
    """Build the dense generator and Gram matrix for the given grid."""
    n, ni, ns = grid.n_full, grid.n_interior, grid.n_s
    h = grid.h
    m, c, delta = params.m, params.c, params.delta

    d2_full = _laplacian_mixed(n, h)          # Dirichlet at 0, ghost Neumann at L
    d2_int = _laplacian_dirichlet(ni, h)
    wf = np.full(n, h)
    wf[-1] = 0.5 * h
    wi = np.full(ni, h)

    # stiffness forms: f^T K f ~ integral |f_x|^2 (exact summation by parts)
    kl = -(wf[:, None] * d2_full)
    kl = 0.5 * (kl + kl.T)
    k0 = -(wi[:, None] * d2_int)
    k0 = 0.5 * (k0 + k0.T)

    # gradient pair: grad_int maps full nodes -> interior (v_x in the w-row),
    # grad_full is its negative weighted transpose (w_x in the v-row).
    grad_int = _gradient_to_interior(n, ni, h)
    grad_full = -(grad_int.T * wi[None, :]) / wf[:, None]

    q = grid.s_weights * eval_sigma(kernel, grid.s_nodes) if ns else np.zeros(0)
    steps = grid.s_steps

    dim = grid.dim
    a = np.zeros((dim, dim))
    off = grid.offset
    sl = {blk: slice(off(blk), off(blk) + (ni if blk in ("w",) else n))
          for blk in ("u", "v", "y", "z", "w")}
    eta_sl = [slice(off("eta", k), off("eta", k) + ni) for k in range(ns)]

    alpha, gb = params.alpha, params.gamma * params.beta
    a[sl["u"], sl["v"]] = np.eye(n)
    a[sl["v"], sl["u"]] = (alpha / params.rho) * d2_full
    a[sl["v"], sl["y"]] = (-gb / params.rho) * d2_full
    a[sl["v"], sl["w"]] = (-delta / params.rho) * grad_full
    a[sl["y"], sl["z"]] = np.eye(n)
    a[sl["z"], sl["y"]] = (params.beta / params.mu) * d2_full
    a[sl["z"], sl["u"]] = (-gb / params.mu) * d2_full
    a[sl["w"], sl["w"]] = (c * (1.0 - m)) * d2_int
    a[sl["w"], sl["v"]] = -delta * grad_int
    for k in range(ns):
        a[sl["w"], eta_sl[k]] = (c * m * q[k]) * d2_int
        a[eta_sl[k], eta_sl[k]] = (-1.0 / steps[k]) * np.eye(ni)
        if k > 0:
            a[eta_sl[k], eta_sl[k - 1]] = (1.0 / steps[k]) * np.eye(ni)
        a[eta_sl[k], sl["w"]] = np.eye(ni)

    gram = np.zeros((dim, dim))
    gram[sl["u"], sl["u"]] = alpha * kl
    gram[sl["u"], sl["y"]] = -gb * kl
    gram[sl["y"], sl["u"]] = -gb * kl
    gram[sl["y"], sl["y"]] = params.beta * kl
    gram[sl["v"], sl["v"]] = params.rho * np.diag(wf)
    gram[sl["z"], sl["z"]] = params.mu * np.diag(wf)
    gram[sl["w"], sl["w"]] = np.diag(wi)
    for k in range(ns):
        gram[eta_sl[k], eta_sl[k]] = (c * m * q[k]) * k0

    return DiscreteOperator(params=params, kernel=kernel, grid=grid,
                            a_matrix=a, gram=gram,
                            stiff_full=kl, stiff_interior=k0,
                            weights_full=wf, weights_interior=wi,
                            sigma_masses=q)


def _laplacian_mixed(n: int, h: float) -> np.ndarray:
    """Second difference on nodes 1..n: value 0 at node 0, zero slope at
    node n via the ghost f_{n+1} = f_{n-1}."""
    d2 = np.zeros((n, n))
    inv_h2 = 1.0 / h**2
    for a in range(n - 1):
        if a > 0:
            d2[a, a - 1] = inv_h2
        d2[a, a] = -2.0 * inv_h2
        d2[a, a + 1] = inv_h2
    d2[n - 1, n - 2] = 2.0 * inv_h2
    d2[n - 1, n - 1] = -2.0 * inv_h2
    return d2

def _laplacian_dirichlet(ni: int, h: float) -> np.ndarray:
    """Second difference on interior nodes with zero boundary values."""
    inv_h2 = 1.0 / h**2
    d2 = -2.0 * inv_h2 * np.eye(ni)
    idx = np.arange(ni - 1)
    d2[idx, idx + 1] = inv_h2
    d2[idx + 1, idx] = inv_h2
    return d2


def _gradient_to_interior(n: int, ni: int, h: float) -> np.ndarray:
    """Centered first difference of a full-node field, evaluated at interior
    nodes (the field vanishes at node 0)."""
    g = np.zeros((ni, n))
    inv_2h = 0.5 / h
    for a in range(ni):
        g[a, a + 1] = inv_2h
        if a > 0:
            g[a, a - 1] = -inv_2h
    return g


def apply(op: DiscreteOperator, state: np.ndarray) -> np.ndarray:
    """Matrix-vector action of the generator."""
    state = np.asarray(state)
    if state.shape != (op.dim,):
        raise ShapeMismatch(f"state has shape {state.shape}, wants ({op.dim},)")
    return op.a_matrix @ state


def _lu_solve_real(lu_piv, rhs: np.ndarray) -> np.ndarray:
    """LU solve with a real factorization and possibly complex right side."""
    if np.iscomplexobj(rhs):
        return (sla.lu_solve(lu_piv, rhs.real)
                + 1j * sla.lu_solve(lu_piv, rhs.imag))
    return sla.lu_solve(lu_piv, rhs)


def solve_static(op: DiscreteOperator, f: np.ndarray,
                 tol: float = STATIC_RESIDUAL_TOL) -> np.ndarray:
    """Solve -A u = f.  The continuous generator is an isomorphism, so a
    singular discrete matrix signals a discretization bug."""
    f = np.asarray(f)
    if f.shape != (op.dim,):
        raise ShapeMismatch(f"rhs has shape {f.shape}, wants ({op.dim},)")
    f_norm = float(np.linalg.norm(f))
    if f_norm == 0.0:
        return np.zeros(op.dim, dtype=f.dtype)
    lu_piv = op._static_lu
    u = _lu_solve_real(lu_piv, -f)
    for _ in range(3):
        residual = -(op.a_matrix @ u) - f
        if np.linalg.norm(residual) <= tol * f_norm:
            break
        u += _lu_solve_real(lu_piv, residual)
    if not np.all(np.isfinite(u)):
        raise SingularOperator("static solve produced non-finite values")
    residual = np.linalg.norm(-(op.a_matrix @ u) - f)
    if residual > tol * f_norm:
        raise SingularOperator(
            f"static solve stalled at relative residual {residual / f_norm:.3e}")
    return u


def dissipation_form(op: DiscreteOperator, state: np.ndarray) -> tuple[float, float]:
    """The two nonpositive terms of the discrete energy balance.

    flux_term   = -c(1-m) * ||w_x||^2 (discrete),
    memory_term = the upwind transport dissipation, the discrete counterpart
                  of (c m / 2) * integral sigma'(s) |eta_x|^2 ds dx.

    Their sum equals Re(state^* M A state) to rounding, so the recorded
    energy identity closes exactly in space and the only residual left in a
    trajectory is the time-quadrature error.
    """
    state = np.asarray(state)
    if state.shape != (op.dim,):
        raise ShapeMismatch(f"state has shape {state.shape}, wants ({op.dim},)")
    b = unpack(op.grid, state)
    p = op.params
    k0 = op.stiff_interior
    flux = -p.c * (1.0 - p.m) * float(np.real(np.vdot(b.w, k0 @ b.w)))
    memory = 0.0
    if op.grid.n_s:
        steps = op.grid.s_steps
        prev = np.zeros_like(b.w)
        for k in range(op.grid.n_s):
            rate = p.c * p.m * op.sigma_masses[k] / steps[k]
            memory -= rate * float(np.real(np.vdot(b.eta[k], k0 @ (b.eta[k] - prev))))
            prev = b.eta[k]
    return flux, memory


def flux_potential(op: DiscreteOperator, state: np.ndarray) -> np.ndarray:
    """Lambda = (1-m)*w + m * sum_k q_k eta_k on the interior nodes."""
    b = unpack(op.grid, np.asarray(state))
    lam = (1.0 - op.params.m) * b.w.astype(np.result_type(state, np.float64), copy=True)
    for k in range(op.grid.n_s):
        lam = lam + op.params.m * op.sigma_masses[k] * b.eta[k]
    return lam


def dump_matrix(matrix: np.ndarray, path) -> None:
    """Plain-text dump: first line 'rows cols', then one row per line of
    space-separated values (shortest round-trip decimal)."""
    matrix = np.asarray(matrix)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{matrix.shape[0]} {matrix.shape[1]}\n")
        for row in matrix:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


def load_matrix(path) -> np.ndarray:
    """Inverse of dump_matrix."""
    with open(path, encoding="ascii") as fh:
        rows, cols = (int(t) for t in fh.readline().split())
        out = np.loadtxt(fh, ndmin=2)
    if out.shape != (rows, cols):
        raise ShapeMismatch(f"matrix file header {(rows, cols)} != body {out.shape}")
    return out
