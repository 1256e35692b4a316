import numpy as np
import pytest
import scipy.linalg as sla

from piezobeam import (
    ShapeMismatch,
    apply,
    assemble,
    build_grid,
    dissipation_form,
    dump_matrix,
    exponential_kernel,
    load_matrix,
    make_params,
    pack,
    solve_static,
    unpack,
)

KER = exponential_kernel(1.0)


def _op(m=0.5, n_x=8, n_s=4, **kw):
    p = make_params(m=m, **kw)
    return assemble(p, KER, build_grid(p, KER, n_x, n_s))


@pytest.fixture(scope="module")
def op_desk():
    return _op(m=0.5, n_x=16, n_s=8)


class TestDissipativity:
    @pytest.mark.parametrize("m", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_gram_weighted_form_negative_semidefinite(self, m):
        op = _op(m=m, n_x=8, n_s=4)
        ma = op.gram @ op.a_matrix
        top = sla.eigvalsh(ma + ma.T)[-1]
        assert top <= 1e-10 * np.linalg.norm(ma, 2)

    def test_gram_positive_definite(self, op_desk):
        assert sla.eigvalsh(op_desk.gram)[0] > 0.0

    @pytest.mark.parametrize("m", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_random_states_dissipate(self, m):
        op = _op(m=m)
        rng = np.random.default_rng(17)
        for _ in range(10):
            u = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
            form = np.real(np.vdot(u, op.gram @ (op.a_matrix @ u)))
            nrm2 = np.real(np.vdot(u, op.gram @ u))
            assert form <= 1e-12 * nrm2


class TestLimitCases:
    def test_fourier_limit_thermal_row(self):
        # m = 0: w_t = c*w_xx - delta*v_x, no history columns at all
        op = _op(m=0.0, n_x=8, n_s=0, c=1.3, delta=0.7)
        g = op.grid
        assert g.dim == 4 * 8 + 7
        x = g.x_interior
        w = np.sin(np.pi * x / g.length)
        state = pack(g, *(np.zeros(g.n_full),) * 4, w, np.zeros((0, g.n_interior)))
        out = unpack(g, apply(op, state))
        h = g.h
        w_pad = np.concatenate([[0.0], w, [0.0]])
        lap = (w_pad[:-2] - 2 * w_pad[1:-1] + w_pad[2:]) / h**2
        np.testing.assert_allclose(out.w, 1.3 * lap, rtol=1e-12, atol=1e-12)

    def test_memory_limit_has_no_instantaneous_diffusion(self):
        # m = 1: the w-row couples only to eta and v
        op = _op(m=1.0, n_x=8, n_s=4)
        g = op.grid
        off_w = g.offset("w")
        block = op.a_matrix[off_w:off_w + g.n_interior, off_w:off_w + g.n_interior]
        assert np.all(block == 0.0)

    def test_memory_limit_flux_dissipation_vanishes(self):
        op = _op(m=1.0, n_x=8, n_s=4)
        rng = np.random.default_rng(3)
        flux, memory = dissipation_form(op, rng.standard_normal(op.dim))
        assert flux == 0.0
        assert memory <= 0.0


class TestApply:
    def test_zero_maps_to_zero(self, op_desk):
        assert not apply(op_desk, np.zeros(op_desk.dim)).any()

    def test_linearity(self, op_desk):
        rng = np.random.default_rng(5)
        u = rng.standard_normal(op_desk.dim)
        v = rng.standard_normal(op_desk.dim)
        lhs = apply(op_desk, 2.0 * u - 3.0 * v)
        rhs = 2.0 * apply(op_desk, u) - 3.0 * apply(op_desk, v)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-13, atol=1e-13)

    def test_constant_u_gives_zero_u_row(self, op_desk):
        g = op_desk.grid
        state = pack(g, np.ones(g.n_full), np.zeros(g.n_full), np.zeros(g.n_full),
                     np.zeros(g.n_full), np.zeros(g.n_interior),
                     np.zeros((g.n_s, g.n_interior)))
        out = unpack(g, apply(op_desk, state))
        # u_t = v and the v-block of the input is zero
        assert not out.u.any()

    def test_shape_mismatch(self, op_desk):
        with pytest.raises(ShapeMismatch):
            apply(op_desk, np.zeros(op_desk.dim - 1))


class TestStaticSolve:
    def test_zero_rhs(self, op_desk):
        assert not solve_static(op_desk, np.zeros(op_desk.dim)).any()

    @pytest.mark.parametrize("m", [0.0, 0.25, 0.5, 0.75, 1.0])
    def test_random_rhs_residual(self, m):
        op = _op(m=m)
        rng = np.random.default_rng(11)
        for _ in range(5):
            f = rng.standard_normal(op.dim)
            u = solve_static(op, f)
            res = np.linalg.norm(-(op.a_matrix @ u) - f)
            assert res <= 1e-10 * np.linalg.norm(f)

    def test_lu_oracle_agreement(self, op_desk):
        rng = np.random.default_rng(2)
        f = rng.standard_normal(op_desk.dim)
        u = solve_static(op_desk, f)
        oracle = np.linalg.solve(-op_desk.a_matrix, f)
        np.testing.assert_allclose(u, oracle, rtol=1e-9, atol=1e-12)

    def test_solve_then_apply_round_trip(self, op_desk):
        rng = np.random.default_rng(4)
        f = rng.standard_normal(op_desk.dim)
        back = -apply(op_desk, solve_static(op_desk, f))
        np.testing.assert_allclose(back, f, rtol=1e-9, atol=1e-11)


class TestDissipationForm:
    def test_zero_state(self, op_desk):
        assert dissipation_form(op_desk, np.zeros(op_desk.dim)) == (0.0, 0.0)

    @pytest.mark.parametrize("m", [0.25, 0.5, 1.0])
    def test_matches_quadratic_form(self, m):
        op = _op(m=m, n_x=12, n_s=6)
        rng = np.random.default_rng(23)
        for _ in range(5):
            u = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
            flux, memory = dissipation_form(op, u)
            assert flux <= 0.0 and memory <= 0.0
            form = np.real(np.vdot(u, op.gram @ (op.a_matrix @ u)))
            assert flux + memory == pytest.approx(form, rel=1e-8)


class TestConsistency:
    """Applying the generator to samples of a smooth field reproduces the
    continuous right-hand sides at second order in h."""

    def _manufactured_error(self, n_x):
        p = make_params(m=0.5, rho=1.2, mu=0.9, delta=0.8, c=1.1)
        grid = build_grid(p, KER, n_x, 6)
        op = assemble(p, KER, grid)
        L = p.length
        xf, xi = grid.x_full, grid.x_interior

        # boundary-adapted modes: value 0 at x=0, slope 0 at L (u, y blocks);
        # value 0 at both ends with vanishing curvature there (w, eta)
        su = lambda x: np.sin(0.5 * np.pi * x / L)
        sy = lambda x: np.sin(1.5 * np.pi * x / L)
        sw = lambda x: np.sin(np.pi * x / L)
        sp = lambda x: np.sin(2.0 * np.pi * x / L)

        u, v = su(xf), 0.7 * sy(xf)
        y, z = sy(xf), 0.3 * su(xf)
        w = sw(xi)
        eta = grid.s_nodes[:, None] * sp(xi)[None, :]   # linear in age: upwind exact
        state = pack(grid, u, v, y, z, w, eta)
        out = unpack(grid, apply(op, state))

        d2u = -(0.5 * np.pi / L) ** 2 * su(xf)
        d2y = -(1.5 * np.pi / L) ** 2 * sy(xf)
        d2v = -(1.5 * np.pi / L) ** 2 * 0.7 * sy(xf)
        dw_f = (np.pi / L) * np.cos(np.pi * xf / L)
        dv_i = 0.7 * (1.5 * np.pi / L) * np.cos(1.5 * np.pi * xi / L)
        d2w = -(np.pi / L) ** 2 * sw(xi)
        d2eta = -(2.0 * np.pi / L) ** 2 * sp(xi)

        want_v = (p.alpha * d2u - p.gamma * p.beta * d2y - p.delta * dw_f) / p.rho
        want_z = (p.beta * d2y - p.gamma * p.beta * d2u) / p.mu
        q = op.sigma_masses
        mem = p.c * p.m * float(np.dot(q, grid.s_nodes)) * d2eta
        want_w = p.c * (1 - p.m) * d2w + mem - p.delta * dv_i
        want_eta0 = -sp(xi) + w   # row is -eta_s + w, exact in age

        errs = [
            np.max(np.abs(out.v - want_v)),
            np.max(np.abs(out.z - want_z)),
            np.max(np.abs(out.w - want_w)),
            np.max(np.abs(unpack(grid, apply(op, state)).eta[0] - want_eta0)),
        ]
        return np.array(errs)

    def test_second_order_in_h(self):
        e1 = self._manufactured_error(32)
        e2 = self._manufactured_error(64)
        ratios = e1[:3] / e2[:3]
        assert np.all(ratios > 3.3) and np.all(ratios < 4.7)
        # the transport row is exact for age-linear history
        assert e1[3] < 1e-10


class TestThermalReconstruction:
    """For forcing supported in the w and eta rows, the static solve must
    reproduce the closed-form temperature: solve for the flux potential from
    its double integration, then divide by the effective conductivity
    c(1-m) + c*m*integral(s*sigma)."""

    def test_reconstruction_matches(self):
        p = make_params(m=0.5, c=1.4, delta=0.6)
        grid = build_grid(p, KER, 24, 6)
        op = assemble(p, KER, grid)
        g = grid
        rng = np.random.default_rng(8)
        f5 = np.sin(np.pi * g.x_interior / p.length) * 1.3
        f6 = rng.standard_normal((g.n_s, g.n_interior))
        f = pack(g, *(np.zeros(g.n_full),) * 4, f5, f6)
        u = solve_static(op, f)
        b = unpack(g, u)

        # discrete flux potential from the same Dirichlet stiffness solve
        k0 = op.stiff_interior
        lam = np.linalg.solve(k0, op.weights_interior * (f5 / p.c))
        # upwind-consistent running age integral of f6
        hist = np.cumsum(g.s_steps[:, None] * f6, axis=0)
        q = op.sigma_masses
        m_eff = p.c * (1 - p.m) + p.c * p.m * float(np.dot(q, g.s_nodes))
        w_expect = (p.c / m_eff) * (lam - p.m * (q[:, None] * hist).sum(axis=0))
        np.testing.assert_allclose(b.w, w_expect, rtol=1e-9, atol=1e-11)


def test_matrix_dump_round_trip(tmp_path, op_desk):
    path = tmp_path / "a_matrix.txt"
    dump_matrix(op_desk.a_matrix, path)
    back = load_matrix(path)
    np.testing.assert_array_equal(back, op_desk.a_matrix)
    first = path.read_text().splitlines()[0]
    assert first == f"{op_desk.dim} {op_desk.dim}"
