import numpy as np
import pytest

from piezobeam import (
    HistoryRequiredForPositiveM,
    ShapeMismatch,
    build_grid,
    eval_sigma,
    exponential_kernel,
    make_params,
    pack,
    unpack,
)

KER = exponential_kernel(1.0)


def test_quadrature_reproduces_mass_exactly():
    grid = build_grid(make_params(m=0.5), KER, 16, 16)
    mass = np.dot(grid.s_weights, eval_sigma(KER, grid.s_nodes))
    assert mass == pytest.approx(KER.g0, rel=1e-12)


def test_fourier_limit_has_empty_history():
    grid = build_grid(make_params(m=0.0), KER, 16, 0)
    assert grid.n_s == 0
    assert grid.s_nodes.size == 0
    assert grid.dim == 4 * 16 + 15


def test_positive_m_requires_history():
    with pytest.raises(HistoryRequiredForPositiveM):
        build_grid(make_params(m=0.5), KER, 16, 0)


def test_small_nx_rejected():
    with pytest.raises(ShapeMismatch):
        build_grid(make_params(m=0.5), KER, 4, 8)


def test_dimension_matches_block_layout():
    for n_x, n_s in ((8, 1), (16, 4), (32, 8), (64, 16)):
        grid = build_grid(make_params(m=0.5), KER, n_x, n_s)
        assert grid.dim == 4 * n_x + (1 + n_s) * (n_x - 1)
        assert grid.offset("eta", n_s - 1) + grid.n_interior == grid.dim


def test_geometric_ratio_within_bounds():
    for n_s in (2, 4, 8, 16, 64):
        grid = build_grid(make_params(m=0.5), KER, 16, n_s)
        ratios = grid.s_nodes[1:] / grid.s_nodes[:-1]
        assert np.all(ratios >= 1.0 - 1e-12)
        assert np.all(ratios <= 4.0 + 1e-12)


def test_upwind_rates_admissible():
    # requirement for the transport block to dissipate: 2*a_1 >= a_2 and
    # a_k nonincreasing from the second slice on
    for n_s in (2, 4, 8, 16):
        grid = build_grid(make_params(m=0.5), KER, 16, n_s)
        rates = grid.s_weights * eval_sigma(KER, grid.s_nodes) / grid.s_steps
        assert 2.0 * rates[0] >= rates[1] * (1 - 1e-12)
        assert np.all(np.diff(rates[1:]) <= 1e-12 * rates[0])


def test_age_moment_error_shrinks_with_ns():
    # quadrature of integral s*sigma(s) ds = 1/k against doubling n_s
    exact = 1.0
    errors = []
    for n_s in (4, 8, 16, 32, 64):
        grid = build_grid(make_params(m=0.5), KER, 16, n_s)
        approx = np.dot(grid.s_weights * eval_sigma(KER, grid.s_nodes), grid.s_nodes)
        errors.append(abs(approx - exact))
    assert all(b < a for a, b in zip(errors, errors[1:]))


class TestPackUnpack:
    grid = build_grid(make_params(m=0.5), KER, 12, 3)

    def _blocks(self, rng):
        g = self.grid
        return (rng.standard_normal(g.n_full), rng.standard_normal(g.n_full),
                rng.standard_normal(g.n_full), rng.standard_normal(g.n_full),
                rng.standard_normal(g.n_interior),
                rng.standard_normal((g.n_s, g.n_interior)))

    def test_zero_blocks_pack_to_zero(self):
        g = self.grid
        vec = pack(g, np.zeros(g.n_full), np.zeros(g.n_full), np.zeros(g.n_full),
                   np.zeros(g.n_full), np.zeros(g.n_interior),
                   np.zeros((g.n_s, g.n_interior)))
        assert not vec.any()

    @pytest.mark.parametrize("seed", range(5))
    def test_round_trip(self, seed):
        blocks = self._blocks(np.random.default_rng(seed))
        back = unpack(self.grid, pack(self.grid, *blocks))
        for want, got in zip(blocks, back):
            np.testing.assert_array_equal(want, got)

    def test_complex_round_trip(self):
        rng = np.random.default_rng(9)
        blocks = tuple(b + 1j * b for b in self._blocks(rng))
        vec = pack(self.grid, *blocks)
        assert np.iscomplexobj(vec)
        back = unpack(self.grid, vec)
        np.testing.assert_array_equal(back.eta, blocks[5])

    def test_wrong_w_length_rejected(self):
        g = self.grid
        with pytest.raises(ShapeMismatch):
            pack(g, np.zeros(g.n_full), np.zeros(g.n_full), np.zeros(g.n_full),
                 np.zeros(g.n_full), np.zeros(g.n_interior + 1),
                 np.zeros((g.n_s, g.n_interior)))

    def test_wrong_state_length_rejected(self):
        with pytest.raises(ShapeMismatch):
            unpack(self.grid, np.zeros(self.grid.dim + 1))
