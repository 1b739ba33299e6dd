import numpy as np
import pytest

import pintsolve as ps
from pintsolve.errors import InputError


class TestTimeGrid:
    def test_uniform(self):
        g = ps.build_time_grid("uniform", 4, 2.0)
        assert np.allclose(g.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
        assert np.allclose(g.steps, 0.5)
        assert g.N == 4
        assert g.T == pytest.approx(2.0)

    def test_perturbed_stays_positive_and_sums_to_T(self):
        g = ps.build_time_grid("perturbed", 50, 3.0, perturbation=0.4, seed=2)
        assert np.all(g.steps > 0)
        assert g.steps.sum() == pytest.approx(3.0)
        assert not np.allclose(g.steps, g.steps[0])

    def test_perturbed_is_seeded(self):
        a = ps.build_time_grid("perturbed", 10, 1.0, seed=5)
        b = ps.build_time_grid("perturbed", 10, 1.0, seed=5)
        assert np.array_equal(a.nodes, b.nodes)

    def test_rejects_bad_input(self):
        with pytest.raises(InputError):
            ps.build_time_grid("uniform", 0, 1.0)
        with pytest.raises(InputError):
            ps.build_time_grid("uniform", 4, -1.0)
        with pytest.raises(InputError):
            ps.build_time_grid("nope", 4, 1.0)


class TestAssembly1d:
    def test_two_cells(self):
        # one interior node: M = h*2/3 ... with h = 1/2: M = [[1/3]], A = [[4]]
        mass, stiff = ps.assemble_mass_stiffness_1d(2)
        assert mass.dim == 1
        assert mass.todense() == pytest.approx(np.array([[1.0 / 3.0]]))
        assert stiff.todense() == pytest.approx(np.array([[4.0]]))

    def test_four_cells(self):
        h = 0.25
        mass, stiff = ps.assemble_mass_stiffness_1d(4)
        m_ref = (h / 6.0) * np.array([[4, 1, 0], [1, 4, 1], [0, 1, 4]])
        a_ref = (1.0 / h) * np.array([[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
        assert np.allclose(mass.todense(), m_ref)
        assert np.allclose(stiff.todense(), a_ref)

    def test_quadrature_exactness(self):
        # integral of the hat-function interpolant of x(1-x) under M-weighting
        # against itself equals the exact piecewise-linear L2 norm
        cells = 16
        mass, _ = ps.assemble_mass_stiffness_1d(cells)
        x = np.arange(1, cells) / cells
        u = x * (1 - x)
        # independent oracle: Simpson-exact integration of the P1 interpolant
        nodes = np.arange(cells + 1) / cells
        vals = np.concatenate([[0.0], u, [0.0]])
        total = 0.0
        for i in range(cells):
            a, b = vals[i], vals[i + 1]
            total += (a * a + a * b + b * b) / 3.0 / cells
        assert u @ mass.dot(u) == pytest.approx(total, rel=1e-13)


class TestAssembly2d:
    def test_smallest_mesh(self):
        # 2x2 cells, one interior node; five-point stencil gives A = [[4]]
        mass, stiff = ps.assemble_mass_stiffness_2d(2)
        assert mass.dim == 1
        h = 0.5
        assert mass.todense() == pytest.approx(np.array([[h * h / 2.0]]))
        assert stiff.todense() == pytest.approx(np.array([[4.0]]))

    def test_stiffness_is_five_point_stencil(self):
        cells = 4
        _, stiff = ps.assemble_mass_stiffness_2d(cells)
        dim = (cells - 1) ** 2
        a = stiff.todense()
        ref = np.zeros((dim, dim))
        n = cells - 1
        for j in range(n):
            for i in range(n):
                row = j * n + i
                ref[row, row] = 4.0
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    ii, jj = i + di, j + dj
                    if 0 <= ii < n and 0 <= jj < n:
                        ref[row, jj * n + ii] = -1.0
        assert np.allclose(a, ref)

    def test_mass_row_sums(self):
        # interior rows of M sum to h^2 (the nodal cell area), boundary-adjacent
        # rows to less; total is bounded by the domain area
        cells = 8
        mass, _ = ps.assemble_mass_stiffness_2d(cells)
        h = 1.0 / cells
        sums = mass.todense().sum(axis=1)
        n = cells - 1
        interior = [j * n + i for j in range(1, n - 1) for i in range(1, n - 1)]
        assert np.allclose(sums[interior], h * h)
        assert mass.todense().sum() < 1.0

    def test_spd(self):
        mass, stiff = ps.assemble_mass_stiffness_2d(8)
        assert np.linalg.eigvalsh(mass.todense())[0] > 0
        assert np.linalg.eigvalsh(stiff.todense())[0] > 0


class TestAlpha:
    def test_uniform_constant_coefficient_gives_one(self):
        grid = ps.build_time_grid("uniform", 8, 1.0)
        spec = ps.make_heat_problem("1d", 8, grid)
        assert spec.alpha == pytest.approx(1.0)

    def test_matches_dense_oracle(self):
        grid = ps.build_time_grid("perturbed", 6, 1.0, perturbation=0.3, seed=3)
        spec = ps.make_heat_problem("1d", 8, grid, coeff=lambda t: 1.0 + t)
        # oracle: alpha = max over n of max(lam_max, 1/lam_min) of the pencil
        # (tau_n A_n, tau_ref A_ref)
        import scipy.linalg

        worst = 1.0
        ref = spec.tau_ref * spec.a_ref.todense()
        for tau, a_n in zip(spec.grid.steps, spec.stiffness):
            w = scipy.linalg.eigh(tau * a_n.todense(), ref, eigvals_only=True)
            worst = max(worst, w[-1], 1.0 / w[0])
        assert spec.alpha == pytest.approx(worst, rel=1e-10)

    def test_quasi_uniformity_bound_holds(self):
        grid = ps.build_time_grid("perturbed", 5, 1.0, perturbation=0.4, seed=9)
        spec = ps.make_heat_problem("1d", 6, grid, coeff=lambda t: 2.0 - t)
        ref = spec.tau_ref * spec.a_ref.todense()
        alpha = spec.alpha
        rng = np.random.default_rng(0)
        for tau, a_n in zip(spec.grid.steps, spec.stiffness):
            for _ in range(20):
                v = rng.standard_normal(spec.dim)
                q = (tau * (v @ a_n.dot(v))) / (v @ ref @ v)
                assert 1.0 / alpha - 1e-12 <= q <= alpha + 1e-12


class TestMakeHeatProblem:
    def test_manufactured_load_solves_to_decaying_sine(self):
        # time refinement must converge to w(t)*sine at first order
        errs = []
        for N in (16, 32):
            grid = ps.build_time_grid("uniform", N, 1.0)
            spec = ps.make_heat_problem("1d", 128, grid, data="manufactured")
            u = ps.sequential_euler_solve(spec)
            x = np.arange(1, 128) / 128
            exact = np.exp(-grid.nodes[-1]) * np.sin(np.pi * x)
            # the spatial part is not an exact eigenvector of the discrete
            # pencil, so compare at a fine mesh and coarse tolerance
            errs.append(np.abs(u[-1] - exact).max())
        assert errs[1] < 0.7 * errs[0]

    def test_zero_data(self):
        grid = ps.build_time_grid("uniform", 4, 1.0)
        spec = ps.make_heat_problem("2d", 4, grid, data="zero")
        assert not spec.load.any()
        assert not spec.u_init.any()

    def test_rejects_nonpositive_coefficient(self):
        grid = ps.build_time_grid("uniform", 4, 1.0)
        with pytest.raises(InputError):
            ps.make_heat_problem("1d", 8, grid, coeff=lambda t: t - 0.5)

    def test_rejects_unknown_space_and_data(self):
        grid = ps.build_time_grid("uniform", 4, 1.0)
        with pytest.raises(InputError):
            ps.make_heat_problem("3d", 8, grid)
        with pytest.raises(InputError):
            ps.make_heat_problem("1d", 8, grid, data="nonsense")


class TestSerialization:
    def test_round_trip(self, tmp_path):
        grid = ps.build_time_grid("perturbed", 6, 1.5, perturbation=0.2, seed=4)
        spec = ps.make_heat_problem("1d", 8, grid, coeff=lambda t: 1.0 + 0.5 * t,
                                    data="random", seed=12)
        path = tmp_path / "problem.txt"
        ps.save_problem(spec, str(path))
        back = ps.load_problem(str(path))
        assert np.array_equal(back.grid.nodes, spec.grid.nodes)
        assert np.array_equal(back.load, spec.load)
        assert np.array_equal(back.u_init, spec.u_init)
        assert back.tau_ref == spec.tau_ref
        assert back.alpha == spec.alpha
        assert np.array_equal(back.mass.todense(), spec.mass.todense())
        for a, b in zip(back.stiffness, spec.stiffness):
            assert np.array_equal(a.todense(), b.todense())
        assert np.array_equal(back.a_ref.todense(), spec.a_ref.todense())

    def test_solutions_agree_after_round_trip(self, tmp_path):
        grid = ps.build_time_grid("uniform", 5, 1.0)
        spec = ps.make_heat_problem("1d", 8, grid, data="random", seed=3)
        path = tmp_path / "p.txt"
        ps.save_problem(spec, str(path))
        back = ps.load_problem(str(path))
        assert np.array_equal(
            ps.sequential_euler_solve(spec), ps.sequential_euler_solve(back)
        )

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("not-a-problem\n")
        with pytest.raises(InputError):
            ps.load_problem(str(path))
