import math

import numpy as np
import pytest

from hbgauge.assembly import (
    THREADS_ENV,
    AssembledSystem,
    SpectrumHalf,
    assemble,
    compare_spectra,
    eig_report,
    scalar_mass,
    solve_gauged,
    solve_ungauged,
)
from hbgauge.errors import GaugeError
from hbgauge.hierarchy import build_mesh, build_space
from hbgauge.pipeline import build_gauge
from hbgauge.tensor import Geometry, build_level_space

from conftest import EXAMPLE1, EXAMPLE2, brute_force_matrices, mesh_config

TWO_LEVEL = [[[2, 6, 2, 6]]]
SQUARE = Geometry(math.pi, math.pi)


def space_of(degree, elements, refinement, geometry=SQUARE):
    return build_space(build_mesh(degree, elements, refinement, geometry))


class TestAgainstBruteForce:
    @pytest.mark.parametrize("degree", [1, 2])
    def test_two_level(self, degree):
        space = space_of(degree, (4, 4), TWO_LEVEL)
        sys = assemble(space)
        K, M = brute_force_matrices(space)
        scale_k, scale_m = np.abs(K).max(), np.abs(M).max()
        assert np.abs(sys.K.toarray() - K).max() <= 1e-11 * scale_k
        assert np.abs(sys.M.toarray() - M).max() <= 1e-11 * scale_m

    def test_cubic_three_levels(self):
        space = space_of(3, (8, 8), EXAMPLE1)
        sys = assemble(space)
        K, M = brute_force_matrices(space)
        assert np.abs(sys.K.toarray() - K).max() <= 1e-11 * np.abs(K).max()
        assert np.abs(sys.M.toarray() - M).max() <= 1e-11 * np.abs(M).max()

    @pytest.mark.parametrize("degree", [1, 2, 3])
    def test_quadrature_exact_against_rich_rule(self, degree):
        # a (p+1)-point rule integrates the degree-2p integrands exactly
        space = space_of(degree, (1, 1), []) if degree > 1 else space_of(1, (2, 2), [])
        sys = assemble(space)
        K, M = brute_force_matrices(space, extra_points=6)
        np.testing.assert_allclose(sys.K.toarray(), K, atol=1e-13 * np.abs(K).max())
        np.testing.assert_allclose(sys.M.toarray(), M, atol=1e-13 * np.abs(M).max())

    def test_three_levels_anisotropic_geometry(self):
        space = space_of(2, (8, 8), EXAMPLE1, Geometry(2.0, 0.5))
        sys = assemble(space, nu=3.0, epsilon=0.25)
        K, M = brute_force_matrices(space, nu=3.0, epsilon=0.25)
        assert np.abs(sys.K.toarray() - K).max() <= 1e-11 * np.abs(K).max()
        assert np.abs(sys.M.toarray() - M).max() <= 1e-11 * np.abs(M).max()


class TestAssemble:
    @pytest.mark.parametrize("degree, refinement", [(1, EXAMPLE1), (2, EXAMPLE2), (3, EXAMPLE1)])
    def test_gradients_in_kernel(self, degree, refinement):
        sys = assemble(space_of(degree, (8, 8), refinement))
        rng = np.random.default_rng(degree)
        Kd = sys.K.toarray()
        for _ in range(5):
            u = sys.gradient @ rng.standard_normal(sys.gradient.shape[1])
            assert np.linalg.norm(Kd @ u) <= 1e-10 * np.abs(Kd).max() * np.linalg.norm(u)

    def test_symmetric_and_definite(self):
        sys = assemble(space_of(2, (8, 8), EXAMPLE2))
        K, M = sys.K.toarray(), sys.M.toarray()
        np.testing.assert_allclose(K, K.T, atol=1e-13 * np.abs(K).max())
        np.testing.assert_allclose(M, M.T, atol=1e-13 * np.abs(M).max())
        assert np.linalg.eigvalsh(M).min() > 0
        assert np.linalg.eigvalsh(K).min() > -1e-10 * np.abs(K).max()

    def test_material_scaling(self):
        space = space_of(1, (4, 4), TWO_LEVEL)
        s1 = assemble(space)
        s2 = assemble(space, nu=2.0, epsilon=5.0)
        np.testing.assert_allclose(s2.K.toarray(), 2 * s1.K.toarray(), rtol=1e-14)
        np.testing.assert_allclose(s2.M.toarray(), 5 * s1.M.toarray(), rtol=1e-14)

    @pytest.mark.parametrize("nu, eps", [(0.0, 1.0), (1.0, -1.0)])
    def test_nonpositive_materials(self, nu, eps):
        with pytest.raises(ValueError):
            assemble(space_of(1, (2, 2), []), nu, eps)

    def test_threads_give_same_matrices(self, monkeypatch):
        space = space_of(2, (8, 8), EXAMPLE1)
        serial = assemble(space)
        monkeypatch.setenv(THREADS_ENV, "3")
        threaded = assemble(space)
        assert abs(serial.K - threaded.K).max() <= 1e-14 * abs(serial.K).max()
        assert abs(serial.M - threaded.M).max() <= 1e-14 * abs(serial.M).max()

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_scalar_mass_area(self, p):
        lev = build_level_space(p, (5, 3), geometry=SQUARE)
        one = np.ones(lev.dim0)
        assert one @ scalar_mass(lev) @ one == pytest.approx(math.pi**2, rel=1e-13)


class TestSolvers:
    def test_single_level_linear_zero_count(self):
        sys = assemble(space_of(1, (8, 8), []))
        ung = solve_ungauged(sys)
        assert sys.size == 112 and ung.zero_count == 49
        assert ung.nonzero.size == 112 - 49

    def test_gauged_matches_ungauged(self):
        cfg = mesh_config(2, (8, 8), EXAMPLE2)
        exp = build_gauge(cfg)
        sys = assemble(exp.space)
        rep = eig_report(sys, exp.multilevel.cotree)
        assert rep.gauged.zero_count == 0
        assert rep.comparison.length_mismatch == 0
        assert rep.comparison.max_rel_diff < 1e-10

    def test_restriction_is_only_an_approximation(self):
        exp = build_gauge(mesh_config(1, (8, 8), EXAMPLE1))
        sys = assemble(exp.space)
        ung = solve_ungauged(sys)
        schur = solve_gauged(sys, exp.multilevel.cotree, tau=ung.tau)
        plain = solve_gauged(sys, exp.multilevel.cotree, tau=ung.tau, method="restrict")
        assert plain.zero_count == 0
        assert compare_spectra(ung, schur).max_rel_diff < 1e-10
        assert compare_spectra(ung, plain).max_rel_diff > 1e-3

    def test_size_mismatch(self):
        exp = build_gauge(mesh_config(1, (4, 4)))
        sys = assemble(exp.space)
        with pytest.raises(GaugeError):
            solve_gauged(sys, exp.multilevel.cotree[:-1])

    def test_unknown_method(self):
        exp = build_gauge(mesh_config(1, (4, 4)))
        with pytest.raises(ValueError):
            solve_gauged(assemble(exp.space), exp.multilevel.cotree, method="nope")

    def test_unit_square_cavity_first_modes(self):
        sys = assemble(space_of(2, (8, 8), []))
        lam = solve_ungauged(sys).nonzero[:5]
        np.testing.assert_allclose(lam, [1, 1, 2, 4, 4], rtol=1e-2)


class TestCompareSpectra:
    def test_identical(self):
        s = SpectrumHalf(np.array([0.0, 1.0, 2.0]), 1e-10, 1)
        g = SpectrumHalf(np.array([1.0, 2.0]), 1e-10, 0)
        c = compare_spectra(s, g)
        assert c.max_rel_diff == 0.0 and c.length_mismatch == 0

    def test_length_mismatch_is_infinite(self):
        s = SpectrumHalf(np.array([0.0, 1.0, 2.0]), 1e-10, 1)
        g = SpectrumHalf(np.array([1.0]), 1e-10, 0)
        c = compare_spectra(s, g)
        assert c.length_mismatch == 1 and math.isinf(c.max_rel_diff)

    def test_relative_difference(self):
        s = SpectrumHalf(np.array([2.0, 4.0]), 1e-10, 0)
        g = SpectrumHalf(np.array([2.0, 5.0]), 1e-10, 0)
        np.testing.assert_allclose(compare_spectra(s, g).rel_diff, [0.0, 0.25])


def test_assembled_system_size():
    sys = assemble(space_of(1, (3, 3), []))
    assert isinstance(sys, AssembledSystem) and sys.size == sys.K.shape[0] == sys.M.shape[0]
