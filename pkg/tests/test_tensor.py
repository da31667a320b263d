import numpy as np
import pytest

from hbgauge.bspline import eval_basis, greville_abscissae
from hbgauge.tensor import Geometry, build_level_space, evaluate_form, gradient_operator


def grad_by_univariate_derivatives(space, c, pts):
    """Gradient of the X0 field from derivatives of the univariate standard bases."""
    n1, n2 = space.n
    C = c.reshape(n2, n1)
    out = np.zeros((len(pts), 2))
    for m, (x, y) in enumerate(pts):
        Bx = np.zeros((2, n1))
        By = np.zeros((2, n2))
        for d in (0, 1):
            f, v = eval_basis(space.u1, x, d)
            Bx[d, f: f + v.size] = v
            f, v = eval_basis(space.u2, y, d)
            By[d, f: f + v.size] = v
        out[m, 0] = By[0] @ C @ Bx[1]
        out[m, 1] = By[1] @ C @ Bx[0]
    return out


class TestBuildLevelSpace:
    def test_linear_dims(self):
        s = build_level_space(1, (8, 8))
        assert s.dim0 == 81
        assert s.interior_indices(0).size == 49
        assert s.dim1 == 144

    def test_cubic_dims(self):
        s = build_level_space(3, (8, 8))
        assert s.n == (11, 11)
        assert s.dim0 == 121 and s.dim1 == 220 and s.dim2 == 100

    def test_level_doubles_elements(self):
        s = build_level_space(2, (3, 5), level=1)
        assert s.elements == (6, 10)
        assert s.u1.kv.num_elements == 6

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            build_level_space(0, (4, 4))

    def test_index_roundtrip(self):
        s = build_level_space(2, (3, 4))
        for k in range(3):
            for idx in range(s.dim(k)):
                f = s.unravel(k, idx)
                if k == 0:
                    assert s.index0(f.i, f.j) == idx
                elif k == 1:
                    assert s.index1(f.component, f.i, f.j) == idx
                else:
                    assert s.index2(f.i, f.j) == idx

    def test_interior_x1(self):
        s = build_level_space(1, (8, 8))
        # interior edges: (n-1) * (n-2) per component
        assert s.interior_indices(1).size == 2 * 8 * 7


class TestGradientOperator:
    def test_structure(self):
        s = build_level_space(2, (4, 3))
        G = gradient_operator(s)
        assert G.shape == (s.dim1, s.dim0)
        assert set(np.unique(G.data)) <= {-1.0, 1.0}
        nnz = np.diff(G.indptr)
        assert np.all(nnz == 2)
        np.testing.assert_array_equal(G @ np.ones(s.dim0), 0)
        # component 0 row (i, j): -1 at (i, j), +1 at (i+1, j)
        row = s.index1(0, 1, 2)
        assert G[row, s.index0(1, 2)] == -1 and G[row, s.index0(2, 2)] == 1
        row = s.index1(1, 1, 2)
        assert G[row, s.index0(1, 2)] == -1 and G[row, s.index0(1, 3)] == 1

    def test_interior_maps_to_interior(self):
        s = build_level_space(3, (5, 4))
        G = gradient_operator(s)
        rows = np.unique(G[:, s.interior_indices(0)].nonzero()[0])
        assert set(rows) <= set(s.interior_indices(1))

    def test_greville_coefficients_give_unit_gradient(self):
        s = build_level_space(3, (5, 4))
        g = greville_abscissae(s.u1)
        c = np.tile(g, s.n[1])
        pts = np.random.default_rng(2).random((100, 2))
        vals = evaluate_form(s, 1, gradient_operator(s) @ c, pts)
        np.testing.assert_allclose(vals, np.tile([1.0, 0.0], (100, 1)), atol=1e-12)

    @pytest.mark.parametrize("p", [1, 2, 3])
    def test_commutes_with_pointwise_gradient(self, p):
        s = build_level_space(p, (4, 3))
        rng = np.random.default_rng(p)
        c = rng.standard_normal(s.dim0)
        pts = rng.random((50, 2))
        np.testing.assert_allclose(
            evaluate_form(s, 1, gradient_operator(s) @ c, pts),
            grad_by_univariate_derivatives(s, c, pts),
            atol=1e-12 * np.abs(c).max() * s.elements[0],
        )


class TestEvaluateForm:
    def test_constant(self):
        s = build_level_space(2, (3, 3))
        pts = np.random.default_rng(0).random((20, 2))
        np.testing.assert_allclose(evaluate_form(s, 0, np.ones(s.dim0), pts), 1.0, atol=1e-14)

    def test_local_support(self):
        s = build_level_space(2, (6, 6))
        idx = s.index1(0, 2, 3)
        box = s.support_boxes(1)[idx]
        c = np.zeros(s.dim1)
        c[idx] = 1.0
        g = np.linspace(0, 1, 61)
        pts = np.array([(x, y) for x in g for y in g])
        vals = evaluate_form(s, 1, c, pts)
        h = 1 / 6
        outside = (pts[:, 0] < box[0] * h) | (pts[:, 0] > box[1] * h) | (pts[:, 1] < box[2] * h) | (pts[:, 1] > box[3] * h)
        assert np.all(vals[outside] == 0)
        assert np.abs(vals[~outside, 0]).max() > 0
        assert np.all(vals[:, 1] == 0)

    def test_length_mismatch(self):
        s = build_level_space(1, (3, 3))
        with pytest.raises(ValueError):
            evaluate_form(s, 0, np.ones(3), [[0.5, 0.5]])

    def test_covariant_pushforward(self):
        s = build_level_space(2, (3, 3), geometry=Geometry(2.0, 4.0))
        c = np.tile(greville_abscissae(s.u1), s.n[1])  # u = x_hat = x / a
        vals = evaluate_form(s, 1, gradient_operator(s) @ c, [[0.3, 0.6]], physical=True)
        np.testing.assert_allclose(vals, [[0.5, 0.0]], atol=1e-14)
