"""Tensor-product spline de Rham spaces of a single level on the unit square.

Index conventions (zero-based, fixed across the package):

* ``X0`` function ``(i, j)`` has linear index ``j * n1 + i``.
* ``X1`` is component-major. Component 0 (Curry-Schoenberg in x, standard in
  y) has ``(n1 - 1) * n2`` functions with index ``j * (n1 - 1) + i``;
  component 1 (standard in x, Curry-Schoenberg in y) follows with offset
  ``(n1 - 1) * n2`` and local index ``j * n1 + i``.
* ``X2`` function ``(i, j)`` has linear index ``j * (n1 - 1) + i``.

Cells of the element mesh are addressed as ``(e1, e2)`` with ``e1`` along x.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sps

from .bspline import (
    UnivariateSpace,
    eval_basis_many,
    support_elements,
    uniform_knot_vector,
)

__all__ = [
    "Geometry",
    "LevelSpace",
    "FunctionIndex",
    "build_level_space",
    "gradient_operator",
    "evaluate_form",
]


@dataclass(frozen=True)
class Geometry:
    """Affine diagonal map ``F(x, y) = (a x, b y)`` from the unit square."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("geometry scale factors must be positive")

    def map(self, points):
        points = np.asarray(points, dtype=float)
        return points * np.array([self.a, self.b])

    @property
    def jacobian_diagonal(self) -> np.ndarray:
        return np.array([self.a, self.b])

    @property
    def det_jacobian(self) -> float:
        return self.a * self.b

    @property
    def area(self) -> float:
        return self.a * self.b


@dataclass(frozen=True)
class FunctionIndex:
    k: int
    i: int
    j: int
    level: int = 0
    component: int | None = None


@dataclass(frozen=True)
class LevelSpace:
    """Spaces X0, X1, X2 of one refinement level."""

    level: int
    degree: int
    elements: tuple
    u1: UnivariateSpace
    u2: UnivariateSpace
    geometry: Geometry = Geometry()

    @cached_property
    def cs1(self) -> UnivariateSpace:
        return UnivariateSpace.curry_schoenberg(self.u1.kv)

    @cached_property
    def cs2(self) -> UnivariateSpace:
        return UnivariateSpace.curry_schoenberg(self.u2.kv)

    @property
    def n(self) -> tuple:
        return self.u1.dim, self.u2.dim

    @property
    def dim0(self) -> int:
        n1, n2 = self.n
        return n1 * n2

    @property
    def comp_sizes(self) -> tuple:
        n1, n2 = self.n
        return (n1 - 1) * n2, n1 * (n2 - 1)

    @property
    def dim1(self) -> int:
        return sum(self.comp_sizes)

    @property
    def dim2(self) -> int:
        n1, n2 = self.n
        return (n1 - 1) * (n2 - 1)

    def dim(self, k: int) -> int:
        return (self.dim0, self.dim1, self.dim2)[k]

    def component_spaces(self, comp: int) -> tuple:
        """Univariate factors (x, y) of X1 component ``comp``."""
        return (self.cs1, self.u2) if comp == 0 else (self.u1, self.cs2)

    def component_shape(self, comp: int) -> tuple:
        sx, sy = self.component_spaces(comp)
        return sx.dim, sy.dim

    # -- index maps -------------------------------------------------------
    def index0(self, i, j):
        return np.asarray(j) * self.n[0] + np.asarray(i)

    def index1(self, comp, i, j):
        nx, _ = self.component_shape(comp)
        off = 0 if comp == 0 else self.comp_sizes[0]
        return off + np.asarray(j) * nx + np.asarray(i)

    def index2(self, i, j):
        return np.asarray(j) * (self.n[0] - 1) + np.asarray(i)

    def unravel(self, k: int, index: int) -> FunctionIndex:
        if k == 0:
            j, i = divmod(int(index), self.n[0])
            return FunctionIndex(0, i, j, self.level)
        if k == 2:
            j, i = divmod(int(index), self.n[0] - 1)
            return FunctionIndex(2, i, j, self.level)
        comp = 0 if index < self.comp_sizes[0] else 1
        local = int(index) - (0 if comp == 0 else self.comp_sizes[0])
        j, i = divmod(local, self.component_shape(comp)[0])
        return FunctionIndex(1, i, j, self.level, comp)

    def factor_index_arrays(self, k: int) -> list:
        """Per block, the (i, j) arrays of every function in linear order."""
        if k == 0:
            shapes = [self.n]
        elif k == 1:
            shapes = [self.component_shape(0), self.component_shape(1)]
        else:
            shapes = [(self.n[0] - 1, self.n[1] - 1)]
        out = []
        for nx, ny in shapes:
            jj, ii = np.divmod(np.arange(nx * ny), nx)
            out.append((ii, jj))
        return out

    def factor_spaces(self, k: int) -> list:
        if k == 0:
            return [(self.u1, self.u2)]
        if k == 1:
            return [self.component_spaces(0), self.component_spaces(1)]
        return [(self.cs1, self.cs2)]

    # -- supports and boundary conditions ---------------------------------
    def support_boxes(self, k: int) -> np.ndarray:
        """Element boxes ``[e1_0, e1_1, e2_0, e2_1]`` (half-open) per function."""
        boxes = []
        for (sx, sy), (ii, jj) in zip(self.factor_spaces(k), self.factor_index_arrays(k)):
            ex, ey = support_elements(sx), support_elements(sy)
            boxes.append(np.column_stack([ex[ii, 0], ex[ii, 1], ey[jj, 0], ey[jj, 1]]))
        return np.concatenate(boxes)

    def interior_mask(self, k: int) -> np.ndarray:
        """Functions with vanishing trace on the boundary of the unit square."""
        masks = []
        for (sx, sy), (ii, jj) in zip(self.factor_spaces(k), self.factor_index_arrays(k)):
            m = np.ones(ii.size, dtype=bool)
            if sx.is_standard:
                m &= (ii > 0) & (ii < sx.dim - 1)
            if sy.is_standard:
                m &= (jj > 0) & (jj < sy.dim - 1)
            masks.append(m)
        return np.concatenate(masks)

    def interior_indices(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.interior_mask(k))

    def refined(self) -> "LevelSpace":
        return build_level_space(self.degree, _base_elements(self), self.level + 1, self.geometry)


def _base_elements(space: LevelSpace) -> tuple:
    f = 2 ** space.level
    return space.elements[0] // f, space.elements[1] // f


def build_level_space(p: int, elements, level: int = 0, geometry: Geometry | None = None) -> LevelSpace:
    """Uniform level-``level`` space over a base mesh of ``elements`` cells."""
    if p < 1:
        raise ValueError(f"degree must be >= 1, got {p}")
    m1, m2 = (int(e) for e in elements)
    if m1 < 1 or m2 < 1:
        raise ValueError("element counts must be positive")
    if level < 0:
        raise ValueError("level must be nonnegative")
    f = 2 ** level
    u1 = UnivariateSpace.standard(uniform_knot_vector(p, m1 * f))
    u2 = UnivariateSpace.standard(uniform_knot_vector(p, m2 * f))
    return LevelSpace(level, p, (m1 * f, m2 * f), u1, u2, geometry or Geometry())


def _difference_matrix(n: int) -> sps.csr_matrix:
    return sps.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")


def gradient_operator(space: LevelSpace) -> sps.csr_matrix:
    """Discrete gradient X0 -> X1 in the Curry-Schoenberg normalized basis.

    Row ``e`` of component 0, function ``(i, j)``, carries -1 at X0 function
    ``(i, j)`` and +1 at ``(i + 1, j)``; component 1 is analogous in ``j``.
    """
    n1, n2 = space.n
    g1 = sps.kron(sps.identity(n2), _difference_matrix(n1))
    g2 = sps.kron(_difference_matrix(n2), sps.identity(n1))
    G = sps.vstack([g1, g2]).tocsr()
    G.eliminate_zeros()
    G.sort_indices()
    return G


def _tensor_eval(sx, sy, coeffs2d, x, y, dx=0, dy=0):
    fx, vx = eval_basis_many(sx, x, dx)
    fy, vy = eval_basis_many(sy, y, dy)
    qx, qy = sx.degree + 1, sy.degree + 1
    out = np.empty(len(x))
    for m in range(len(x)):
        block = coeffs2d[fy[m]: fy[m] + qy, fx[m]: fx[m] + qx]
        out[m] = vy[m, dy] @ block @ vx[m, dx]
    return out


def evaluate_form(space: LevelSpace, k: int, coeffs, points, physical: bool = False):
    """Evaluate the k-form field with the given coefficients at parametric points.

    For ``k = 0`` returns shape (npts,); for ``k = 1`` shape (npts, 2). With
    ``physical=True`` the X1 field is pushed forward covariantly,
    ``u = DF^{-T} u_hat``; scalar fields are unchanged by composition.
    """
    if k not in (0, 1):
        raise ValueError("only k = 0 and k = 1 can be evaluated")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (space.dim(k),):
        raise ValueError(f"expected {space.dim(k)} coefficients, got {coeffs.shape}")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    if k == 0:
        n1, n2 = space.n
        return _tensor_eval(space.u1, space.u2, coeffs.reshape(n2, n1), x, y)
    s0 = space.comp_sizes[0]
    vals = np.empty((len(x), 2))
    for comp, c in ((0, coeffs[:s0]), (1, coeffs[s0:])):
        sx, sy = space.component_spaces(comp)
        vals[:, comp] = _tensor_eval(sx, sy, c.reshape(sy.dim, sx.dim), x, y)
    if physical:
        vals = vals / space.geometry.jacobian_diagonal
    return vals
