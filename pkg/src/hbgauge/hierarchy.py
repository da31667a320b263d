"""Hierarchical meshes and the selection of hierarchical B-spline bases.

A hierarchical mesh is a stack of uniform levels ``0..L`` related by dyadic
refinement, together with nested closed subdomains ``Omega_l``. Each
``Omega_l`` is stored as a boolean mask over the cells of level ``l``.
Refinement regions are ingested as boxes of level-(l+1) cells and validated:
they must be unions of closed supports of level-l functions of the top form
degree (the Curry-Schoenberg tensor space ``X2``).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage as ndi
import scipy.sparse as sps

from .bspline import UnivariateSpace, refinement_matrix
from .errors import AdmissibilityError, ConsistencyError
from .tensor import Geometry, LevelSpace, build_level_space, gradient_operator

__all__ = [
    "HierarchicalMesh",
    "HierarchicalBasis",
    "HierarchicalSpace",
    "Assumption1Report",
    "build_mesh",
    "select_basis",
    "build_space",
    "check_assumption1",
    "boxes_inside",
    "level_refinement_matrix",
    "hierarchical_gradient",
]


def _prefix(mask: np.ndarray) -> np.ndarray:
    s = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    s[1:, 1:] = mask.astype(np.int64).cumsum(0).cumsum(1)
    return s


def boxes_count(mask: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Number of ``True`` cells of ``mask`` inside each half-open box."""
    s = _prefix(mask)
    x0, x1, y0, y1 = boxes.T
    return s[x1, y1] - s[x0, y1] - s[x1, y0] + s[x0, y0]


def boxes_inside(mask: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Whether every cell of each box belongs to ``mask``."""
    area = (boxes[:, 1] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 2])
    return boxes_count(mask, boxes) == area


def _paint(shape, boxes) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for x0, x1, y0, y1 in boxes:
        mask[x0:x1, y0:y1] = True
    return mask


def _coarsen(fine: np.ndarray):
    """Coarse mask of 2x2 blocks fully inside ``fine``, and whether ``fine`` is such a union."""
    blocks = fine.reshape(fine.shape[0] // 2, 2, fine.shape[1] // 2, 2)
    full = blocks.all(axis=(1, 3))
    exact = np.array_equal(np.repeat(np.repeat(full, 2, 0), 2, 1), fine)
    return full, exact


def _refine_mask(coarse: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(coarse, 2, 0), 2, 1)


def _union_of_supports(mask: np.ndarray, boxes: np.ndarray):
    """Functions whose support lies in ``mask`` and whether their supports tile it."""
    selected = np.flatnonzero(boxes_inside(mask, boxes))
    covered = _paint(mask.shape, boxes[selected])
    return selected, np.array_equal(covered, mask)


@dataclass(frozen=True)
class HierarchicalMesh:
    """Levels ``0..L`` with subdomain masks ``regions[l]`` over level-l cells.

    ``support_sets[l]`` holds the reconstructed level-l X2 functions whose
    supports tile ``Omega_{l+1}``. ``x0_representable[l]`` reports, without
    enforcing it, whether ``Omega_{l+1}`` is also a union of X0 supports.
    """

    levels: tuple
    regions: tuple
    support_sets: tuple = ()
    x0_representable: tuple = ()

    @property
    def L(self) -> int:
        return len(self.levels) - 1

    @property
    def degree(self) -> int:
        return self.levels[0].degree

    @property
    def geometry(self) -> Geometry:
        return self.levels[0].geometry

    def region(self, lp: int, level: int) -> np.ndarray:
        """``Omega_lp`` as a mask over level-``level`` cells, for ``lp`` in {level, level+1}."""
        shape = self.levels[level].elements
        if lp == level:
            return self.regions[level]
        if lp != level + 1:
            raise ValueError("only Omega_l and Omega_{l+1} can be expressed on level l")
        if lp > self.L:
            return np.zeros(shape, dtype=bool)
        coarse, _ = _coarsen(self.regions[lp])
        return coarse

    def active_cells(self, level: int) -> np.ndarray:
        """Mask of level cells in ``Omega_l`` minus ``Omega_{l+1}``."""
        return self.region(level, level) & ~self.region(level + 1, level)


def build_mesh(degree: int, elements, refinement=(), geometry: Geometry | None = None) -> HierarchicalMesh:
    """Build and validate a hierarchical mesh.

    Parameters
    ----------
    degree : int
        Spline degree p.
    elements : (int, int)
        Level-0 element counts.
    refinement : list of list of boxes
        ``refinement[l]`` lists boxes ``(i0, i1, j0, j1)`` (half-open) of
        level-(l+1) cells whose union is ``Omega_{l+1}``. ``L = len(refinement)``.
    geometry : Geometry, optional
        Diagonal affine map of the unit square.

    Raises
    ------
    AdmissibilityError
        If some ``Omega_{l+1}`` is not nested in ``Omega_l`` or is not a
        union of supports of level-l X2 functions.
    """
    geometry = geometry or Geometry()
    L = len(refinement)
    levels = tuple(build_level_space(degree, elements, l, geometry) for l in range(L + 1))
    regions = [np.ones(levels[0].elements, dtype=bool)]
    support_sets = []
    x0_ok = []
    for l, boxes in enumerate(refinement):
        shape = levels[l + 1].elements
        boxes = np.asarray(boxes, dtype=np.int64).reshape(-1, 4)
        for b in boxes:
            x0, x1, y0, y1 = (int(v) for v in b)
            if not (0 <= x0 < x1 <= shape[0] and 0 <= y0 < y1 <= shape[1]):
                raise ValueError(f"refinement box {list(b)} of level {l + 1} outside the {shape} grid")
        fine = _paint(shape, boxes)
        if np.any(fine & ~_refine_mask(regions[l])):
            raise AdmissibilityError(l + 1, "refined region is not contained in the previous subdomain")
        coarse, exact = _coarsen(fine)
        if not exact:
            raise AdmissibilityError(l + 1, f"refined region is not a union of level-{l} cells")
        sel, tiles = _union_of_supports(coarse, levels[l].support_boxes(2))
        if not tiles:
            raise AdmissibilityError(
                l + 1, f"refined region is not a union of supports of level-{l} X2 functions"
            )
        support_sets.append(sel)
        x0_ok.append(_union_of_supports(coarse, levels[l].support_boxes(0))[1])
        regions.append(fine)
    for r in regions:
        r.setflags(write=False)
    return HierarchicalMesh(levels, tuple(regions), tuple(support_sets), tuple(x0_ok))


@dataclass(frozen=True)
class HierarchicalBasis:
    """Active and deactivated functions of form degree ``k`` on every level.

    ``active[l]`` and ``deactivated[l]`` are sorted level-local linear
    indices. Global numbering runs over levels in order, and within a level
    follows the level-local linear order; ``global_index[l][i]`` is the global
    number of level-l function ``i`` or -1 if it is not active.
    """

    k: int
    active: tuple
    deactivated: tuple
    global_index: tuple
    offsets: tuple = field(repr=False)

    @property
    def dim(self) -> int:
        return self.offsets[-1]

    def level_of(self, g: int) -> int:
        return int(np.searchsorted(self.offsets, g, side="right") - 1)

    def functions(self) -> np.ndarray:
        """Rows ``(level, local index)`` in global order."""
        return np.concatenate(
            [np.column_stack([np.full(a.size, l), a]) for l, a in enumerate(self.active)]
        ).astype(np.int64)


def select_basis(mesh: HierarchicalMesh, k: int) -> HierarchicalBasis:
    """Select hierarchical basis functions of form degree ``k``.

    A level-l function belongs to ``B_{l,l'}`` when it is interior and its
    open support lies in ``Omega_{l'}``; active functions are
    ``B_{l,l} \\ B_{l,l+1}`` and deactivated ones are ``B_{l,l+1}``.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    active, deactivated, b_ll = [], [], []
    for l, space in enumerate(mesh.levels):
        boxes = space.support_boxes(k)
        interior = space.interior_mask(k)
        in_l = interior & boxes_inside(mesh.region(l, l), boxes)
        in_next = interior & boxes_inside(mesh.region(l + 1, l), boxes)
        if np.any(in_next & ~in_l):
            raise ConsistencyError(f"level {l}: B_(l,l+1) not contained in B_(l,l)")
        active.append(np.flatnonzero(in_l & ~in_next))
        deactivated.append(np.flatnonzero(in_next))
        b_ll.append(np.flatnonzero(in_l))

    # recursion H_{l+1} = (H_l \ B_{l,l+1}) u B_{l+1,l+1}, compared with the union of actives
    H = {(0, int(i)) for i in b_ll[0]}
    for l in range(mesh.L):
        H -= {(l, int(i)) for i in deactivated[l]}
        H |= {(l + 1, int(i)) for i in b_ll[l + 1]}
    union = {(l, int(i)) for l, a in enumerate(active) for i in a}
    if H != union:
        raise ConsistencyError(f"k={k}: recursive selection differs from the union of active sets")

    offsets = np.concatenate([[0], np.cumsum([a.size for a in active])]).astype(np.int64)
    gidx = []
    for l, a in enumerate(active):
        g = np.full(mesh.levels[l].dim(k), -1, dtype=np.int64)
        g[a] = offsets[l] + np.arange(a.size)
        g.setflags(write=False)
        gidx.append(g)
    return HierarchicalBasis(k, tuple(active), tuple(deactivated), tuple(gidx), tuple(int(o) for o in offsets))


@dataclass(frozen=True)
class HierarchicalSpace:
    mesh: HierarchicalMesh
    bases: tuple

    def basis(self, k: int) -> HierarchicalBasis:
        return self.bases[k]

    def dim(self, k: int) -> int:
        return self.bases[k].dim


def build_space(mesh: HierarchicalMesh) -> HierarchicalSpace:
    return HierarchicalSpace(mesh, tuple(select_basis(mesh, k) for k in range(3)))


# -- Assumption 1 ---------------------------------------------------------------

def _euler_characteristic(cells: np.ndarray) -> int:
    """V - E + F of the closed union of the ``True`` cells."""
    c = np.pad(cells, 1)
    F = int(cells.sum())
    # vertex (a, b) touches cells (a-1..a, b-1..b) of the unpadded grid
    V = int((c[:-1, :-1] | c[1:, :-1] | c[:-1, 1:] | c[1:, 1:]).sum())
    # edges along y at x-position a: cells (a-1, b) and (a, b)
    Ey = int((c[:-1, 1:-1] | c[1:, 1:-1]).sum())
    Ex = int((c[1:-1, :-1] | c[1:-1, 1:]).sum())
    return V - (Ex + Ey) + F


_FOUR = ndi.generate_binary_structure(2, 1)


def region_is_disk(cells: np.ndarray) -> tuple:
    """(connected, simply_connected) for a nonempty cell set."""
    _, ncomp = ndi.label(cells, structure=_FOUR)
    connected = ncomp == 1
    return connected, connected and _euler_characteristic(cells) == 1


@dataclass
class Assumption1Report:
    passed: bool
    failures: list
    checked: int

    def describe(self) -> str:
        if self.passed:
            return f"Assumption 1 holds ({self.checked} partially refined supports checked)"
        lines = [f"level {l}, k={k}, function {i}: {why}" for l, k, i, why in self.failures[:10]]
        return "Assumption 1 violated:\n  " + "\n  ".join(lines)


def check_assumption1(mesh: HierarchicalMesh) -> Assumption1Report:
    """Check that ``supp(beta)`` minus ``Omega_{l+1}`` is connected and simply connected.

    Every interior function of every level and form degree is checked.
    Supports entirely inside or entirely outside ``Omega_{l+1}`` pass
    trivially; the others are tested by 4-connectivity of the remaining
    level-l cells and by their Euler characteristic.
    """
    failures = []
    checked = 0
    for l, space in enumerate(mesh.levels):
        outside = ~mesh.region(l + 1, l)
        for k in range(3):
            boxes = space.support_boxes(k)
            idx = space.interior_indices(k)
            area = (boxes[:, 1] - boxes[:, 0]) * (boxes[:, 3] - boxes[:, 2])
            cnt = boxes_count(outside, boxes)
            partial = idx[(cnt[idx] > 0) & (cnt[idx] < area[idx])]
            for i in partial:
                x0, x1, y0, y1 = boxes[i]
                connected, simple = region_is_disk(outside[x0:x1, y0:y1])
                checked += 1
                if not connected:
                    failures.append((l, k, int(i), "disconnected"))
                elif not simple:
                    failures.append((l, k, int(i), "not simply connected"))
    return Assumption1Report(not failures, failures, checked)


# -- hierarchical discrete gradient ---------------------------------------------

def _univariate_refinement(coarse: UnivariateSpace, fine: UnivariateSpace) -> sps.csr_matrix:
    R = refinement_matrix(coarse, fine)
    R[np.abs(R) < 1e-15] = 0.0
    return sps.csr_matrix(R)


def level_refinement_matrix(coarse: LevelSpace, fine: LevelSpace, k: int) -> sps.csr_matrix:
    """Two-scale relation ``dim_k(fine) x dim_k(coarse)`` between consecutive levels."""
    blocks = []
    for (cx, cy), (fx, fy) in zip(coarse.factor_spaces(k), fine.factor_spaces(k)):
        blocks.append(sps.kron(_univariate_refinement(cy, fy), _univariate_refinement(cx, fx)))
    return sps.block_diag(blocks, format="csr")


def _expansion_operators(space: HierarchicalSpace, k: int) -> list:
    """T_l mapping level-l coefficients of functions in B_{l,l} to hierarchical coefficients."""
    mesh = space.mesh
    basis = space.basis(k)
    n = basis.dim
    T = [None] * (mesh.L + 1)
    for l in range(mesh.L, -1, -1):
        dim_l = mesh.levels[l].dim(k)
        act = basis.active[l]
        Tl = sps.csr_matrix(
            (np.ones(act.size), (basis.global_index[l][act], act)), shape=(n, dim_l)
        )
        deact = basis.deactivated[l]
        if deact.size:
            R = level_refinement_matrix(mesh.levels[l], mesh.levels[l + 1], k)
            P = sps.csr_matrix((np.ones(deact.size), (deact, deact)), shape=(dim_l, dim_l))
            Tl = Tl + T[l + 1] @ R @ P
        T[l] = Tl.tocsr()
    return T


def hierarchical_gradient(space: HierarchicalSpace) -> sps.csr_matrix:
    """Gradient of every active X0 function in the active X1 basis.

    Shape ``(dim W1, dim W0)``; columns follow the global X0 numbering.
    Level gradients landing on deactivated X1 functions are rewritten through
    the two-scale relations of finer levels.
    """
    mesh = space.mesh
    T = _expansion_operators(space, 1)
    cols = []
    for l, lev in enumerate(mesh.levels):
        G = gradient_operator(lev)
        cols.append(T[l] @ G[:, space.basis(0).active[l]])
    GH = sps.hstack(cols).tocsr()
    GH.data[np.abs(GH.data) < 1e-14] = 0.0
    GH.eliminate_zeros()
    return GH
