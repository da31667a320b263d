"""Greville grids and the per-level Greville subgrids used as graphs.

Nodes, edges and cells of the level-l Greville grid share the linear
numbering of the X0, X1 and X2 functions of :class:`~hbgauge.tensor.LevelSpace`,
so the identification spline function <-> grid entity is the identity map on
indices. Edge ``e`` of component 0 with index ``(i, j)`` joins nodes
``(i, j)`` and ``(i + 1, j)``; component 1 joins ``(i, j)`` and ``(i, j + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components

from .bspline import greville_abscissae
from .errors import ConsistencyError
from .hierarchy import HierarchicalMesh, HierarchicalSpace, boxes_inside, build_space
from .tensor import LevelSpace

__all__ = [
    "EntityClass",
    "GrevilleGrid",
    "LevelGraph",
    "build_grid",
    "build_subgraph",
    "incidence_matrix",
]


class EntityClass(IntEnum):
    """Classification of subgrid entities; edge values double as Kruskal weights."""

    ABSENT = 0
    BOUNDARY = 1
    ACTIVE = 2
    DEACTIVATED = 3


@dataclass(frozen=True)
class GrevilleGrid:
    level: int
    space: LevelSpace
    nodes: np.ndarray       # (n_nodes, 2) physical positions
    edges: np.ndarray       # (n_edges, 2) node ids, lower id first
    cells: np.ndarray       # (n_cells, 4) node ids, counterclockwise
    edge_cells: np.ndarray  # (n_edges, 2) incident cell ids, -1 where missing
    node_cells: np.ndarray  # (n_nodes, 4) incident cell ids, -1 where missing

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    @property
    def num_cells(self) -> int:
        return len(self.cells)


def build_grid(space: LevelSpace) -> GrevilleGrid:
    """Greville grid of one level, with positions mapped to the physical domain."""
    n1, n2 = space.n
    g1 = greville_abscissae(space.u1)
    g2 = greville_abscissae(space.u2)
    jj, ii = np.divmod(np.arange(n1 * n2), n1)
    nodes = space.geometry.map(np.column_stack([g1[ii], g2[jj]]))

    def cell_id(ci, cj):
        ok = (ci >= 0) & (ci < n1 - 1) & (cj >= 0) & (cj < n2 - 1)
        return np.where(ok, space.index2(ci, cj), -1)

    edges, edge_cells = [], []
    (i0, j0), (i1, j1) = space.factor_index_arrays(1)
    edges.append(np.column_stack([space.index0(i0, j0), space.index0(i0 + 1, j0)]))
    edge_cells.append(np.column_stack([cell_id(i0, j0 - 1), cell_id(i0, j0)]))
    edges.append(np.column_stack([space.index0(i1, j1), space.index0(i1, j1 + 1)]))
    edge_cells.append(np.column_stack([cell_id(i1 - 1, j1), cell_id(i1, j1)]))

    ((ci, cj),) = space.factor_index_arrays(2)
    cells = np.column_stack([
        space.index0(ci, cj), space.index0(ci + 1, cj),
        space.index0(ci + 1, cj + 1), space.index0(ci, cj + 1),
    ])
    node_cells = np.column_stack([
        cell_id(ii - 1, jj - 1), cell_id(ii, jj - 1), cell_id(ii - 1, jj), cell_id(ii, jj),
    ])
    return GrevilleGrid(
        space.level, space, nodes, np.concatenate(edges), cells,
        np.concatenate(edge_cells), node_cells,
    )


@dataclass(frozen=True)
class LevelGraph:
    """Greville subgrid ``G_{l,l}`` of one level, seen as a weighted graph.

    ``node_class`` and ``edge_class`` are indexed by level-local entity id
    and hold :class:`EntityClass` codes; entities outside the subgrid are
    ``ABSENT``. ``cells`` and ``inner_cells`` mark the cells of ``G_{l,l}``
    and ``G_{l,l+1}``.
    """

    level: int
    grid: GrevilleGrid
    cells: np.ndarray
    inner_cells: np.ndarray
    node_class: np.ndarray
    edge_class: np.ndarray

    @property
    def nodes(self) -> np.ndarray:
        return np.flatnonzero(self.node_class != EntityClass.ABSENT)

    @property
    def edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_class != EntityClass.ABSENT)

    def edges_of(self, cls: EntityClass) -> np.ndarray:
        return np.flatnonzero(self.edge_class == cls)

    def nodes_of(self, cls: EntityClass) -> np.ndarray:
        return np.flatnonzero(self.node_class == cls)

    @property
    def weights(self) -> np.ndarray:
        """Kruskal weight per graph edge (aligned with :attr:`edges`)."""
        return self.edge_class[self.edges].astype(np.int64)

    def components(self, edge_subset=None) -> tuple:
        """(count, labels) of connected components over the graph's nodes.

        With ``edge_subset`` only those edges and the nodes they touch are used.
        """
        edges = self.edges if edge_subset is None else np.asarray(edge_subset)
        nodes = self.nodes if edge_subset is None else np.unique(self.grid.edges[edges])
        return _components(self.grid.num_nodes, self.grid.edges[edges], nodes)


def _components(num_nodes, endpoints, nodes):
    A = sps.coo_matrix(
        (np.ones(len(endpoints)), (endpoints[:, 0], endpoints[:, 1])), shape=(num_nodes, num_nodes)
    )
    _, labels = connected_components(A, directed=False)
    sub = labels[nodes]
    _, compact = np.unique(sub, return_inverse=True)
    return int(compact.max() + 1) if nodes.size else 0, compact


def _count_cells(flags: np.ndarray, ids: np.ndarray) -> np.ndarray:
    return np.where(ids >= 0, flags[np.maximum(ids, 0)], False).sum(axis=1)


def build_subgraph(
    grid: GrevilleGrid,
    mesh: HierarchicalMesh,
    level: int,
    space: HierarchicalSpace | None = None,
) -> LevelGraph:
    """Subgrid ``G_{l,l}`` with boundary / active / deactivated classification.

    Cells are included when the support of their X2 function lies in
    ``Omega_l``. An edge is on the boundary when fewer than two included
    cells touch it; a node when fewer than four do. Interior entities are
    split by the hierarchical basis, and the split is cross-checked against
    the interior of ``G_{l,l+1}``.

    Raises
    ------
    ConsistencyError
        If the combinatorial classification disagrees with the hierarchical
        basis selection.
    """
    if level > mesh.L:
        raise ValueError(f"level {level} exceeds the finest level {mesh.L}")
    space = space or build_space(mesh)
    lev = mesh.levels[level]
    boxes2 = lev.support_boxes(2)
    cells = boxes_inside(mesh.region(level, level), boxes2)
    inner = boxes_inside(mesh.region(level + 1, level), boxes2)

    e_cnt = _count_cells(cells, grid.edge_cells)
    n_cnt = _count_cells(cells, grid.node_cells)
    e_inner = _count_cells(inner, grid.edge_cells) == 2
    n_inner = _count_cells(inner, grid.node_cells) == 4

    edge_class = np.full(grid.num_edges, EntityClass.ABSENT, dtype=np.int8)
    node_class = np.full(grid.num_nodes, EntityClass.ABSENT, dtype=np.int8)
    edge_class[e_cnt > 0] = EntityClass.BOUNDARY
    node_class[n_cnt > 0] = EntityClass.BOUNDARY

    for k, cnt, full, inner_flag, cls in (
        (0, n_cnt, 4, n_inner, node_class),
        (1, e_cnt, 2, e_inner, edge_class),
    ):
        basis = space.basis(k)
        interior = cnt == full
        b_ll = np.zeros_like(interior)
        b_ll[basis.active[level]] = True
        b_ll[basis.deactivated[level]] = True
        if not np.array_equal(interior, b_ll):
            raise ConsistencyError(f"level {level}: interior entities of G_(l,l) differ from B^{k}_(l,l)")
        deact = np.zeros_like(interior)
        deact[basis.deactivated[level]] = True
        if not np.array_equal(inner_flag, deact):
            raise ConsistencyError(f"level {level}: interior entities of G_(l,l+1) differ from D^{k}_l")
        cls[interior] = EntityClass.ACTIVE
        cls[deact] = EntityClass.DEACTIVATED

    for arr in (cells, inner, edge_class, node_class):
        arr.setflags(write=False)
    return LevelGraph(level, grid, cells, inner, node_class, edge_class)


def incidence_matrix(obj) -> sps.csr_matrix:
    """Signed edge-node incidence: -1 at the lower-index endpoint, +1 at the higher.

    For a :class:`GrevilleGrid` the matrix is ``num_edges x num_nodes``. For a
    :class:`LevelGraph` rows and columns are restricted to the graph's edges
    and nodes, in increasing id order.
    """
    if isinstance(obj, LevelGraph):
        grid = obj.grid
        edges, nodes = obj.edges, obj.nodes
    else:
        grid = obj
        edges, nodes = np.arange(grid.num_edges), np.arange(grid.num_nodes)
    col = np.full(grid.num_nodes, -1, dtype=np.int64)
    col[nodes] = np.arange(nodes.size)
    ends = grid.edges[edges]
    rows = np.repeat(np.arange(edges.size), 2)
    cols = col[ends].ravel()
    vals = np.tile([-1.0, 1.0], edges.size)
    D = sps.csr_matrix((vals, (rows, cols)), shape=(edges.size, nodes.size))
    D.sort_indices()
    return D
