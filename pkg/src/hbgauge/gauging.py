"""Per-level spanning trees and the multi-level tree used for gauging.

On each level a minimum spanning forest of the Greville subgrid is grown by
Kruskal's algorithm with weights 1 (boundary), 2 (active) and 3
(deactivated): the boundary is spanned first, then active edges reach the
interior, and deactivated edges only connect what is left. The multi-level
tree collects the active tree edges of all levels; its complement among the
active X1 functions is the cotree kept in the gauged system.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .greville import EntityClass, LevelGraph
from .hierarchy import HierarchicalBasis

__all__ = [
    "UnionFind",
    "LevelTree",
    "MultiLevelTree",
    "build_level_tree",
    "build_multilevel_tree",
    "gauge_indices",
    "verify_level_tree",
]


class UnionFind:
    """Disjoint sets with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if they were already one set."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return True


@dataclass(frozen=True)
class LevelTree:
    """Spanning forest of one level graph.

    ``edges`` lists level-local edge ids in Kruskal acceptance order and
    ``classes`` their :class:`EntityClass`.
    """

    level: int
    edges: np.ndarray
    classes: np.ndarray

    def of_class(self, cls: EntityClass) -> np.ndarray:
        return self.edges[self.classes == cls]

    @property
    def boundary(self) -> np.ndarray:
        return self.of_class(EntityClass.BOUNDARY)

    @property
    def active(self) -> np.ndarray:
        return self.of_class(EntityClass.ACTIVE)

    @property
    def deactivated(self) -> np.ndarray:
        return self.of_class(EntityClass.DEACTIVATED)

    def __len__(self) -> int:
        return len(self.edges)


def build_level_tree(graph: LevelGraph) -> LevelTree:
    """Kruskal minimum spanning forest of ``graph``.

    Ties within a weight class are broken by increasing edge id, i.e.
    lexicographically by (component, j, i).
    """
    edges = graph.edges
    weights = graph.weights
    order = np.lexsort((edges, weights))
    ends = graph.grid.edges
    uf = UnionFind(graph.grid.num_nodes)
    accepted = []
    for e in edges[order]:
        a, b = ends[e]
        if uf.union(int(a), int(b)):
            accepted.append(e)
    accepted = np.asarray(accepted, dtype=np.int64)
    return LevelTree(graph.level, accepted, graph.edge_class[accepted].astype(np.int8))


def verify_level_tree(graph: LevelGraph, tree: LevelTree) -> dict:
    """Structural checks of a level tree; every value is a bool.

    * ``acyclic`` -- union-find never closes a cycle over the tree edges
    * ``spanning`` -- every node of the graph is in the tree's node set or isolated
    * ``forest_size`` -- ``|T| = |N| - (number of components)``
    * ``boundary_forest`` -- boundary tree edges span every boundary component
    * ``weight_order`` -- acceptance order is nondecreasing in weight
    """
    ends = graph.grid.edges
    uf = UnionFind(graph.grid.num_nodes)
    acyclic = all(uf.union(int(a), int(b)) for a, b in ends[tree.edges])

    ncomp, labels = graph.components()
    tcomp, _ = graph.components(tree.edges) if len(tree) else (0, None)
    touched = np.unique(ends[tree.edges]) if len(tree) else np.empty(0, dtype=np.int64)
    isolated = _isolated_nodes(graph)
    spanning = np.array_equal(np.union1d(touched, isolated), graph.nodes) and (
        tcomp + isolated.size == ncomp
    )
    forest_size = len(tree) == graph.nodes.size - ncomp

    bedges = graph.edges_of(EntityClass.BOUNDARY)
    if bedges.size:
        bcomp, _ = graph.components(bedges)
        tb = tree.boundary
        in_boundary = np.isin(tree.edges, bedges)
        ok_nodes = np.array_equal(np.unique(ends[tb]) if tb.size else np.empty(0), np.unique(ends[bedges]))
        boundary_forest = bool(
            ok_nodes
            and np.array_equal(in_boundary, tree.classes == EntityClass.BOUNDARY)
            and tb.size == np.unique(ends[bedges]).size - bcomp
        )
    else:
        boundary_forest = tree.boundary.size == 0
    weight_order = bool(np.all(np.diff(tree.classes.astype(int)) >= 0))
    return {
        "acyclic": bool(acyclic),
        "spanning": bool(spanning),
        "forest_size": bool(forest_size),
        "boundary_forest": boundary_forest,
        "weight_order": weight_order,
    }


def _isolated_nodes(graph: LevelGraph) -> np.ndarray:
    deg = np.bincount(graph.grid.edges[graph.edges].ravel(), minlength=graph.grid.num_nodes)
    nodes = graph.nodes
    return nodes[deg[nodes] == 0]


@dataclass(frozen=True)
class MultiLevelTree:
    """Union of the active parts of the level trees, as global X1 indices."""

    tree: np.ndarray
    cotree: np.ndarray
    per_level: tuple

    @property
    def size(self) -> int:
        return self.tree.size


def build_multilevel_tree(trees, basis: HierarchicalBasis) -> MultiLevelTree:
    """Map active tree edges to hierarchical X1 indices; drop boundary and deactivated ones."""
    if basis.k != 1:
        raise ValueError("the multi-level tree lives in the X1 basis")
    parts = []
    for t in trees:
        g = basis.global_index[t.level][t.active]
        if np.any(g < 0):
            raise ValueError(f"level {t.level}: active tree edge without an active X1 function")
        parts.append(np.sort(g))
    tree = np.unique(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)
    cotree = np.setdiff1d(np.arange(basis.dim), tree)
    return MultiLevelTree(tree, cotree, tuple(parts))


def gauge_indices(tree: MultiLevelTree) -> np.ndarray:
    """Sorted cotree DOFs: the X1 unknowns kept in the gauged system."""
    return tree.cotree
