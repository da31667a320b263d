"""Plain SVG drawings of hierarchical meshes, Greville subgrids and trees.

Colors: light gray for the cells of ``G_{l,l}``, dark gray for
``G_{l,l+1}``, blue for boundary tree edges, red for active tree edges and
cyan for deactivated tree edges.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .greville import LevelGraph
from .hierarchy import HierarchicalMesh

__all__ = ["level_svg", "overlay_svg", "mesh_svg", "TREE_COLORS"]

SIZE = 480.0
MARGIN = 12.0
FILL_LL = "#d9d9d9"
FILL_LL1 = "#8c8c8c"
TREE_COLORS = {1: "#1f4fd1", 2: "#d62728", 3: "#17becf"}


class _Canvas:
    def __init__(self, width: float, height: float, title: str = ""):
        s = SIZE / max(width, height)
        self.scale = s
        self.h = height
        self.W = width * s + 2 * MARGIN
        self.H = height * s + 2 * MARGIN
        self.items = []
        if title:
            self.items.append(f"<title>{escape(title)}</title>")

    def xy(self, x, y):
        return MARGIN + x * self.scale, MARGIN + (self.h - y) * self.scale

    def polygon(self, pts, fill, stroke="none", width=0.0):
        coords = " ".join("%.3f,%.3f" % self.xy(x, y) for x, y in pts)
        self.items.append(
            f'<polygon points="{coords}" fill="{fill}" stroke="{stroke}" stroke-width="{width:g}"/>'
        )

    def line(self, p, q, color, width=1.0):
        x0, y0 = self.xy(*p)
        x1, y1 = self.xy(*q)
        self.items.append(
            f'<line x1="{x0:.3f}" y1="{y0:.3f}" x2="{x1:.3f}" y2="{y1:.3f}" '
            f'stroke="{color}" stroke-width="{width:g}" stroke-linecap="round"/>'
        )

    def rect(self, x0, y0, x1, y1, color, width=0.5):
        self.polygon([(x0, y0), (x1, y0), (x1, y1), (x0, y1)], "none", color, width)

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.W:.0f}" height="{self.H:.0f}" '
            f'viewBox="0 0 {self.W:.3f} {self.H:.3f}">\n'
            f'<rect width="100%" height="100%" fill="white"/>\n'
        )
        return head + "\n".join(self.items) + "\n</svg>\n"


def level_svg(graph: LevelGraph, tree=None) -> str:
    """One level: subgrid cells, graph edges, and the tree colored by edge class."""
    grid = graph.grid
    geo = grid.space.geometry
    cv = _Canvas(geo.a, geo.b, f"level {graph.level}")
    nodes = grid.nodes
    for cid in np.flatnonzero(graph.cells):
        fill = FILL_LL1 if graph.inner_cells[cid] else FILL_LL
        cv.polygon(nodes[grid.cells[cid]], fill)
    for e in graph.edges:
        a, b = grid.edges[e]
        cv.line(nodes[a], nodes[b], "#555555", 0.4)
    if tree is not None:
        for e, cls in zip(tree.edges, tree.classes):
            a, b = grid.edges[e]
            cv.line(nodes[a], nodes[b], TREE_COLORS[int(cls)], 2.0)
    return cv.render()


def _mesh_lines(cv: _Canvas, mesh: HierarchicalMesh, color="#aaaaaa", width=0.5):
    geo = mesh.geometry
    for l in range(mesh.L + 1):
        m1, m2 = mesh.levels[l].elements
        hx, hy = geo.a / m1, geo.b / m2
        for e1, e2 in np.argwhere(mesh.active_cells(l)):
            cv.rect(e1 * hx, e2 * hy, (e1 + 1) * hx, (e2 + 1) * hy, color, width)


def overlay_svg(graphs, trees, mesh: HierarchicalMesh) -> str:
    """Multi-level tree: active tree edges of every level on the hierarchical mesh."""
    geo = mesh.geometry
    cv = _Canvas(geo.a, geo.b, "multi-level tree")
    _mesh_lines(cv, mesh)
    for g, t in zip(graphs, trees):
        nodes = g.grid.nodes
        for e in t.active:
            a, b = g.grid.edges[e]
            cv.line(nodes[a], nodes[b], TREE_COLORS[2], 2.0)
    return cv.render()


def mesh_svg(mesh: HierarchicalMesh) -> str:
    """Active cells of every level."""
    geo = mesh.geometry
    cv = _Canvas(geo.a, geo.b, "hierarchical mesh")
    _mesh_lines(cv, mesh, "#000000", 0.8)
    return cv.render()
