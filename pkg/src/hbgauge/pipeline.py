"""Build -> gauge -> solve -> compare, in memory."""
from __future__ import annotations

from dataclasses import dataclass

from .assembly import AssembledSystem, EigReport, assemble, eig_report
from .config import ExperimentConfig
from .errors import AdmissibilityError
from .gauging import MultiLevelTree, build_level_tree, build_multilevel_tree, verify_level_tree
from .greville import EntityClass, build_grid, build_subgraph
from .hierarchy import Assumption1Report, HierarchicalSpace, build_mesh, build_space, check_assumption1
from .tensor import Geometry

__all__ = ["Experiment", "build_gauge", "run_experiment"]


@dataclass
class Experiment:
    config: ExperimentConfig
    space: HierarchicalSpace
    assumption1: Assumption1Report
    graphs: list
    trees: list
    tree_checks: list
    multilevel: MultiLevelTree
    system: AssembledSystem | None = None
    report: EigReport | None = None

    @property
    def mesh(self):
        return self.space.mesh

    @property
    def trees_ok(self) -> bool:
        return all(all(c.values()) for c in self.tree_checks)

    @property
    def count_identity(self) -> bool:
        ok = self.multilevel.size == self.space.dim(0)
        if self.report is not None:
            ok = ok and self.report.ungauged.zero_count == self.multilevel.size
        return ok

    @property
    def spectral_ok(self) -> bool:
        r = self.report
        return (
            r is not None
            and r.gauged.zero_count == 0
            and r.comparison.max_rel_diff < self.config.spectral_tolerance
        )

    def symmetry_error(self) -> float:
        err = 0.0
        for A in (self.system.K, self.system.M):
            scale = abs(A).max() or 1.0
            d = A - A.T
            err = max(err, (abs(d).max() if d.nnz else 0.0) / scale)
        return float(err)

    def level_stats(self) -> list:
        out = []
        for g, t, chk in zip(self.graphs, self.trees, self.tree_checks):
            out.append({
                "level": g.level,
                "nodes": int(g.nodes.size),
                "edges": int(g.edges.size),
                "components": g.components()[0],
                "boundary_components": g.components(g.edges_of(EntityClass.BOUNDARY))[0],
                "tree_edges": len(t),
                "tree_boundary": int(t.boundary.size),
                "tree_active": int(t.active.size),
                "tree_deactivated": int(t.deactivated.size),
                "checks": chk,
            })
        return out

    def summary(self) -> dict:
        r = self.report
        cmp_ = r.comparison if r else None
        return {
            "name": self.config.name,
            "degree": self.config.degree,
            "base_elements": list(self.config.base_elements),
            "num_levels": self.mesh.L + 1,
            "dim_W0": self.space.dim(0),
            "dim_W1": self.space.dim(1),
            "dim_W2": self.space.dim(2),
            "multilevel_tree_size": int(self.multilevel.size),
            "cotree_size": int(self.multilevel.cotree.size),
            "zero_count": r.ungauged.zero_count if r else None,
            "gauged_zero_count": r.gauged.zero_count if r else None,
            "zero_threshold": r.ungauged.tau if r else None,
            "paired_eigenvalues": int(cmp_.gauged.size) if r else None,
            "max_abs_diff": float(cmp_.abs_diff.max()) if r and cmp_.abs_diff.size else 0.0,
            "max_rel_diff": cmp_.max_rel_diff if r else None,
            "assumption1": {"passed": self.assumption1.passed, "checked": self.assumption1.checked},
            "x0_union_of_supports": [bool(x) for x in self.mesh.x0_representable],
            "levels": self.level_stats(),
            "checks": {
                "trees": self.trees_ok,
                "count_identity": self.count_identity,
                "spectral_equivalence": self.spectral_ok,
            },
        }


def build_gauge(config: ExperimentConfig) -> Experiment:
    """Mesh, hierarchical space, level graphs, level trees and the multi-level tree.

    Raises
    ------
    AdmissibilityError
        If the mesh is rejected, or if Assumption 1 fails and the config does
        not declare the mesh admissible otherwise.
    """
    mesh = build_mesh(
        config.degree, config.base_elements, config.refinement, Geometry(*config.domain_scale)
    )
    a1 = check_assumption1(mesh)
    if not a1.passed and not config.assume_assumption2:
        level = a1.failures[0][0]
        raise AdmissibilityError(level, a1.describe())
    space = build_space(mesh)
    graphs, trees, checks = [], [], []
    for l, lev in enumerate(mesh.levels):
        g = build_subgraph(build_grid(lev), mesh, l, space)
        t = build_level_tree(g)
        graphs.append(g)
        trees.append(t)
        checks.append(verify_level_tree(g, t))
    mlt = build_multilevel_tree(trees, space.basis(1))
    return Experiment(config, space, a1, graphs, trees, checks, mlt)


def run_experiment(config: ExperimentConfig) -> Experiment:
    exp = build_gauge(config)
    exp.system = assemble(exp.space, config.nu, config.epsilon)
    exp.report = eig_report(exp.system, exp.multilevel.cotree, config.zero_tolerance)
    return exp
