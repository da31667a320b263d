"""Tree-cotree gauging for two-dimensional hierarchical B-spline de Rham spaces."""
from .bspline import KnotVector, UnivariateSpace, dyadic_refine, eval_basis, greville_abscissae
from .tensor import Geometry, LevelSpace, build_level_space, evaluate_form, gradient_operator
from .hierarchy import build_mesh, build_space, check_assumption1, hierarchical_gradient, select_basis
from .greville import EntityClass, build_grid, build_subgraph, incidence_matrix
from .gauging import build_level_tree, build_multilevel_tree, gauge_indices
from .assembly import assemble, compare_spectra, solve_gauged, solve_ungauged

__version__ = "0.1.0"
