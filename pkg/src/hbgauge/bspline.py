"""Univariate B-spline machinery on open knot vectors over [0, 1].

Two flavors of univariate space are used to build the spline de Rham
sequence. The *standard* flavor is the usual degree-p B-spline basis on a
knot vector ``t``. The *Curry-Schoenberg* flavor is the degree-(p-1) basis
on the knot vector with its first and last knot removed, with every function
scaled so that the derivative of a standard B-spline is a difference of two
consecutive Curry-Schoenberg functions::

    d/dx B_i = D_{i-1} - D_i        (D_{-1} = D_{n-1} = 0)

All indices are zero-based.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "KnotVector",
    "UnivariateSpace",
    "uniform_knot_vector",
    "find_span",
    "eval_basis",
    "eval_basis_many",
    "greville_abscissae",
    "dyadic_refine",
    "refinement_matrix",
    "support_elements",
]

STANDARD = "standard"
CURRY_SCHOENBERG = "curry-schoenberg"


@dataclass(frozen=True)
class KnotVector:
    """Open knot vector on [0, 1].

    Parameters
    ----------
    degree : int
        Polynomial degree ``p >= 1``.
    knots : sequence of float
        Nondecreasing knots, ``n + p + 1`` of them.
    """

    degree: int
    knots: tuple

    def __post_init__(self):
        p = int(self.degree)
        t = tuple(float(x) for x in self.knots)
        object.__setattr__(self, "degree", p)
        object.__setattr__(self, "knots", t)
        if p < 1:
            raise ValueError(f"degree must be >= 1, got {p}")
        if any(b < a for a, b in zip(t, t[1:])):
            raise ValueError("knots must be nondecreasing")
        if len(t) < 2 * (p + 1):
            raise ValueError("too few knots for an open knot vector")
        if any(x != 0.0 for x in t[: p + 1]) or any(x != 1.0 for x in t[-(p + 1):]):
            raise ValueError("knot vector must be open on [0, 1]")
        interior = t[p + 1: len(t) - p - 1]
        if interior and (interior[0] <= 0.0 or interior[-1] >= 1.0):
            raise ValueError("interior knots must lie strictly inside (0, 1)")
        values, counts = np.unique(interior, return_counts=True)
        if counts.size and counts.max() > p:
            bad = values[np.argmax(counts)]
            raise ValueError(f"interior knot {bad} has multiplicity > degree {p}")
        if self.num_functions < p + 1:
            raise ValueError("at least p + 1 basis functions are required")

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.knots)

    @property
    def num_functions(self) -> int:
        return len(self.knots) - self.degree - 1

    @property
    def breakpoints(self) -> np.ndarray:
        return np.unique(self.knots)

    @property
    def num_elements(self) -> int:
        return len(self.breakpoints) - 1


def uniform_knot_vector(degree: int, num_elements: int) -> KnotVector:
    """Open uniform knot vector with ``num_elements`` spans of width 1/m."""
    if num_elements < 1:
        raise ValueError("num_elements must be positive")
    interior = [k / num_elements for k in range(1, num_elements)]
    return KnotVector(degree, [0.0] * (degree + 1) + interior + [1.0] * (degree + 1))


@dataclass(frozen=True)
class UnivariateSpace:
    """Spline space built on ``kv``, either standard or Curry-Schoenberg."""

    kv: KnotVector
    flavor: str = STANDARD
    _scale: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.flavor not in (STANDARD, CURRY_SCHOENBERG):
            raise ValueError(f"unknown flavor {self.flavor!r}")
        if self.flavor == CURRY_SCHOENBERG:
            t = self.kv.array
            p = self.kv.degree
            i = np.arange(self.dim)
            scale = p / (t[i + p + 1] - t[i + 1])
        else:
            scale = np.ones(self.dim)
        scale.setflags(write=False)
        object.__setattr__(self, "_scale", scale)

    @classmethod
    def standard(cls, kv: KnotVector) -> "UnivariateSpace":
        return cls(kv, STANDARD)

    @classmethod
    def curry_schoenberg(cls, kv: KnotVector) -> "UnivariateSpace":
        return cls(kv, CURRY_SCHOENBERG)

    @property
    def is_standard(self) -> bool:
        return self.flavor == STANDARD

    @property
    def degree(self) -> int:
        """Polynomial degree of the functions in this space."""
        return self.kv.degree if self.is_standard else self.kv.degree - 1

    @property
    def knots(self) -> np.ndarray:
        """Knot vector the functions are actually defined on."""
        t = self.kv.array
        return t if self.is_standard else t[1:-1]

    @property
    def dim(self) -> int:
        n = self.kv.num_functions
        return n if self.is_standard else n - 1

    @property
    def scale(self) -> np.ndarray:
        """Per-function normalization factors (ones for the standard flavor)."""
        return self._scale


def find_span(knots: np.ndarray, degree: int, x: float) -> int:
    """Index ``k`` with ``knots[k] <= x < knots[k+1]``; x = 1 uses the last nonempty span."""
    n = len(knots) - degree - 1
    k = int(np.searchsorted(knots, x, side="right")) - 1
    k = min(max(k, degree), n - 1)
    while knots[k] == knots[k + 1]:
        k -= 1
    return k


def _ders_basis_funs(knots, q, span, x, nd):
    # Piegl & Tiller, The NURBS Book, algorithm A2.3.
    ndu = np.zeros((q + 1, q + 1))
    left = np.zeros(q + 1)
    right = np.zeros(q + 1)
    ndu[0, 0] = 1.0
    for j in range(1, q + 1):
        left[j] = x - knots[span + 1 - j]
        right[j] = knots[span + j] - x
        saved = 0.0
        for r in range(j):
            ndu[j, r] = right[r + 1] + left[j - r]
            temp = ndu[r, j - 1] / ndu[j, r]
            ndu[r, j] = saved + right[r + 1] * temp
            saved = left[j - r] * temp
        ndu[j, j] = saved

    ders = np.zeros((nd + 1, q + 1))
    ders[0] = ndu[:, q]
    a = np.zeros((2, q + 1))
    for r in range(q + 1):
        s1, s2 = 0, 1
        a[0, 0] = 1.0
        for k in range(1, min(nd, q) + 1):
            d = 0.0
            rk = r - k
            pk = q - k
            if r >= k:
                a[s2, 0] = a[s1, 0] / ndu[pk + 1, rk]
                d = a[s2, 0] * ndu[rk, pk]
            j1 = 1 if rk >= -1 else -rk
            j2 = k - 1 if r - 1 <= pk else q - r
            for j in range(j1, j2 + 1):
                a[s2, j] = (a[s1, j] - a[s1, j - 1]) / ndu[pk + 1, rk + j]
                d += a[s2, j] * ndu[rk + j, pk]
            if r <= pk:
                a[s2, k] = -a[s1, k - 1] / ndu[pk + 1, r]
                d += a[s2, k] * ndu[r, pk]
            ders[k, r] = d
            s1, s2 = s2, s1
    fac = q
    for k in range(1, min(nd, q) + 1):
        ders[k] *= fac
        fac *= q - k
    return ders


def _check_point(x):
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"evaluation point {x} outside [0, 1]")
    return x


def eval_basis(space: UnivariateSpace, x: float, deriv_order: int = 0):
    """Nonzero basis functions (or a derivative of them) at ``x``.

    Returns
    -------
    first : int
        Index of the first possibly-nonzero function.
    values : ndarray, shape (degree + 1,)
        Values of functions ``first, ..., first + degree`` where ``degree`` is
        the degree of ``space`` (p for standard, p-1 for Curry-Schoenberg).
    """
    x = _check_point(x)
    if deriv_order < 0 or deriv_order > space.kv.degree:
        raise ValueError(f"deriv_order must be in [0, {space.kv.degree}], got {deriv_order}")
    q = space.degree
    t = space.knots
    span = find_span(t, q, x)
    first = span - q
    if deriv_order > q:
        return first, np.zeros(q + 1)
    values = _ders_basis_funs(t, q, span, x, deriv_order)[deriv_order]
    return first, values * space.scale[first: first + q + 1]


def eval_basis_many(space: UnivariateSpace, xs, nd: int = 0):
    """Vector form of :func:`eval_basis` returning all derivatives up to ``nd``.

    Returns ``first`` with shape (npts,) and ``values`` with shape
    (npts, nd + 1, degree + 1).
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    q = space.degree
    t = space.knots
    first = np.empty(xs.size, dtype=np.int64)
    values = np.zeros((xs.size, nd + 1, q + 1))
    for m, x in enumerate(xs):
        x = _check_point(x)
        span = find_span(t, q, x)
        first[m] = span - q
        kmax = min(nd, q)
        values[m, : kmax + 1] = _ders_basis_funs(t, q, span, x, kmax)
    values *= np.stack([space.scale[f: f + q + 1] for f in first])[:, None, :]
    return first, values


def greville_abscissae(space: UnivariateSpace) -> np.ndarray:
    """Knot averages ``(t[i+1] + ... + t[i+p]) / p`` of a standard space."""
    if not space.is_standard:
        raise ValueError("Greville abscissae are only defined for the standard flavor")
    t = space.kv.array
    p = space.kv.degree
    return np.array([t[i + 1: i + p + 1].sum() / p for i in range(space.dim)])


def dyadic_refine(kv: KnotVector) -> KnotVector:
    """Insert the midpoint of every nonempty knot span once."""
    b = kv.breakpoints
    mids = 0.5 * (b[:-1] + b[1:])
    return KnotVector(kv.degree, np.sort(np.concatenate([kv.array, mids])))


def _insertion_matrix(t, q, x):
    """Boehm insertion of ``x``: returns the new knots and A with P_new = A @ P_old."""
    n = len(t) - q - 1
    k = find_span(t, q, x)
    A = np.zeros((n + 1, n))
    for i in range(n + 1):
        if i <= k - q:
            alpha = 1.0
        elif i >= k + 1:
            alpha = 0.0
        else:
            alpha = (x - t[i]) / (t[i + q] - t[i])
        if i < n:
            A[i, i] = alpha
        if i >= 1:
            A[i, i - 1] = 1.0 - alpha
    return np.insert(t, k + 1, x), A


def refinement_matrix(coarse: UnivariateSpace, fine: UnivariateSpace) -> np.ndarray:
    """Two-scale relation between nested spaces of the same flavor.

    Column ``c`` holds the coefficients of coarse function ``c`` in the fine
    basis, i.e. ``B_c = sum_f R[f, c] * B_f``.
    """
    if coarse.flavor != fine.flavor or coarse.kv.degree != fine.kv.degree:
        raise ValueError("spaces must share flavor and degree")
    q = coarse.degree
    t = coarse.knots.copy()
    target = fine.knots
    new = []
    # multiset difference target - t
    ti = list(t)
    for x in target:
        if x in ti:
            ti.remove(x)
        else:
            new.append(x)
    if ti:
        raise ValueError("fine knot vector does not contain the coarse one")
    R = np.eye(coarse.dim)
    for x in new:
        t, A = _insertion_matrix(t, q, x)
        R = A @ R
    return R * coarse.scale[None, :] / fine.scale[:, None]


def support_elements(space: UnivariateSpace) -> np.ndarray:
    """Half-open element index range ``[e0, e1)`` of every function's support.

    Elements are the nonempty knot spans of ``space.kv``.
    """
    b = space.kv.breakpoints
    t = space.kv.array
    p = space.kv.degree
    i = np.arange(space.dim)
    if space.is_standard:
        lo, hi = t[i], t[i + p + 1]
    else:
        lo, hi = t[i + 1], t[i + p + 1]
    return np.stack([np.searchsorted(b, lo), np.searchsorted(b, hi)], axis=1)
