"""Curl-curl and mass matrices on hierarchical curl-conforming splines.

Integration runs over the active cells of every level (cells of level l in
``Omega_l`` minus ``Omega_{l+1}``) with a tensor Gauss rule of ``p + 1``
points per direction. On an active cell all active functions of the same or
coarser levels whose support overlaps the cell are evaluated; finer
functions are supported inside ``Omega_{l+1}`` and never overlap.

With the diagonal affine map ``F(x) = (a x1, b x2)`` the covariant
push-forward gives ``u = (u1_hat / a, u2_hat / b)`` and
``curl u = curl_hat u_hat / (a b)``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sps

from .bspline import eval_basis_many
from .errors import GaugeError
from .hierarchy import HierarchicalSpace, hierarchical_gradient

__all__ = [
    "AssembledSystem",
    "SpectrumHalf",
    "SpectrumComparison",
    "EigReport",
    "assemble",
    "scalar_mass",
    "solve_ungauged",
    "solve_gauged",
    "compare_spectra",
    "eig_report",
    "THREADS_ENV",
]

THREADS_ENV = "HBGAUGE_THREADS"
DEFAULT_ZERO_FACTOR = 1e-10


@dataclass(frozen=True)
class AssembledSystem:
    """Stiffness ``K`` and mass ``M`` on the active X1 functions.

    ``gradient`` expresses the gradients of the active X0 functions in the
    same basis, so ``K @ gradient`` vanishes.
    """

    K: sps.csr_matrix
    M: sps.csr_matrix
    gradient: sps.csr_matrix
    nu: float
    epsilon: float

    @property
    def size(self) -> int:
        return self.K.shape[0]


def _gauss_points(breaks: np.ndarray, nq: int):
    xg, wg = np.polynomial.legendre.leggauss(nq)
    a, b = breaks[:-1, None], breaks[1:, None]
    pts = 0.5 * (b - a) * xg[None, :] + 0.5 * (a + b)
    wts = 0.5 * (b - a) * wg[None, :]
    return pts, wts  # (num_elements, nq)


class _LevelTables:
    """Univariate values and first derivatives of every level's bases at one level's Gauss points."""

    def __init__(self, space, levels, nq):
        self.pts, self.wts = [], []
        self.tab = {}
        for d, u in enumerate((space.u1, space.u2)):
            pts, wts = _gauss_points(u.kv.breakpoints, nq)
            self.pts.append(pts)
            self.wts.append(wts)
            flat = pts.ravel()
            for lp, lev in enumerate(levels):
                std = (lev.u1, lev.u2)[d]
                cs = (lev.cs1, lev.cs2)[d]
                for name, us in (("std", std), ("cs", cs)):
                    first, vals = eval_basis_many(us, flat, 1)
                    ne = pts.shape[0]
                    first = first.reshape(ne, nq)
                    if np.any(first != first[:, :1]):
                        raise AssertionError("coarse span changes inside a fine element")
                    self.tab[(d, lp, name)] = (first[:, 0], vals.reshape(ne, nq, 2, -1))


def _cell_contributions(space: HierarchicalSpace, level: int, nu: float, eps: float):
    mesh = space.mesh
    basis1 = space.basis(1)
    lev = mesh.levels[level]
    p = lev.degree
    nq = p + 1
    tables = _LevelTables(lev, mesh.levels[: level + 1], nq)
    a, b = mesh.geometry.jacobian_diagonal
    det = a * b
    rows, cols, kv, mv = [], [], [], []
    for e1, e2 in np.argwhere(mesh.active_cells(level)):
        w = np.outer(tables.wts[0][e1], tables.wts[1][e2]).ravel()  # (nq*nq,) x-major
        ids, v1, v2, curl = [], [], [], []
        for lp in range(level + 1):
            clev = mesh.levels[lp]
            gidx = basis1.global_index[lp]
            for comp in (0, 1):
                nx_name = "cs" if comp == 0 else "std"
                ny_name = "std" if comp == 0 else "cs"
                fx, vx = tables.tab[(0, lp, nx_name)]
                fy, vy = tables.tab[(1, lp, ny_name)]
                fx, vx = fx[e1], vx[e1]  # vx: (nq, 2, qx)
                fy, vy = fy[e2], vy[e2]
                qx, qy = vx.shape[-1], vy.shape[-1]
                ii, jj = np.meshgrid(np.arange(fx, fx + qx), np.arange(fy, fy + qy), indexing="ij")
                loc = clev.index1(comp, ii, jj).ravel()
                g = gidx[loc]
                keep = g >= 0
                if not keep.any():
                    continue
                # values at points (x-major) for functions (ix-major)
                val = np.einsum("ai,bj->abij", vx[:, 0], vy[:, 0]).reshape(nq * nq, qx * qy)
                if comp == 0:
                    # curl of (u, 0) is -du/dy
                    dv = -np.einsum("ai,bj->abij", vx[:, 0], vy[:, 1]).reshape(nq * nq, qx * qy)
                else:
                    dv = np.einsum("ai,bj->abij", vx[:, 1], vy[:, 0]).reshape(nq * nq, qx * qy)
                zero = np.zeros_like(val[:, keep])
                ids.append(g[keep])
                v1.append(val[:, keep] if comp == 0 else zero)
                v2.append(val[:, keep] if comp == 1 else zero)
                curl.append(dv[:, keep])
        if not ids:
            continue
        ids = np.concatenate(ids)
        V1, V2, C = (np.concatenate(x, axis=1) for x in (v1, v2, curl))
        Ke = (nu / det) * (C.T * w) @ C
        Me = eps * det * ((V1.T * w) @ V1 / a**2 + (V2.T * w) @ V2 / b**2)
        r, c = np.meshgrid(ids, ids, indexing="ij")
        rows.append(r.ravel())
        cols.append(c.ravel())
        kv.append(Ke.ravel())
        mv.append(Me.ravel())
    return rows, cols, kv, mv


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def assemble(space: HierarchicalSpace, nu: float = 1.0, epsilon: float = 1.0) -> AssembledSystem:
    """Assemble ``int nu curl u . curl v`` and ``int epsilon u . v`` on the active X1 basis.

    Levels are assembled independently (optionally in threads, see
    ``HBGAUGE_THREADS``) into triplet lists that are summed at the end.
    """
    if nu <= 0 or epsilon <= 0:
        raise ValueError("material parameters must be positive")
    n = space.dim(1)
    levels = range(space.mesh.L + 1)
    nthreads = _threads()
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as pool:
            parts = list(pool.map(lambda l: _cell_contributions(space, l, nu, epsilon), levels))
    else:
        parts = [_cell_contributions(space, l, nu, epsilon) for l in levels]
    rows = [x for part in parts for x in part[0]]
    cols = [x for part in parts for x in part[1]]
    kv = [x for part in parts for x in part[2]]
    mv = [x for part in parts for x in part[3]]

    def build(vals):
        if not vals:
            return sps.csr_matrix((n, n))
        A = sps.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()
        A.sum_duplicates()
        return A

    return AssembledSystem(build(kv), build(mv), hierarchical_gradient(space), float(nu), float(epsilon))


def scalar_mass(level_space) -> sps.csr_matrix:
    """Mass matrix of the full (no boundary conditions) X0 space of one level."""
    nq = level_space.degree + 1
    geo = level_space.geometry
    mats = []
    for u in (level_space.u1, level_space.u2):
        pts, wts = _gauss_points(u.kv.breakpoints, nq)
        first, vals = eval_basis_many(u, pts.ravel(), 0)
        n = u.dim
        B = np.zeros((pts.size, n))
        for m in range(pts.size):
            B[m, first[m]: first[m] + u.degree + 1] = vals[m, 0]
        mats.append((B.T * wts.ravel()) @ B)
    return sps.csr_matrix(np.kron(mats[1], mats[0]) * geo.det_jacobian)


# -- eigenvalue problems ----------------------------------------------------------

@dataclass(frozen=True)
class SpectrumHalf:
    eigenvalues: np.ndarray
    tau: float
    zero_count: int

    @property
    def nonzero(self) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues >= self.tau]


def _zero_split(lam: np.ndarray, factor: float, tau: float | None):
    lam = np.sort(lam)
    if tau is None:
        tau = factor * float(np.max(np.abs(lam))) if lam.size else 0.0
    return SpectrumHalf(lam, tau, int(np.count_nonzero(lam < tau)))


def _dense(A):
    return A.toarray() if sps.issparse(A) else np.asarray(A)


def solve_ungauged(sys: AssembledSystem, zero_factor: float = DEFAULT_ZERO_FACTOR) -> SpectrumHalf:
    """Dense generalized eigenvalues of ``(K, M)`` on all active X1 functions.

    The zero threshold is ``zero_factor * max(lambda)``.
    """
    K, M = _dense(sys.K), _dense(sys.M)
    try:
        lam = sla.eigh(K, M, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"mass matrix is not positive definite: {exc}") from exc
    return _zero_split(lam, zero_factor, None)


def solve_gauged(
    sys: AssembledSystem,
    cotree,
    zero_factor: float = DEFAULT_ZERO_FACTOR,
    tau: float | None = None,
    method: str = "tree-cotree",
) -> SpectrumHalf:
    """Eigenvalues of the system reduced to the cotree unknowns.

    ``method="tree-cotree"`` writes the space as cotree functions plus the
    gradients of the active X0 functions. The stiffness vanishes on the
    gradients, so eliminating them leaves ``K_cc x = lambda S x`` with the
    Schur complement ``S = M_cc - M_cg M_gg^{-1} M_gc``, whose spectrum is
    exactly the nonzero spectrum of the full pencil when the tree is a valid
    gauge. ``method="restrict"`` simply drops the tree rows and columns of
    ``K`` and ``M``; that pencil has no kernel either, but its eigenvalues
    only approximate the Maxwell ones.

    Raises
    ------
    GaugeError
        If the cotree and the gradients do not form a basis, which signals an
        invalid tree.
    """
    c = np.asarray(cotree, dtype=np.int64)
    K, M = _dense(sys.K), _dense(sys.M)
    Kcc = K[np.ix_(c, c)]
    Mcc = M[np.ix_(c, c)]
    if method == "restrict":
        B = Mcc
    elif method == "tree-cotree":
        G = _dense(sys.gradient)
        if c.size + G.shape[1] != sys.size:
            raise GaugeError(
                f"cotree size {c.size} + gradient count {G.shape[1]} != {sys.size} unknowns"
            )
        MG = M @ G
        Mgg = G.T @ MG
        Mcg = MG[c, :]
        try:
            Lg = sla.cho_factor(Mgg)
            B = Mcc - Mcg @ sla.cho_solve(Lg, Mcg.T)
        except np.linalg.LinAlgError as exc:
            raise GaugeError(f"gradient Gram matrix is singular: {exc}") from exc
        B = 0.5 * (B + B.T)
    else:
        raise ValueError(f"unknown method {method!r}")
    try:
        lam = sla.eigh(Kcc, B, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise GaugeError(f"cotree and gradients are linearly dependent: {exc}") from exc
    return _zero_split(lam, zero_factor, tau)


@dataclass(frozen=True)
class SpectrumComparison:
    """Paired nonzero ungauged and gauged eigenvalues (sorted order)."""

    gauged: np.ndarray
    ungauged: np.ndarray
    abs_diff: np.ndarray
    rel_diff: np.ndarray
    length_mismatch: int

    @property
    def max_rel_diff(self) -> float:
        if self.length_mismatch:
            return float("inf")
        return float(self.rel_diff.max()) if self.rel_diff.size else 0.0


def compare_spectra(ungauged: SpectrumHalf, gauged: SpectrumHalf) -> SpectrumComparison:
    """Drop the zero block of the ungauged spectrum and pair the rest by sorted order."""
    u = ungauged.eigenvalues[ungauged.zero_count:]
    g = gauged.eigenvalues
    n = min(u.size, g.size)
    u, g2 = u[:n], g[:n]
    absd = np.abs(g2 - u)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(u != 0, absd / np.abs(u), np.where(absd == 0, 0.0, np.inf))
    return SpectrumComparison(g2, u, absd, rel, abs(ungauged.eigenvalues.size - ungauged.zero_count - g.size))


@dataclass(frozen=True)
class EigReport:
    ungauged: SpectrumHalf
    gauged: SpectrumHalf
    comparison: SpectrumComparison = field(repr=False)


def eig_report(sys: AssembledSystem, cotree, zero_factor: float = DEFAULT_ZERO_FACTOR) -> EigReport:
    ung = solve_ungauged(sys, zero_factor)
    gau = solve_gauged(sys, cotree, tau=ung.tau)
    return EigReport(ung, gau, compare_spectra(ung, gau))
