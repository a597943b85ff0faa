"""Eigendecomposition with the sign conventions needed for smooth eigenvalue
coordinates, plus explicit first/second derivatives of eigenvalues with
respect to the scalar entry paths.

The solver is a self-contained cyclic Jacobi iteration, batched over a leading
axis so an entire matrix path (or replicate ensemble) is decomposed in one
call.  Columns of U are eigenvectors; the gradient of the i-th sorted
eigenvalue with respect to entry b_kh is 2 U[k,i] U[h,i] for k != h and
sqrt(2) U[k,i]^2 on the diagonal (the sqrt(2) scaling of diagonal matrix
entries is folded in).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, NoConvergence, NotVeryGood
from .gaussian_paths import GridSpec
from .matrix_ensemble import SQRT2, sym_entry_pairs

__all__ = [
    "EigenDecomposition",
    "EigenPath",
    "EigenDerivatives",
    "eigh_jacobi",
    "jacobi_eigh_batch",
    "eigen_path",
    "eigen_derivatives",
    "hoffman_wielandt_gap",
    "write_eigen_path_csv",
]

_OFFDIAG_TOL = 1e-13
_MAX_SWEEPS = 100
_ENTRY_TOL = 1e-10
_GAP_TOL = 1e-12
_SIGN_TOL = 1e-12
GRAD_BOUND = 2.0 + SQRT2


@dataclass(frozen=True)
class EigenDecomposition:
    """Sorted eigenvalues and a sign-normalized eigenvector frame."""

    eigenvalues: np.ndarray  # (d,), descending
    U: np.ndarray            # (d, d), column i is the eigenvector of lambda_i
    very_good: bool


@dataclass(frozen=True)
class EigenPath:
    """Eigenvalue trajectories along a matrix path, sorted descending at
    every node, with optional per-node frames."""

    grid: GridSpec
    lambdas: np.ndarray            # (d, n+1)
    frames: np.ndarray | None      # (n+1, d, d) or None
    very_good: np.ndarray          # (n+1,) bool
    source: object = None

    @property
    def d(self) -> int:
        return self.lambdas.shape[0]


@dataclass(frozen=True)
class EigenDerivatives:
    """Gradient and Hessian diagonal of eigenvalue maps w.r.t. entry paths.

    grad[i, j] and hess_diag[i, j] refer to entry pair pairs[j] = (k, h).
    """

    pairs: list
    grad: np.ndarray       # (d, N)
    hess_diag: np.ndarray  # (d, N)


def _rotation_params(app, aqq, apq_abs):
    """Stable Jacobi angle: returns (c, s) zeroing a real symmetric 2x2 block."""
    active = apq_abs > 0.0
    theta = np.zeros_like(app)
    with np.errstate(over="ignore"):
        np.divide(aqq - app, 2.0 * apq_abs, out=theta, where=active)
    with np.errstate(over="ignore"):
        # theta**2 may overflow to inf for tiny pivots; the quotient is then 0
        t = np.where(
            active,
            np.sign(theta + (theta == 0)) / (np.abs(theta) + np.sqrt(theta**2 + 1.0)),
            0.0,
        )
    c = 1.0 / np.sqrt(t**2 + 1.0)
    s = t * c
    return np.where(active, c, 1.0), np.where(active, s, 0.0)


def _offdiag_sq(A: np.ndarray) -> np.ndarray:
    d = A.shape[-1]
    mask = ~np.eye(d, dtype=bool)
    return np.sum(np.abs(A[..., mask]) ** 2, axis=-1)


def _jacobi_core(mats: np.ndarray):
    """Cyclic Jacobi on a (m, d, d) batch.  Returns (diag, V, sweeps)."""
    A = np.array(mats)
    m, d, _ = A.shape
    hermitian = np.iscomplexobj(A)
    V = np.broadcast_to(np.eye(d, dtype=A.dtype), (m, d, d)).copy()
    norm_sq = np.sum(np.abs(A) ** 2, axis=(1, 2))
    target = (_OFFDIAG_TOL**2) * np.maximum(norm_sq, np.finfo(float).tiny)
    for sweep in range(_MAX_SWEEPS):
        if np.all(_offdiag_sq(A) <= target):
            return np.real(np.einsum("mii->mi", A)), V, sweep
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[:, p, q].copy()
                if hermitian:
                    aabs = np.abs(apq)
                    phi = np.where(aabs > 0, apq / np.where(aabs > 0, aabs, 1.0), 1.0)
                    # phase out the (p,q) entry: column q by conj(phi), row q by phi
                    A[:, :, q] *= np.conj(phi)[:, None]
                    A[:, q, :] *= phi[:, None]
                    V[:, :, q] *= np.conj(phi)[:, None]
                else:
                    aabs = np.abs(apq)
                    sgn = np.where(apq >= 0, 1.0, -1.0)
                    # flip sign of column/row q so the pivot entry is >= 0
                    A[:, :, q] *= sgn[:, None]
                    A[:, q, :] *= sgn[:, None]
                    V[:, :, q] *= sgn[:, None]
                c, s = _rotation_params(
                    np.real(A[:, p, p]), np.real(A[:, q, q]), aabs
                )
                cc = c[:, None]
                ss = s[:, None]
                colp = A[:, :, p].copy()
                colq = A[:, :, q].copy()
                A[:, :, p] = cc * colp - ss * colq
                A[:, :, q] = ss * colp + cc * colq
                rowp = A[:, p, :].copy()
                rowq = A[:, q, :].copy()
                A[:, p, :] = cc * rowp - ss * rowq
                A[:, q, :] = ss * rowp + cc * rowq
                A[:, p, q] = 0.0
                A[:, q, p] = 0.0
                vp = V[:, :, p].copy()
                vq = V[:, :, q].copy()
                V[:, :, p] = cc * vp - ss * vq
                V[:, :, q] = ss * vp + cc * vq
    if np.all(_offdiag_sq(A) <= target):
        return np.real(np.einsum("mii->mi", A)), V, _MAX_SWEEPS
    bad = int(np.argmax(_offdiag_sq(A) - target))
    raise NoConvergence(
        f"Jacobi did not converge in {_MAX_SWEEPS} sweeps (batch index {bad})"
    )


def _sign_normalize(U: np.ndarray) -> np.ndarray:
    """Scale each column so its diagonal entry is real positive; when that
    entry is numerically zero, use the largest-magnitude component instead."""
    m, d, _ = U.shape
    complex_frame = np.iscomplexobj(U)
    for i in range(d):
        pivot = U[:, i, i].copy()
        small = np.abs(pivot) < _SIGN_TOL
        if np.any(small):
            alt_idx = np.argmax(np.abs(U[:, :, i]), axis=1)
            alt = U[np.arange(m), alt_idx, i]
            pivot = np.where(small, alt, pivot)
        if complex_frame:
            phase = np.where(np.abs(pivot) > 0, pivot / np.abs(pivot), 1.0)
            U[:, :, i] *= np.conj(phase)[:, None]
        else:
            U[:, :, i] *= np.where(pivot >= 0, 1.0, -1.0)[:, None]
    return U


def _all_minors_nonzero(U: np.ndarray) -> np.ndarray:
    """Exhaustive minor check for small d: every square submatrix of every
    frame in the batch has |det| above tolerance.  Returns (m,) bool."""
    m, d, _ = U.shape
    ok = np.all(np.abs(U) > _ENTRY_TOL, axis=(1, 2))
    idx = list(range(d))
    for k in range(2, d):
        for rows in combinations(idx, k):
            sub_rows = U[:, rows, :]
            for cols in combinations(idx, k):
                dets = np.linalg.det(sub_rows[:, :, cols])
                ok &= np.abs(dets) > _ENTRY_TOL
    return ok


def jacobi_eigh_batch(mats: np.ndarray, minors: bool = True):
    """Decompose a (m, d, d) batch of symmetric/Hermitian matrices.

    Returns (lambdas (m, d) descending, U (m, d, d), very_good (m,) bool).
    """
    mats = np.asarray(mats)
    single = mats.ndim == 2
    if single:
        mats = mats[None]
    m, d, _ = mats.shape
    diag, V, _ = _jacobi_core(mats)
    order = np.argsort(-diag, axis=1, kind="stable")
    lams = np.take_along_axis(diag, order, axis=1)
    U = np.take_along_axis(V, order[:, None, :], axis=2)
    U = _sign_normalize(U)
    gaps_ok = (
        np.all(-np.diff(lams, axis=1) > _GAP_TOL, axis=1) if d > 1
        else np.ones(m, dtype=bool)
    )
    entries_ok = np.all(np.abs(U) > _ENTRY_TOL, axis=(1, 2))
    vg = gaps_ok & entries_ok
    if minors and 2 < d <= 4:
        vg &= _all_minors_nonzero(U)
    if single:
        return lams[0], U[0], bool(vg[0])
    return lams, U, vg


def eigh_jacobi(M: np.ndarray) -> EigenDecomposition:
    """Cyclic Jacobi eigendecomposition of one symmetric/Hermitian matrix."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got {M.shape}")
    lam, U, vg = jacobi_eigh_batch(M)
    return EigenDecomposition(lam, U, vg)


def eigen_path(P, keep_frames: bool = True, minors: bool = True) -> EigenPath:
    """Per-node eigendecomposition of a matrix path; labeling by descending
    sort (continuous by almost-sure non-collision)."""
    mats = P.matrices()
    lams, U, vg = jacobi_eigh_batch(mats, minors=minors)
    traces = np.real(np.einsum("mii->m", mats))
    err = np.abs(lams.sum(axis=1) - traces)
    if np.any(err > 1e-10 * (1.0 + np.abs(traces))):
        bad = int(np.argmax(err))
        raise NoConvergence(f"trace identity violated at node {bad}")
    return EigenPath(P.grid, lams.T.copy(), U if keep_frames else None, vg, source=P)


def _derivatives_batch(U: np.ndarray, lams: np.ndarray):
    """Vectorized gradient/Hessian-diagonal for a batch of frames.

    U: (m, d, d) real, lams: (m, d) descending.
    Returns grad (m, d, N) and hess (m, d, N) in sym_entry_pairs order;
    Hessian rows are NaN wherever some gap vanishes (caller must mask).
    """
    m, d, _ = U.shape
    pairs = sym_entry_pairs(d)
    N = len(pairs)
    grad = np.empty((m, d, N))
    hess = np.empty((m, d, N))
    gap = lams[:, :, None] - lams[:, None, :]          # (m, i, j)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_gap = np.where(np.eye(d, dtype=bool), 0.0, 1.0 / gap)
    with np.errstate(invalid="ignore"):
        for j, (k, h) in enumerate(pairs):
            uk = U[:, k, :]                                # (m, i)
            uh = U[:, h, :]
            if k == h:
                grad[:, :, j] = SQRT2 * uk**2
                cross = uk[:, :, None] * uk[:, None, :]    # (m, i, jj)
                hess[:, :, j] = 4.0 * np.sum(cross**2 * inv_gap, axis=2)
            else:
                grad[:, :, j] = 2.0 * uk * uh
                sym = uk[:, :, None] * uh[:, None, :] + uh[:, :, None] * uk[:, None, :]
                hess[:, :, j] = 2.0 * np.sum(sym**2 * inv_gap, axis=2)
    return grad, hess


def eigen_derivatives(dec: EigenDecomposition) -> EigenDerivatives:
    """First/second derivatives of sorted eigenvalues w.r.t. entry paths."""
    if not dec.very_good:
        raise NotVeryGood("decomposition fails the very-good preconditions")
    d = dec.U.shape[0]
    grad, hess = _derivatives_batch(dec.U[None], dec.eigenvalues[None])
    return EigenDerivatives(sym_entry_pairs(d), grad[0], hess[0])


def hoffman_wielandt_gap(A: np.ndarray, B: np.ndarray):
    """(lhs, rhs) of the Hoffman-Wielandt inequality with sorted spectra:
    sum_i (lambda_i(A) - lambda_i(B))^2 <= sum_ij (A_ij - B_ij)^2."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes {A.shape} and {B.shape} differ")
    la, _, _ = jacobi_eigh_batch(A, minors=False)
    lb, _, _ = jacobi_eigh_batch(B, minors=False)
    lhs = float(np.sum((la - lb) ** 2))
    rhs = float(np.sum((A - B) ** 2))
    return lhs, rhs


def write_eigen_path_csv(ep: EigenPath, fname) -> None:
    """Export as `t,i,lambda` rows (1-based i)."""
    nodes = ep.grid.nodes()
    with open(fname, "w") as fh:
        fh.write("t,i,lambda\n")
        for m, t in enumerate(nodes):
            for i in range(ep.d):
                fh.write(f"{t:.17g},{i + 1},{ep.lambdas[i, m]:.17g}\n")


def write_derivatives_csv(der: EigenDerivatives, fname) -> None:
    """Export as `i,k,h,grad,hess` rows (1-based indices)."""
    with open(fname, "w") as fh:
        fh.write("i,k,h,grad,hess\n")
        for i in range(der.grad.shape[0]):
            for j, (k, h) in enumerate(der.pairs):
                fh.write(
                    f"{i + 1},{k + 1},{h + 1},"
                    f"{der.grad[i, j]:.17g},{der.hess_diag[i, j]:.17g}\n"
                )
