"""Symmetric and Hermitian matrix-valued Gaussian paths built from independent
scalar entry paths, plus the unnormalized joint eigenvalue densities used as
oracles.

Entry paths are the source of truth; dense matrices are derived views.  The
diagonal of a symmetric matrix path carries a sqrt(2) scaling of its entry
path, and Hermitian off-diagonals carry a 1/sqrt(2) scaling of independent
real and imaginary parts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GridMismatch, NonSymmetricOffset, SimplexViolation
from .gaussian_paths import (
    GridSpec,
    ScalarPath,
    SeedSpec,
    sample_fbm_ensemble,
)

__all__ = [
    "SymMatrixPath",
    "HermMatrixPath",
    "assemble_symmetric",
    "assemble_hermitian",
    "sym_entry_pairs",
    "sample_sym_fbm_path",
    "eigen_density_log",
    "write_sym_path_csv",
]

SQRT2 = np.sqrt(2.0)


def sym_entry_pairs(d: int) -> list[tuple[int, int]]:
    """Upper-triangle index pairs (k, h), k <= h, in row-major order."""
    return [(k, h) for k in range(d) for h in range(k, d)]


@dataclass(frozen=True)
class SymMatrixPath:
    """d x d symmetric matrix path X(t) = X(0) + Xhat(t).

    entries maps (k, h) with k <= h to the scalar path b_kh; the matrix view
    uses Xhat_kh = Xhat_hk = b_kh for k < h and Xhat_kk = sqrt(2) b_kk.
    """

    d: int
    grid: GridSpec
    entries: dict
    x0: np.ndarray

    def matrices(self) -> np.ndarray:
        """Dense view: array of shape (n+1, d, d), exactly symmetric."""
        n = self.grid.n
        X = np.zeros((n + 1, self.d, self.d))
        for (k, h), path in self.entries.items():
            if k == h:
                X[:, k, k] = SQRT2 * path.values
            else:
                X[:, k, h] = path.values
                X[:, h, k] = path.values
        return X + self.x0

    def increments(self) -> np.ndarray:
        """Entry-path increments, shape (n, N) with N = d(d+1)/2, pair order."""
        pairs = sym_entry_pairs(self.d)
        return np.stack(
            [np.diff(self.entries[p].values) for p in pairs], axis=1
        )

    def subsample(self, n: int) -> "SymMatrixPath":
        entries = {p: sp.subsample(n) for p, sp in self.entries.items()}
        return SymMatrixPath(self.d, GridSpec(self.grid.T, n), entries, self.x0)


@dataclass(frozen=True)
class HermMatrixPath:
    """d x d Hermitian matrix path with real diagonal entry paths and
    (Re + i Im)/sqrt(2) off-diagonals."""

    d: int
    grid: GridSpec
    diag: dict          # k -> ScalarPath
    off_re: dict        # (k, h), k < h -> ScalarPath
    off_im: dict        # (k, h), k < h -> ScalarPath
    x0: np.ndarray

    def matrices(self) -> np.ndarray:
        n = self.grid.n
        X = np.zeros((n + 1, self.d, self.d), dtype=complex)
        for k, path in self.diag.items():
            X[:, k, k] = path.values
        for (k, h), re in self.off_re.items():
            z = (re.values + 1j * self.off_im[(k, h)].values) / SQRT2
            X[:, k, h] = z
            X[:, h, k] = np.conj(z)
        return X + self.x0


def _common_grid(paths: Sequence[ScalarPath]) -> GridSpec:
    grid = paths[0].grid
    for p in paths[1:]:
        if p.grid != grid:
            raise GridMismatch("entry paths do not share one grid")
    return grid


def assemble_symmetric(entries: Sequence[ScalarPath], x0=None) -> SymMatrixPath:
    """Assemble a symmetric matrix path from d(d+1)/2 entry paths.

    Entries are consumed in upper-triangle row-major order
    (0,0), (0,1), ..., (0,d-1), (1,1), ...
    """
    N = len(entries)
    d = int((np.sqrt(8 * N + 1) - 1) / 2)
    if d * (d + 1) // 2 != N or d < 2:
        raise ValueError(f"{N} entry paths do not form a d>=2 upper triangle")
    grid = _common_grid(entries)
    if x0 is None:
        x0 = np.zeros((d, d))
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (d, d) or not np.array_equal(x0, x0.T):
        raise NonSymmetricOffset("X(0) must be an exactly symmetric d x d matrix")
    entry_map = dict(zip(sym_entry_pairs(d), entries))
    return SymMatrixPath(d, grid, entry_map, x0)


def assemble_hermitian(entries: Sequence[ScalarPath], x0=None) -> HermMatrixPath:
    """Assemble a Hermitian matrix path from d^2 entry paths.

    Order: d diagonal paths, then Re b_kh and Im b_kh interleaved over the
    strict upper triangle in row-major order.
    """
    N = len(entries)
    d = int(round(np.sqrt(N)))
    if d * d != N or d < 2:
        raise ValueError(f"{N} entry paths do not form a d>=2 Hermitian set")
    grid = _common_grid(entries)
    if x0 is None:
        x0 = np.zeros((d, d), dtype=complex)
    x0 = np.asarray(x0, dtype=complex)
    if x0.shape != (d, d) or not np.array_equal(x0, x0.conj().T):
        raise NonSymmetricOffset("X(0) must be an exactly Hermitian d x d matrix")
    diag = {k: entries[k] for k in range(d)}
    off_pairs = [(k, h) for k in range(d) for h in range(k + 1, d)]
    off_re, off_im = {}, {}
    for idx, (k, h) in enumerate(off_pairs):
        off_re[(k, h)] = entries[d + 2 * idx]
        off_im[(k, h)] = entries[d + 2 * idx + 1]
    return HermMatrixPath(d, grid, diag, off_re, off_im, x0)


def sample_sym_fbm_path(
    d: int, grid: GridSpec, H: float, seed: SeedSpec, x0=None
) -> SymMatrixPath:
    """Sample a symmetric matrix fBm path; entry (k,h) uses stream (k,h)."""
    pairs = sym_entry_pairs(d)
    seeds = [seed.child(k, h) for (k, h) in pairs]
    rows = sample_fbm_ensemble(grid, H, seeds)
    entries = [ScalarPath(grid, rows[i]) for i in range(len(pairs))]
    return assemble_symmetric(entries, x0)


def eigen_density_log(
    lam: np.ndarray, sigma: float, ensemble: str = "orthogonal"
) -> float:
    """Log of the unnormalized joint eigenvalue density at scale sigma.

    orthogonal: sum_{k<h} log(l_k - l_h) - (d(d+1)/2) log sigma
                - sum l_i^2 / (4 sigma^2)
    unitary:    2 sum_{k<h} log(l_k - l_h) - d^2 log sigma
                - sum l_i^2 / (2 sigma^2)

    For the matrix-fBm marginal at time t, pass sigma = t^H.
    Normalizing constants are never computed; callers use ratios.
    """
    lam = np.asarray(lam, dtype=float)
    d = lam.size
    if d > 1 and not np.all(np.diff(lam) < 0):
        raise SimplexViolation("eigenvalues must be strictly decreasing")
    if not sigma > 0:
        raise ValueError(f"scale must be positive, got {sigma}")
    gaps = lam[:, None] - lam[None, :]
    log_vdm = float(np.sum(np.log(gaps[np.triu_indices(d, k=1)]))) if d > 1 else 0.0
    if ensemble == "orthogonal":
        return log_vdm - d * (d + 1) / 2 * np.log(sigma) - float(np.sum(lam**2)) / (
            4 * sigma**2
        )
    if ensemble == "unitary":
        return 2 * log_vdm - d * d * np.log(sigma) - float(np.sum(lam**2)) / (
            2 * sigma**2
        )
    raise ValueError(f"unknown ensemble {ensemble!r}")


def write_sym_path_csv(P: SymMatrixPath, fname) -> None:
    """Export as `t,k,h,value` rows over the upper triangle (1-based k,h)."""
    nodes = P.grid.nodes()
    with open(fname, "w") as fh:
        fh.write("t,k,h,value\n")
        for m, t in enumerate(nodes):
            for (k, h) in sym_entry_pairs(P.d):
                fh.write(f"{t:.17g},{k + 1},{h + 1},{P.entries[(k, h)].values[m]:.17g}\n")
