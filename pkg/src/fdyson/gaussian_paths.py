"""Exact sampling of fractional Brownian motion and general Hölder-continuous
centered Gaussian processes on uniform grids.

Two exact samplers are provided: a dense pivoted-Cholesky sampler that works
for any admissible covariance, and an O(n log n) circulant-embedding sampler
specialised to fBm increments.  Both are pure functions of (model, grid, seed)
so replicate-level parallelism needs no shared state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg.lapack import dpstrf

from .errors import EmbeddingNotPSD, FactorizationFailure

__all__ = [
    "GridSpec",
    "ScalarPath",
    "CovarianceModel",
    "SeedSpec",
    "fbm_covariance",
    "fgn_autocovariance",
    "sample_gaussian_cholesky",
    "sample_fbm_circulant",
    "sample_fbm_ensemble",
    "validate_hurst",
    "write_path_csv",
]

_CHOL_TOL = 1e-10
_EMBED_TOL = 1e-8


def validate_hurst(H: float) -> float:
    """Check H in [1/2, 1); H = 1/2 is admitted only for Brownian reduction."""
    H = float(H)
    if not (0.5 <= H < 1.0):
        raise ValueError(f"Hurst parameter must lie in [1/2, 1), got {H}")
    return H


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid t_k = k T / n, k = 0..n."""

    T: float
    n: int

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon must be positive, got {self.T}")
        if self.n < 1:
            raise ValueError(f"need at least one step, got n={self.n}")

    @property
    def dt(self) -> float:
        return self.T / self.n

    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n + 1)


@dataclass(frozen=True)
class ScalarPath:
    """One sample path of a scalar process on a uniform grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n + 1,):
            raise ValueError(
                f"expected {self.grid.n + 1} values, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path contains non-finite values")
        object.__setattr__(self, "values", v)

    def subsample(self, n: int) -> "ScalarPath":
        """Restrict to the coarser uniform grid with n steps (n | native n)."""
        if self.grid.n % n != 0:
            raise ValueError(f"{n} does not divide native resolution {self.grid.n}")
        stride = self.grid.n // n
        return ScalarPath(GridSpec(self.grid.T, n), self.values[::stride])


@dataclass(frozen=True)
class CovarianceModel:
    """Covariance of a centered Gaussian process: fBm or a custom kernel.

    A custom kernel must be symmetric with positive variance for t > 0 and
    Hölder order gamma in (1/2, 1); these are the standing assumptions of the
    non-collision setting.
    """

    kind: str  # "fbm" or "custom"
    H: float | None = None
    kernel: Callable[[float, float], float] | None = None
    gamma: float | None = None

    @staticmethod
    def fbm(H: float) -> "CovarianceModel":
        return CovarianceModel(kind="fbm", H=validate_hurst(H))

    @staticmethod
    def custom(kernel: Callable[[float, float], float], gamma: float) -> "CovarianceModel":
        if not (0.5 < gamma < 1.0):
            raise ValueError(f"Hölder order must lie in (1/2, 1), got {gamma}")
        return CovarianceModel(kind="custom", kernel=kernel, gamma=gamma)

    def __call__(self, t: float, s: float) -> float:
        if self.kind == "fbm":
            return fbm_covariance(t, s, self.H)
        return self.kernel(t, s)

    def gram(self, times: np.ndarray) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        if self.kind == "fbm":
            tt, ss = np.meshgrid(times, times, indexing="ij")
            return fbm_covariance(tt, ss, self.H)
        m = len(times)
        C = np.empty((m, m))
        for j in range(m):
            for k in range(j, m):
                C[j, k] = C[k, j] = self.kernel(times[j], times[k])
        return C


@dataclass(frozen=True)
class SeedSpec:
    """Splittable counter-based randomness: (master seed, stream coordinates).

    Distinct coordinates give statistically independent Philox streams;
    identical (master_seed, coords) give bit-identical output regardless of
    execution order or thread count.
    """

    master_seed: int
    coords: tuple[int, ...] = field(default=())

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.master_seed, spawn_key=self.coords)
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *extra: int) -> "SeedSpec":
        return SeedSpec(self.master_seed, self.coords + tuple(int(e) for e in extra))


def fbm_covariance(t, s, H: float):
    """fBm covariance R(t,s) = (t^{2H} + s^{2H} - |t-s|^{2H}) / 2."""
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    h2 = 2.0 * H
    out = 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)
    return out if out.ndim else float(out)


def fgn_autocovariance(k, H: float):
    """Autocovariance of unit-spaced fractional Gaussian noise at lag k."""
    k = np.asarray(k, dtype=float)
    h2 = 2.0 * H
    out = 0.5 * (np.abs(k + 1) ** h2 - 2 * np.abs(k) ** h2 + np.abs(k - 1) ** h2)
    return out if out.ndim else float(out)


def _pivoted_cholesky_factor(C: np.ndarray) -> np.ndarray:
    """Factor a PSD Gram matrix as F F^T with symmetric pivoting.

    Raises FactorizationFailure when the matrix has an eigenvalue below
    -1e-10 times its max diagonal.
    """
    m = C.shape[0]
    max_diag = float(np.max(np.diag(C)))
    if max_diag <= 0:
        return np.zeros((m, m))
    L, piv, rank, info = dpstrf(C, lower=1, tol=_CHOL_TOL * max_diag)
    L = np.tril(L)
    L[:, rank:] = 0.0
    F = np.empty_like(L)
    F[piv - 1, :] = L  # LAPACK pivots are 1-based
    resid = np.max(np.abs(C - F @ F.T))
    if resid > 1e-8 * max(max_diag, 1.0):
        # pstrf stopped early; verify PSD-ness directly and rebuild from eigh
        w, V = np.linalg.eigh(C)
        if w.min() < -_CHOL_TOL * max_diag:
            raise FactorizationFailure(
                f"Gram matrix eigenvalue {w.min():.3e} below tolerance "
                f"{-_CHOL_TOL * max_diag:.3e}"
            )
        F = V * np.sqrt(np.clip(w, 0.0, None))
    return F


def sample_gaussian_cholesky(
    model: CovarianceModel, grid: GridSpec, seed: SeedSpec
) -> ScalarPath:
    """Exact sample of the centered Gaussian process on the grid (dense)."""
    F = _pivoted_cholesky_factor(model.gram(grid.nodes()[1:]))
    z = seed.generator().standard_normal(grid.n)
    values = np.concatenate(([0.0], F @ z))
    return ScalarPath(grid, values)


def sample_gaussian_cholesky_ensemble(
    model: CovarianceModel, grid: GridSpec, seeds: Sequence[SeedSpec]
) -> np.ndarray:
    """Batch version: one row per seed; the Gram factor is computed once."""
    F = _pivoted_cholesky_factor(model.gram(grid.nodes()[1:]))
    Z = np.stack([s.generator().standard_normal(grid.n) for s in seeds])
    out = np.zeros((len(seeds), grid.n + 1))
    out[:, 1:] = Z @ F.T
    return out


def _circulant_spectrum(n: int, H: float) -> np.ndarray:
    r = fgn_autocovariance(np.arange(n + 1), H)
    circ = np.concatenate([r, r[-2:0:-1]])  # length 2n
    g = np.fft.fft(circ).real
    gmax = g.max()
    if g.min() < -_EMBED_TOL * gmax:
        raise EmbeddingNotPSD(
            f"circulant eigenvalue {g.min():.3e} below -{_EMBED_TOL:.0e} * max;"
            " fall back to the Cholesky sampler"
        )
    return np.clip(g, 0.0, None)


def _fgn_from_stream(g: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one unit-spaced fGn vector of length n from spectrum g (len 2n)."""
    m = 2 * n
    z = np.empty(m, dtype=complex)
    z[0] = rng.standard_normal()
    z[n] = rng.standard_normal()
    v = rng.standard_normal((n - 1, 2)) if n > 1 else np.empty((0, 2))
    z[1:n] = (v[:, 0] + 1j * v[:, 1]) / np.sqrt(2.0)
    z[n + 1 :] = np.conj(z[n - 1 : 0 : -1])
    return np.fft.fft(z * np.sqrt(g)).real[:n] / np.sqrt(m)


def sample_fbm_circulant(grid: GridSpec, H: float, seed: SeedSpec) -> ScalarPath:
    """Exact-in-law fBm sample via circulant embedding of fGn, O(n log n)."""
    H = validate_hurst(H)
    g = _circulant_spectrum(grid.n, H)
    fgn = _fgn_from_stream(g, grid.n, seed.generator())
    incr = fgn * grid.dt**H
    values = np.concatenate(([0.0], np.cumsum(incr)))
    return ScalarPath(grid, values)


def sample_fbm_ensemble(
    grid: GridSpec, H: float, seeds: Sequence[SeedSpec]
) -> np.ndarray:
    """Batch circulant sampler: (len(seeds), n+1) array of independent paths."""
    H = validate_hurst(H)
    n = grid.n
    g = _circulant_spectrum(n, H)
    m = 2 * n
    Z = np.empty((len(seeds), m), dtype=complex)
    for row, s in enumerate(seeds):
        rng = s.generator()
        Z[row, 0] = rng.standard_normal()
        Z[row, n] = rng.standard_normal()
        v = rng.standard_normal((n - 1, 2)) if n > 1 else np.empty((0, 2))
        Z[row, 1:n] = (v[:, 0] + 1j * v[:, 1]) / np.sqrt(2.0)
        Z[row, n + 1 :] = np.conj(Z[row, n - 1 : 0 : -1])
    fgn = np.fft.fft(Z * np.sqrt(g), axis=1).real[:, :n] / np.sqrt(m)
    out = np.zeros((len(seeds), n + 1))
    np.cumsum(fgn * grid.dt**H, axis=1, out=out[:, 1:])
    return out


def write_path_csv(path: ScalarPath, fname) -> None:
    """Export as `t,value` rows at full double precision."""
    with open(fname, "w") as fh:
        fh.write("t,value\n")
        for t, v in zip(path.grid.nodes(), path.values):
            fh.write(f"{t:.17g},{v:.17g}\n")
