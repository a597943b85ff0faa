"""Eigenvalue dynamics: the pairwise-repulsion drift integral, extraction of
the Skorohod-residual processes Y_i, the pathwise Young-sum cross-check with
its trace correction, the Young log-gap identity, and the classical H=1/2
non-colliding Euler integrator.

The decomposition computed here is
    lambda_i(t) = lambda_i(0) + Y_i(t) + D_i(t),
with D_i the trapezoidal quadrature of 2H sum_{j!=i} s^{2H-1} / gap_ij(s).
The first quadrature cell is singular when the path starts at the zero
matrix (gaps open like s^H, so the integrand behaves like s^{H-1}); it is
closed in that case with the local power-law value g(t_1) t_1 / H.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GapBelowTolerance, NotVeryGood, OrderingViolated
from .gaussian_paths import GridSpec, ScalarPath
from .matrix_ensemble import SQRT2, SymMatrixPath
from .spectral import EigenPath, _derivatives_batch, eigen_path

__all__ = [
    "DysonDecomposition",
    "YoungCheckReport",
    "drift_integral",
    "extract_Y",
    "young_skorohod_Y",
    "young_check_report",
    "young_log_gap",
    "dyson_euler",
    "write_decomposition_csv",
]

GAP_ABORT_TOL = 1e-14
_ZERO_START_TOL = 1e-8


@dataclass(frozen=True)
class DysonDecomposition:
    """Per-eigenvalue drift and residual paths with the exact identity
    lambda = lambda(0) + Y + drift at every node."""

    grid: GridSpec
    H: float
    lambdas: np.ndarray    # (d, n+1)
    drift: np.ndarray      # (d, n+1)
    Y: np.ndarray          # (d, n+1)
    lambda0: np.ndarray    # (d,)
    first_cell: np.ndarray # (d,) drift contribution of [0, t_1], for sensitivity


@dataclass(frozen=True)
class YoungCheckReport:
    """Max |extract_Y - (Young sum - trace correction)| per grid resolution."""

    resolutions: list
    max_discrepancy: np.ndarray  # (len(resolutions), d)
    convergence_ratios: np.ndarray = field(default=None)

    def monotone(self) -> bool:
        m = self.max_discrepancy.max(axis=1)
        return bool(np.all(np.diff(m) < 0))


def _check_gaps(lambdas: np.ndarray, from_node: int = 1) -> None:
    d = lambdas.shape[0]
    if d < 2:
        return
    gaps = -np.diff(lambdas[:, from_node:], axis=0)
    if gaps.size and gaps.min() < GAP_ABORT_TOL:
        i, m = np.unravel_index(np.argmin(gaps), gaps.shape)
        raise GapBelowTolerance(
            f"gap lambda_{i + 1}-lambda_{i + 2} = {gaps[i, m]:.3e} at node "
            f"{m + from_node}: numerical collision"
        )


def _zero_start(lambdas: np.ndarray) -> bool:
    d = lambdas.shape[0]
    if d < 2:
        return False
    return float(-np.diff(lambdas[:, 0]).min()) < _ZERO_START_TOL


def _cumulative_quadrature(f: np.ndarray, nodes: np.ndarray, H: float,
                           zero_start: bool):
    """Cumulative integral of f over [0, t_m]; f[0] is ignored.

    Interior cells use the trapezoid rule.  The first cell uses the local
    power-law model f ~ c s^{H-1} when the path starts at zero (closed form
    f(t_1) t_1 / H) and a plain trapezoid with f(0) := 0 otherwise.
    Returns (cumulative (n+1,...), first_cell_value).
    """
    dt = nodes[1] - nodes[0]
    out = np.zeros_like(f)
    first = f[1] * dt / H if zero_start else f[1] * dt / 2.0
    out[1] = first
    if f.shape[0] > 2:
        out[2:] = first + np.cumsum((f[1:-1] + f[2:]) * dt / 2.0, axis=0)
    return out, first


def drift_integral(ep: EigenPath, H: float, zero_start: bool | None = None):
    """Drift trajectories D_i(t_m): trapezoidal quadrature of
    2H sum_{j!=i} s^{2H-1} / (lambda_i(s) - lambda_j(s)), pairwise so that
    sum_i D_i vanishes identically."""
    lambdas = ep.lambdas
    d, n1 = lambdas.shape
    _check_gaps(lambdas)
    if zero_start is None:
        zero_start = _zero_start(lambdas)
    nodes = ep.grid.nodes()
    s_pow = np.zeros(n1)
    s_pow[1:] = nodes[1:] ** (2.0 * H - 1.0)
    drift = np.zeros((d, n1))
    first = np.zeros(d)
    for i in range(d):
        for j in range(i + 1, d):
            integrand = np.zeros(n1)
            integrand[1:] = 2.0 * H * s_pow[1:] / (lambdas[i, 1:] - lambdas[j, 1:])
            cum, fc = _cumulative_quadrature(integrand, nodes, H, zero_start)
            drift[i] += cum
            drift[j] -= cum
            first[i] += fc
            first[j] -= fc
    return drift, first


def extract_Y(ep: EigenPath, H: float, zero_start: bool | None = None) -> DysonDecomposition:
    """Residual processes Y_i = lambda_i - lambda_i(0) - D_i."""
    drift, first = drift_integral(ep, H, zero_start)
    lam0 = ep.lambdas[:, 0].copy()
    Y = ep.lambdas - lam0[:, None] - drift
    return DysonDecomposition(ep.grid, H, ep.lambdas, drift, Y, lam0, first)


def young_skorohod_Y(P: SymMatrixPath, ep: EigenPath, H: float,
                     zero_start: bool | None = None) -> np.ndarray:
    """Discretized Skorohod residuals via the pathwise route: forward Young
    Riemann sums of the eigenvalue gradients against entry increments, minus
    the trace-correction integral H s^{2H-1} sum_kh d2 lambda_i / d b_kh^2.

    Requires frames at every node and very-good decompositions at all
    interior nodes (node 0 is exempt: a diagonal or zero start has an exact
    frame even though gaps/entries degenerate there).
    """
    if ep.frames is None:
        raise ValueError("eigen path must retain frames for the Young route")
    if not np.all(ep.very_good[1:]):
        bad = 1 + int(np.argmin(ep.very_good[1:]))
        raise NotVeryGood(f"node {bad} is not a very-good decomposition")
    lambdas = ep.lambdas
    d, n1 = lambdas.shape
    if zero_start is None:
        zero_start = _zero_start(lambdas)
    nodes = ep.grid.nodes()
    grad, hess = _derivatives_batch(ep.frames, lambdas.T)
    db = P.increments()                                  # (n, N)
    # forward (left endpoint) Young sums, one per eigenvalue
    young = np.zeros((d, n1))
    young[:, 1:] = np.cumsum(np.einsum("mik,mk->mi", grad[:-1], db), axis=0).T
    # trace correction: same quadrature and first-cell rule as the drift
    s_pow = np.zeros(n1)
    s_pow[1:] = nodes[1:] ** (2.0 * H - 1.0)
    corr = np.zeros((d, n1))
    for i in range(d):
        f = np.zeros(n1)
        f[1:] = H * s_pow[1:] * hess[1:, i, :].sum(axis=1)
        corr[i], _ = _cumulative_quadrature(f, nodes, H, zero_start)
    return young - corr


def young_check_report(P: SymMatrixPath, H: float, resolutions,
                       zero_start: bool | None = None) -> YoungCheckReport:
    """Self-convergence check of the two Y routes across dyadic resolutions.

    The native path is restricted to each coarser grid (a valid sample of the
    same law), both Y computations run there, and the max absolute
    discrepancy is recorded per resolution.
    """
    resolutions = sorted(int(n) for n in resolutions)
    disc = []
    for n in resolutions:
        Q = P if n == P.grid.n else P.subsample(n)
        ep = eigen_path(Q)
        dec = extract_Y(ep, H, zero_start)
        Yp = young_skorohod_Y(Q, ep, H, zero_start)
        disc.append(np.max(np.abs(dec.Y - Yp), axis=1))
    disc = np.array(disc)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = disc[:-1] / disc[1:]
    return YoungCheckReport(resolutions, disc, ratios)


def young_log_gap(ep: EigenPath, i: int, j: int, t0_index: int) -> np.ndarray:
    """Forward Young sum for log(lambda_i - lambda_j) on [t_{m0}, T]:
    log gap(t_0) + int (d lambda_i - d lambda_j) / gap, left endpoints.

    Returns the reconstructed log-gap trajectory at nodes m0..n."""
    if i == j:
        raise ValueError("need two distinct eigenvalue indices")
    if t0_index < 1:
        raise ValueError("t_0 must be a positive grid node")
    gap = ep.lambdas[i, t0_index:] - ep.lambdas[j, t0_index:]
    if gap.min() < GAP_ABORT_TOL:
        raise GapBelowTolerance(
            f"gap {gap.min():.3e} below tolerance on [t_{t0_index}, T]"
        )
    incr = np.diff(gap) / gap[:-1]
    out = np.empty_like(gap)
    out[0] = np.log(gap[0])
    out[1:] = out[0] + np.cumsum(incr)
    return out


def dyson_euler(noises, lam0) -> EigenPath:
    """Explicit Euler-Maruyama for the classical H=1/2 non-colliding SDE
    d lambda_i = sqrt(2) dW_i + sum_{j!=i} dt / (lambda_i - lambda_j).

    noises: d independent Brownian ScalarPaths on one grid; lam0 strictly
    decreasing.  Ordering violations abort (refine the grid)."""
    d = len(noises)
    grid = noises[0].grid
    for w in noises[1:]:
        if w.grid != grid:
            raise ValueError("noise paths must share one grid")
    lam0 = np.asarray(lam0, dtype=float)
    if d > 1 and not np.all(np.diff(lam0) < 0):
        raise OrderingViolated("initial eigenvalues must be strictly decreasing")
    dW = np.stack([np.diff(w.values) for w in noises])   # (d, n)
    lam = _dyson_euler_batch(dW[None], lam0, grid.dt)[0]
    return EigenPath(grid, lam, None, np.ones(grid.n + 1, dtype=bool))


def _dyson_euler_batch(dW: np.ndarray, lam0: np.ndarray, dt: float,
                       mark_failures: bool = False):
    """Vectorized Euler over replicates: dW (R, d, n) -> lambdas (R, d, n+1).

    With mark_failures, replicates whose ordering breaks are flagged in the
    returned ok mask (their values are NaN from the violating step on) and
    the rest continue; otherwise the first violation raises."""
    R, d, n = dW.shape
    lam = np.empty((R, d, n + 1))
    lam[:, :, 0] = lam0
    cur = np.broadcast_to(lam0, (R, d)).copy()
    ok = np.ones(R, dtype=bool)
    eye = np.eye(d, dtype=bool)
    for m in range(n):
        gap = cur[:, :, None] - cur[:, None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.where(eye, 0.0, 1.0 / gap)
        cur = cur + SQRT2 * dW[:, :, m] + dt * inv.sum(axis=2)
        if d > 1:
            bad = np.any(np.diff(cur, axis=1) >= 0, axis=1) & ok
            if np.any(bad):
                if not mark_failures:
                    raise OrderingViolated(
                        f"ordering lost at step {m + 1}; the grid is too coarse"
                    )
                ok &= ~bad
                cur[bad] = np.nan
        lam[:, :, m + 1] = cur
    if mark_failures:
        return lam, ok
    return lam


def write_decomposition_csv(dec: DysonDecomposition, fname) -> None:
    """Export as `t,i,lambda,drift,Y` rows (1-based i)."""
    nodes = dec.grid.nodes()
    d = dec.lambdas.shape[0]
    with open(fname, "w") as fh:
        fh.write("t,i,lambda,drift,Y\n")
        for m, t in enumerate(nodes):
            for i in range(d):
                fh.write(
                    f"{t:.17g},{i + 1},{dec.lambdas[i, m]:.17g},"
                    f"{dec.drift[i, m]:.17g},{dec.Y[i, m]:.17g}\n"
                )
