"""Acceptance suite: one test per verification criterion, each printing a
single pass/fail line with its pinned tolerance.

Scales are chosen so the whole file runs in a few minutes on a laptop while
keeping every Monte Carlo check well inside its power regime.
"""

import json

import numpy as np
import pytest

from fdyson import (
    CovarianceModel,
    GridSpec,
    SeedSpec,
    abs_moment_std_normal,
    eigen_derivatives,
    eigen_path,
    eigh_jacobi,
    expected_Y_variation,
    extract_Y,
    holder_exponent,
    ks_critical_two_sample,
    ks_two_sample,
    min_gap,
    negative_moment_probe,
    median_of_means,
    sample_fbm_ensemble,
    sample_sym_fbm_path,
    variation_report,
    young_check_report,
    young_log_gap,
)
from fdyson.dynamics import drift_integral
from fdyson.gaussian_paths import fbm_covariance, sample_gaussian_cholesky_ensemble
from fdyson.harness import ExperimentConfig, _euler_vs_direct, run_suite
from fdyson.matrix_ensemble import SQRT2
from fdyson.spectral import GRAD_BOUND, jacobi_eigh_batch

X0 = np.diag([1.0, -1.0])


def _line(num, desc, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} ({desc}): {detail}")


def _seeds(base, coord, count):
    return [SeedSpec(base, (coord, r)) for r in range(count)]


def test_criterion_01_fbm_sampler_exactness():
    H, M, n = 0.75, 10_000, 10
    grid = GridSpec(1.0, n)
    paths = sample_fbm_ensemble(grid, H, _seeds(101, 0, M))
    nodes = grid.nodes()[1:]
    X = paths[:, 1:]
    emp = X.T @ X / M
    R = CovarianceModel.fbm(H).gram(nodes)
    prod_se = np.einsum("mi,mj->ij", X, X)
    se = np.sqrt((np.einsum("mi,mj->ij", X**2, X**2) / M - emp**2) / M)
    del prod_se
    dev = np.abs(emp - R) / se
    cov_ok = bool(np.all(dev <= 5.0))

    chol = sample_gaussian_cholesky_ensemble(
        CovarianceModel.fbm(H), grid, _seeds(101, 1, M))
    ks = ks_two_sample(paths[:, -1], chol[:, -1])
    crit = ks_critical_two_sample(M, M)
    ks_ok = ks < crit

    ok = cov_ok and ks_ok
    _line(1, "fBm sampler exactness", ok,
          f"max covariance deviation {dev.max():.2f} SE (<= 5), "
          f"circulant-vs-Cholesky KS {ks:.4f} < {crit:.4f}")
    assert ok


def test_criterion_02_fbm_inverse_hurst_variation():
    H, M = 0.75, 64
    p = 1.0 / H
    resolutions = [2**12, 2**13, 2**14]
    paths = sample_fbm_ensemble(GridSpec(1.0, 2**14), H, _seeds(102, 0, M))
    target = abs_moment_std_normal(p)
    vr = variation_report(paths, p, resolutions, target)
    rel = abs(vr.means[-1] - target) / target
    ok = rel < 0.10 and vr.monotone()
    _line(2, "fBm 1/H-variation", ok,
          f"mean {vr.means[-1]:.4f} vs {target:.4f} (rel {rel:.3f} < 0.10), "
          f"errors {np.round(vr.errors(), 4).tolist()} monotone={vr.monotone()}")
    assert ok


def test_criterion_03_non_collision():
    n, M = 2**12, 200
    ok = True
    summary = []
    for d in (2, 3):
        for H in (0.6, 0.75):
            gaps = np.empty(M)
            for r in range(M):
                P = sample_sym_fbm_path(d, GridSpec(1.0, n), H,
                                        SeedSpec(103, (d, int(H * 100), r)))
                gaps[r] = min_gap(eigen_path(P, keep_frames=False, minors=False))
            ok &= bool(np.all(gaps > 0.0))
            summary.append(f"d={d},H={H}: min {gaps.min():.2e} "
                           f"med {np.median(gaps):.2e}")
    _line(3, "non-collision", ok, "; ".join(summary))
    assert ok


def test_criterion_04_gradient_formulas():
    rng = SeedSpec(104).generator()
    count, dims = 100, [2, 3, 4, 5]
    eps_g, eps_h = 1e-6, 1e-4

    def fd_eigs(A, k, h, eps):
        E = A.copy()
        if k == h:
            E[k, k] += SQRT2 * eps
        else:
            E[k, h] += eps
            E[h, k] += eps
        return eigh_jacobi(E).eigenvalues

    max_g = max_h = max_norm = max_trace = max_abs = 0.0
    done = 0
    while done < count:
        d = dims[done % len(dims)]
        A = rng.standard_normal((d, d))
        A = A + A.T
        dec = eigh_jacobi(A)
        # finite differences themselves degrade near collisions, so sampled
        # matrices are required to have all gaps above 0.05
        if not dec.very_good or -np.diff(dec.eigenvalues).min() < 0.05:
            continue
        der = eigen_derivatives(dec)
        for j, (k, h) in enumerate(der.pairs):
            fd = (fd_eigs(A, k, h, eps_g) - fd_eigs(A, k, h, -eps_g)) / (2 * eps_g)
            max_g = max(max_g, float(np.max(
                np.abs(fd - der.grad[:, j])
                / np.maximum(np.abs(der.grad[:, j]), 1.0))))
            fd2 = (fd_eigs(A, k, h, eps_h) - 2 * dec.eigenvalues
                   + fd_eigs(A, k, h, -eps_h)) / eps_h**2
            max_h = max(max_h, float(np.max(
                np.abs(fd2 - der.hess_diag[:, j])
                / np.maximum(np.abs(der.hess_diag[:, j]), 1.0))))
        max_norm = max(max_norm, float(np.abs((der.grad**2).sum(axis=1) - 2.0).max()))
        lam = dec.eigenvalues
        tgt = np.array([2.0 * sum(1.0 / (lam[i] - lam[j])
                                  for j in range(d) if j != i) for i in range(d)])
        max_trace = max(max_trace, float(np.max(
            np.abs(der.hess_diag.sum(axis=1) - tgt) / np.maximum(np.abs(tgt), 1.0))))
        max_abs = max(max_abs, float(np.abs(der.grad).max()))
        done += 1

    ok = (max_g <= 1e-6 and max_h <= 1e-4 and max_norm <= 1e-8
          and max_trace <= 1e-8 and max_abs <= GRAD_BOUND)
    _line(4, "gradient formulas", ok,
          f"FD grad {max_g:.1e} <= 1e-6, FD hess {max_h:.1e} <= 1e-4, "
          f"norm id {max_norm:.1e} <= 1e-8, trace id {max_trace:.1e} <= 1e-8, "
          f"|G| max {max_abs:.3f} <= {GRAD_BOUND:.3f}")
    assert ok


def test_criterion_05_decomposition_identities():
    n, M, H = 2**12, 100, 0.75
    worst_recon = worst_drift = worst_trace = 0.0
    for r in range(M):
        P = sample_sym_fbm_path(2, GridSpec(1.0, n), H, SeedSpec(105, (r,)), x0=X0)
        ep = eigen_path(P, keep_frames=False, minors=False)
        dec = extract_Y(ep, H)
        recon = dec.lambda0[:, None] + dec.Y + dec.drift
        worst_recon = max(worst_recon, float(np.abs(recon - dec.lambdas).max()))
        worst_drift = max(worst_drift, float(np.abs(dec.drift.sum(axis=0)).max()))
        tr = dec.lambdas.sum(axis=0) - dec.lambda0.sum()
        worst_trace = max(worst_trace, float(np.abs(dec.Y.sum(axis=0) - tr).max()))
    ok = worst_recon <= 1e-10 and worst_drift <= 1e-10 and worst_trace <= 1e-10
    _line(5, "decomposition identities", ok,
          f"reconstruction {worst_recon:.1e}, drift sum {worst_drift:.1e}, "
          f"residual trace {worst_trace:.1e} (all <= 1e-10, M={M})")
    assert ok


def test_criterion_06_residual_zero_mean():
    n, M, H = 1024, 500, 0.75
    Y = np.empty((M, 2, n + 1))
    for r in range(M):
        P = sample_sym_fbm_path(2, GridSpec(1.0, n), H, SeedSpec(106, (r,)), x0=X0)
        Y[r] = extract_Y(eigen_path(P, keep_frames=False, minors=False), H).Y
    ok = True
    worst = 0.0
    for frac in (0.25, 0.5, 0.75, 1.0):
        m = int(round(frac * n))
        mean = Y[:, :, m].mean(axis=0)
        se = Y[:, :, m].std(axis=0, ddof=1) / np.sqrt(M)
        ok &= bool(np.all(np.abs(mean) <= 3.0 * se))
        worst = max(worst, float(np.max(np.abs(mean) / (3.0 * se))))
    _line(6, "residual zero mean", ok,
          f"max |mean|/(3 SE) = {worst:.3f} <= 1 at t in (0.25,0.5,0.75,1), M={M}")
    assert ok


def test_criterion_07_residual_route_consistency():
    H, M = 0.75, 12
    resolutions = [2**10, 2**11, 2**12]
    all_monotone = True
    finest = []
    for r in range(M):
        P = sample_sym_fbm_path(2, GridSpec(1.0, resolutions[-1]), H,
                                SeedSpec(107, (r,)), x0=X0)
        rep = young_check_report(P, H, resolutions)
        all_monotone &= rep.monotone()
        finest.append(float(rep.max_discrepancy[-1].max()))
    _line(7, "residual route consistency", all_monotone,
          f"per-replicate discrepancy monotone over n={resolutions} "
          f"(finest max {max(finest):.2e}, M={M})")
    assert all_monotone


def test_criterion_08_residual_inverse_hurst_variation():
    H, M = 0.75, 48
    p = 1.0 / H
    resolutions = [2**12, 2**13, 2**14]
    n = resolutions[-1]
    Y = np.empty((M, 2, n + 1))
    for r in range(M):
        P = sample_sym_fbm_path(2, GridSpec(1.0, n), H, SeedSpec(108, (r,)), x0=X0)
        Y[r] = extract_Y(eigen_path(P, keep_frames=False, minors=False), H).Y
    target = expected_Y_variation(H, 1.0)
    ok = True
    detail = []
    for i in range(2):
        vr = variation_report(Y[:, i, :], p, resolutions, target)
        rel = abs(vr.means[-1] - target) / target
        ok &= rel < 0.10 and vr.monotone()
        detail.append(f"i={i + 1}: {vr.means[-1]:.4f} rel {rel:.3f} "
                      f"monotone={vr.monotone()}")
    _line(8, "residual 1/H-variation", ok,
          f"target {target:.4f}; " + "; ".join(detail))
    assert ok


def test_criterion_09_self_similarity():
    H, M, n, a = 0.75, 2000, 1024, 2.0
    zero = np.zeros((2, 2))

    def ensemble(coord):
        Y = np.empty((M, 2, n + 1))
        for r in range(M):
            P = sample_sym_fbm_path(2, GridSpec(1.0, n), H,
                                    SeedSpec(109, (coord, r)), x0=zero)
            Y[r] = extract_Y(eigen_path(P, keep_frames=False, minors=False), H).Y
        return Y

    YA = ensemble(0)
    YB = ensemble(1)
    crit = ks_critical_two_sample(M, M)
    stats = [ks_two_sample(YA[:, i, n], a**H * YB[:, i, n // 2]) for i in range(2)]
    ok = max(stats) < crit
    _line(9, "self-similarity of residuals", ok,
          f"per-coordinate KS {np.round(stats, 4).tolist()} < {crit:.4f} "
          f"(Y_i(2t) vs 2^H Y_i(t), M={M})")
    assert ok


def test_criterion_10_brownian_reduction():
    n, M = 2**12, 200
    qv = np.empty((M, 2))
    for r in range(M):
        P = sample_sym_fbm_path(2, GridSpec(1.0, n), 0.5, SeedSpec(110, (r,)), x0=X0)
        dec = extract_Y(eigen_path(P, keep_frames=False, minors=False), 0.5)
        qv[r] = np.sum(np.diff(dec.Y, axis=1) ** 2, axis=1)
    qv_rel = float(np.abs(qv.mean(axis=0) - 2.0).max() / 2.0)
    qv_ok = qv_rel < 0.05

    cfg = ExperimentConfig(x0=[1.0, -1.0], master_seed=110, n=n)
    ks, crit, kept = _euler_vs_direct(cfg, 2000)
    ks_ok = ks < crit
    ok = qv_ok and ks_ok
    _line(10, "H=1/2 reduction", ok,
          f"QV mean {np.round(qv.mean(axis=0), 3).tolist()} vs 2 "
          f"(rel {qv_rel:.3f} < 0.05); Euler-vs-direct KS {ks:.4f} < {crit:.4f} "
          f"({kept} replicates kept)")
    assert ok


def test_criterion_11_log_gap_identity():
    H, n = 0.75, 2**13
    m0 = n // 4
    errs = []
    for r in range(3):
        P = sample_sym_fbm_path(2, GridSpec(1.0, n), H, SeedSpec(111, (r,)), x0=X0)
        ep = eigen_path(P, keep_frames=False, minors=False)
        lg = young_log_gap(ep, 0, 1, m0)
        direct = np.log(ep.lambdas[0, m0:] - ep.lambdas[1, m0:])
        errs.append(float(np.abs(lg - direct).max()))
    err = float(np.median(errs))
    ok = err < 0.01
    _line(11, "log-gap Young identity", ok,
          f"median pathwise error {err:.4f} < 0.01 on [0.25, 1] at n=2^13 "
          f"(per-path {np.round(errs, 4).tolist()})")
    assert ok


def test_criterion_12_gap_density():
    H, M = 0.75, 10_000

    def gap_sample(coord, t):
        mats = np.stack([
            sample_sym_fbm_path(2, GridSpec(t, 1), H,
                                SeedSpec(112, (coord, r))).matrices()[1]
            for r in range(M)
        ])
        lams, _, _ = jacobi_eigh_batch(mats, minors=False)
        return lams[:, 0] - lams[:, 1]

    gaps = gap_sample(0, 1.0)
    scale = 2.0  # Rayleigh scale 2 t^H at t = 1
    mean_tgt = scale * np.sqrt(np.pi / 2.0)
    se = gaps.std(ddof=1) / np.sqrt(M)
    mean_ok = abs(gaps.mean() - mean_tgt) <= 3.0 * se

    rng = SeedSpec(112, (9,)).generator()
    g2 = rng.standard_normal((M, 2))
    oracle = scale * np.hypot(g2[:, 0], g2[:, 1])
    ks = ks_two_sample(gaps, oracle)
    crit = ks_critical_two_sample(M, M)

    gaps_half = gap_sample(1, 0.5)
    scaling_ok = True
    ratios = {}
    for q in (0.5, 1.0, 1.5):
        m1 = negative_moment_probe(gaps, q)
        m2 = negative_moment_probe(gaps_half, q)
        scaling_ok &= np.isfinite(m1) and np.isfinite(m2)
        # tail-robust ratio: gap^{-q} has infinite variance for q >= 1
        ratio = median_of_means(gaps_half ** (-q)) / median_of_means(gaps ** (-q))
        expect = 2.0 ** (q * H)
        scaling_ok &= abs(ratio / expect - 1.0) < 0.20
        ratios[q] = (round(ratio, 3), round(expect, 3))

    ok = mean_ok and ks < crit and scaling_ok
    _line(12, "gap density oracle", ok,
          f"mean {gaps.mean():.4f} vs {mean_tgt:.4f} (3 SE {3 * se:.4f}); "
          f"KS {ks:.4f} < {crit:.4f}; moment scaling {ratios} within 20%")
    assert ok


def test_criterion_13_holder_exponents():
    H, M, n = 0.75, 150, 2048
    fbm = sample_fbm_ensemble(GridSpec(1.0, n), H, _seeds(113, 0, M))
    est_f, _ = holder_exponent(fbm, 1.0 / n)

    lam = np.empty((M, n + 1))
    for r in range(M):
        P = sample_sym_fbm_path(2, GridSpec(1.0, n), H, SeedSpec(113, (1, r)))
        lam[r] = eigen_path(P, keep_frames=False, minors=False).lambdas[0]
    est_e, _ = holder_exponent(lam, 1.0 / n)

    ok = abs(est_f - H) < 0.05 and abs(est_e - H) < 0.10
    _line(13, "Hölder exponents", ok,
          f"fBm estimate {est_f:.3f} in {H}±0.05, "
          f"eigenvalue estimate {est_e:.3f} in {H}±0.10")
    assert ok


def test_criterion_14_determinism(tmp_path):
    kw = dict(suites=["noncollide", "gradcheck"], n=64, replicates=6,
              master_seed=114, figures=False)
    m1 = run_suite(ExperimentConfig(out_dir=str(tmp_path / "a"), threads=1, **kw))
    m8 = run_suite(ExperimentConfig(out_dir=str(tmp_path / "b"), threads=8, **kw))
    for m in (m1, m8):
        m.pop("wall_clock_seconds")
        m["config"].pop("threads")
        m["config"].pop("out_dir")
    ok = json.dumps(m1, sort_keys=True) == json.dumps(m8, sort_keys=True)
    _line(14, "determinism across threads", ok,
          "manifests byte-identical for threads 1 vs 8 (same config and seed)")
    assert ok
