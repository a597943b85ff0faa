"""Tests for the Jacobi eigensolver and the eigenvalue derivative formulas."""

import numpy as np
import pytest

from fdyson import (
    GridSpec,
    SeedSpec,
    eigen_derivatives,
    eigen_path,
    eigh_jacobi,
    hoffman_wielandt_gap,
    jacobi_eigh_batch,
    sample_sym_fbm_path,
)
from fdyson.errors import DimensionMismatch, NotVeryGood
from fdyson.spectral import GRAD_BOUND


def _random_sym(rng, d):
    A = rng.standard_normal((d, d))
    return A + A.T


def _random_herm(rng, d):
    A = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return A + A.conj().T


class TestJacobi:
    def test_two_by_two_closed_form(self):
        A = np.array([[2.0, 1.0], [1.0, -1.0]])
        dec = eigh_jacobi(A)
        disc = np.sqrt((2.0 - (-1.0)) ** 2 + 4.0)
        expect = np.array([(1.0 + disc) / 2, (1.0 - disc) / 2])
        assert np.allclose(dec.eigenvalues, expect, atol=1e-14)

    @pytest.mark.parametrize("d", [2, 3, 5, 8])
    def test_matches_numpy_real(self, d):
        rng = np.random.default_rng(d)
        for _ in range(10):
            A = _random_sym(rng, d)
            dec = eigh_jacobi(A)
            ref = np.sort(np.linalg.eigvalsh(A))[::-1]
            assert np.allclose(dec.eigenvalues, ref, atol=1e-11)
            recon = dec.U @ np.diag(dec.eigenvalues) @ dec.U.T
            assert np.allclose(recon, A, atol=1e-11)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_matches_numpy_hermitian(self, d):
        rng = np.random.default_rng(100 + d)
        for _ in range(10):
            A = _random_herm(rng, d)
            dec = eigh_jacobi(A)
            ref = np.sort(np.linalg.eigvalsh(A))[::-1]
            assert np.allclose(dec.eigenvalues, ref, atol=1e-10)
            recon = dec.U @ np.diag(dec.eigenvalues) @ dec.U.conj().T
            assert np.allclose(recon, A, atol=1e-10)

    def test_diagonal_positive_convention(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            dec = eigh_jacobi(_random_sym(rng, 4))
            if dec.very_good:
                assert np.all(np.diag(dec.U) > 0)

    def test_orthonormal_frames(self):
        rng = np.random.default_rng(5)
        A = _random_sym(rng, 6)
        dec = eigh_jacobi(A)
        assert np.allclose(dec.U.T @ dec.U, np.eye(6), atol=1e-12)

    def test_batch_consistency(self):
        rng = np.random.default_rng(8)
        mats = np.stack([_random_sym(rng, 3) for _ in range(7)])
        lams, U, vg = jacobi_eigh_batch(mats)
        for m in range(7):
            dec = eigh_jacobi(mats[m])
            assert np.allclose(lams[m], dec.eigenvalues, atol=1e-12)
            assert np.allclose(U[m], dec.U, atol=1e-12)
            assert vg[m] == dec.very_good

    def test_repeated_eigenvalues_not_very_good(self):
        dec = eigh_jacobi(np.eye(3))
        assert not dec.very_good
        assert np.allclose(dec.eigenvalues, 1.0)

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionMismatch):
            eigh_jacobi(np.zeros((2, 3)))


class TestEigenPath:
    def test_sorted_and_trace_consistent(self):
        P = sample_sym_fbm_path(3, GridSpec(1.0, 128), 0.75, SeedSpec(2),
                                x0=np.diag([2.0, 0.0, -2.0]))
        ep = eigen_path(P)
        assert ep.lambdas.shape == (3, 129)
        assert np.all(np.diff(ep.lambdas, axis=0) < 0)
        traces = np.einsum("mii->m", P.matrices())
        assert np.allclose(ep.lambdas.sum(axis=0), traces, atol=1e-10)

    def test_frames_optional(self):
        P = sample_sym_fbm_path(2, GridSpec(1.0, 16), 0.75, SeedSpec(2))
        assert eigen_path(P, keep_frames=False).frames is None
        assert eigen_path(P, keep_frames=True).frames.shape == (17, 2, 2)


class TestDerivatives:
    def test_gradient_identities(self):
        rng = np.random.default_rng(21)
        for _ in range(25):
            dec = eigh_jacobi(_random_sym(rng, 4))
            if not dec.very_good:
                continue
            der = eigen_derivatives(dec)
            norms = (der.grad ** 2).sum(axis=1)
            assert np.allclose(norms, 2.0, atol=1e-10)
            assert np.abs(der.grad).max() <= GRAD_BOUND

    def test_hessian_trace_identity(self):
        rng = np.random.default_rng(22)
        dec = eigh_jacobi(_random_sym(rng, 3))
        assert dec.very_good
        der = eigen_derivatives(dec)
        lam = dec.eigenvalues
        for i in range(3):
            target = 2.0 * sum(1.0 / (lam[i] - lam[j]) for j in range(3) if j != i)
            assert der.hess_diag[i].sum() == pytest.approx(target, rel=1e-10)

    def test_finite_difference_gradient(self):
        rng = np.random.default_rng(23)
        A = _random_sym(rng, 3)
        dec = eigh_jacobi(A)
        der = eigen_derivatives(dec)
        eps = 1e-6
        for j, (k, h) in enumerate(der.pairs):
            Ep = A.copy()
            Em = A.copy()
            if k == h:
                Ep[k, k] += np.sqrt(2) * eps
                Em[k, k] -= np.sqrt(2) * eps
            else:
                Ep[k, h] += eps
                Ep[h, k] += eps
                Em[k, h] -= eps
                Em[h, k] -= eps
            fd = (eigh_jacobi(Ep).eigenvalues - eigh_jacobi(Em).eigenvalues) / (2 * eps)
            assert np.allclose(fd, der.grad[:, j], atol=1e-8)

    def test_requires_very_good(self):
        with pytest.raises(NotVeryGood):
            eigen_derivatives(eigh_jacobi(np.eye(2)))


class TestHoffmanWielandt:
    def test_inequality_holds(self):
        rng = np.random.default_rng(31)
        for _ in range(20):
            A = _random_sym(rng, 4)
            B = A + 0.1 * _random_sym(rng, 4)
            lhs, rhs = hoffman_wielandt_gap(A, B)
            assert lhs <= rhs + 1e-12

    def test_equal_matrices(self):
        A = np.diag([3.0, 1.0, -2.0])
        lhs, rhs = hoffman_wielandt_gap(A, A)
        assert lhs == 0.0 and rhs == 0.0

    def test_commuting_case_is_tight(self):
        A = np.diag([2.0, 1.0, 0.0])
        B = np.diag([2.5, 1.5, 0.5])
        lhs, rhs = hoffman_wielandt_gap(A, B)
        assert lhs == pytest.approx(rhs)
