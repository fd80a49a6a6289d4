import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nclp.errors import DomainError, InvalidExponentError
from nclp.linalg import (
    conjugate_index,
    eigh,
    holder_dual_witness,
    jacobi_eigh,
    psd_power,
    random_complex,
    random_psd,
    random_unitary,
    schatten_norm,
    svd_via_eigh,
)

from conftest import complex_blocks


def test_conjugate_index_endpoints():
    assert conjugate_index(1) == math.inf
    assert conjugate_index(math.inf) == 1.0
    assert conjugate_index(2) == 2.0
    assert conjugate_index(4) == pytest.approx(4 / 3)


@pytest.mark.parametrize("p", [0.5, -1.0, float("nan")])
def test_conjugate_index_rejects(p):
    with pytest.raises(InvalidExponentError):
        conjugate_index(p)


def test_schatten_matches_numpy_norms(rng):
    X = random_complex((5, 3), rng)
    assert schatten_norm(X, 1) == pytest.approx(np.linalg.norm(X, "nuc"), rel=1e-12)
    assert schatten_norm(X, 2) == pytest.approx(np.linalg.norm(X, "fro"), rel=1e-12)
    assert schatten_norm(X, math.inf) == pytest.approx(np.linalg.norm(X, 2), rel=1e-12)


def test_schatten_hand_value():
    # singular values 3 and 4
    X = np.array([[3.0, 0.0], [0.0, -4.0]])
    assert schatten_norm(X, 3) == pytest.approx((27 + 64) ** (1 / 3), rel=1e-14)


def test_schatten_large_exponent_no_overflow():
    X = np.diag([1e200, 1e199])
    assert schatten_norm(X, 50) == pytest.approx(1e200, rel=1e-10)


@given(complex_blocks(1, 4), st.sampled_from([1.0, 1.5, 3.0, math.inf]))
def test_schatten_unitary_invariance(b, p):
    X = b[0]
    r = np.random.default_rng(0)
    U, V = random_unitary(4, r), random_unitary(4, r)
    assert schatten_norm(U @ X @ V, p) == pytest.approx(schatten_norm(X, p), rel=1e-9, abs=1e-12)


@given(complex_blocks(1, 5))
def test_jacobi_agrees_with_lapack(b):
    H = b[0] + b[0].conj().T
    d = jacobi_eigh(H)
    w = np.linalg.eigvalsh(H)
    np.testing.assert_allclose(d.eigenvalues, w, atol=1e-10 * max(1.0, abs(w).max()))
    np.testing.assert_allclose(d.reconstruct(), H, atol=1e-10 * max(1.0, abs(w).max()))
    np.testing.assert_allclose(d.eigenvectors.conj().T @ d.eigenvectors, np.eye(5), atol=1e-10)


def test_eigh_rejects_non_hermitian():
    with pytest.raises(DomainError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_svd_via_eigh_matches(rng):
    X = random_complex((4, 3), rng)
    U, s, Vh = svd_via_eigh(X, method="jacobi")
    np.testing.assert_allclose(s, np.linalg.svd(X, compute_uv=False), rtol=1e-10)
    np.testing.assert_allclose(U @ np.diag(s) @ Vh, X, atol=1e-10)


def test_psd_power_kernel_convention():
    A = np.diag([4.0, 0.0])
    np.testing.assert_allclose(psd_power(A, 0.5), np.diag([2.0, 0.0]))
    np.testing.assert_allclose(psd_power(A, -1.0), np.diag([0.25, 0.0]))
    np.testing.assert_allclose(psd_power(A, 0.0), np.diag([1.0, 0.0]))


def test_psd_power_rejects_indefinite():
    with pytest.raises(DomainError):
        psd_power(np.diag([1.0, -1.0]), 0.5)


def test_psd_power_semigroup(rng):
    A = random_psd(4, rng)
    np.testing.assert_allclose(psd_power(A, 0.3) @ psd_power(A, 0.7), A, atol=1e-10)


@given(complex_blocks(1, 3, 4), st.sampled_from([1.0, 4 / 3, 2.0, 3.0, math.inf]))
def test_holder_witness_attains_norm(b, p):
    X = b[0]
    if np.linalg.norm(X) < 1e-6:
        return
    Y = holder_dual_witness(X, p)
    assert np.vdot(Y, X).real == pytest.approx(schatten_norm(X, p), rel=1e-9)
    assert schatten_norm(Y, conjugate_index(p)) <= 1 + 1e-9
