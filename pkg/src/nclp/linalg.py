"""Dense complex linear algebra: spectral calculus and Schatten norms.

Every other module goes through this one for eigendecompositions, powers of
positive matrices and Schatten p-norms. Two Hermitian eigensolvers are
available: LAPACK (``numpy.linalg.eigh``, the default) and a cyclic Jacobi
sweep written here, which is slow but fully deterministic and independent of
the BLAS build.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidExponentError

TOL_EIG = 1e-10
KERNEL_TOL = 1e-10


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and unitary eigenvector columns of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T

    def apply(self, fn) -> np.ndarray:
        """Return ``U diag(fn(eigenvalues)) U*``."""
        U = self.eigenvectors
        return (U * fn(self.eigenvalues)) @ U.conj().T


def as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=complex)
    if X.ndim == 0:
        X = X.reshape(1, 1)
    if X.ndim != 2:
        raise DomainError(f"expected a 2-d matrix, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("matrix has non-finite entries")
    return X


def adjoint(X: np.ndarray) -> np.ndarray:
    return np.asarray(X).conj().T


def hermitian_part(X: np.ndarray) -> np.ndarray:
    return 0.5 * (X + X.conj().T)


def is_hermitian(X: np.ndarray, tol: float = TOL_EIG) -> bool:
    X = np.asarray(X)
    scale = max(np.linalg.norm(X), 1.0)
    return bool(np.linalg.norm(X - X.conj().T) <= tol * scale)


def conjugate_index(p: float) -> float:
    """Hölder conjugate ``p'`` with ``1/p + 1/p' = 1``; 1 and inf are swapped."""
    if not (p >= 1):  # also catches nan
        raise InvalidExponentError(f"exponent must lie in [1, inf], got {p}")
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def check_exponent(p: float) -> float:
    p = float(p)
    if not (p >= 1):
        raise InvalidExponentError(f"exponent must lie in [1, inf], got {p}")
    return p


# ---------------------------------------------------------------------------
# eigensolvers
# ---------------------------------------------------------------------------

def jacobi_eigh(H, tol: float = 1e-14, max_sweeps: int = 60) -> SpectralDecomposition:
    """Cyclic Jacobi eigensolver for a complex Hermitian matrix.

    Each 2x2 rotation first removes the phase of the pivot ``H[i, j]`` and
    then applies the classical real Jacobi rotation, so the iteration stays
    on Hermitian matrices. Sweeps run in fixed row-major pivot order.
    """
    A = as_matrix(H).copy()
    if A.shape[0] != A.shape[1]:
        raise DomainError("jacobi_eigh needs a square matrix")
    if not is_hermitian(A, 1e-8):
        raise DomainError("jacobi_eigh needs a Hermitian matrix")
    A = hermitian_part(A)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(A), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for i in range(n - 1):
            for j in range(i + 1, n):
                aij = A[i, j]
                mag = abs(aij)
                if mag <= 1e-300:
                    continue
                phase = aij / mag
                aii = A[i, i].real
                ajj = A[j, j].real
                tau = (ajj - aii) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # columns i, j of the unitary rotation
                ci = np.array([c, -s * np.conj(phase)])
                cj = np.array([s * phase, c])
                G = np.stack([ci, cj], axis=1)
                cols = A[:, [i, j]] @ G
                A[:, [i, j]] = cols
                rows = G.conj().T @ A[[i, j], :]
                A[[i, j], :] = rows
                A[i, j] = A[j, i] = 0.0
                V[:, [i, j]] = V[:, [i, j]] @ G
    w = np.real(np.diag(A))
    order = np.argsort(w, kind="stable")
    return SpectralDecomposition(w[order], V[:, order])


def eigh(H, method: str = "lapack") -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix.

    Raises :class:`DomainError` when ``H`` is not Hermitian within ``TOL_EIG``.
    """
    H = as_matrix(H)
    if H.shape[0] != H.shape[1] or not is_hermitian(H):
        raise DomainError("eigh needs a square Hermitian matrix")
    if method == "jacobi":
        return jacobi_eigh(H)
    if method != "lapack":
        raise ValueError(f"unknown eigensolver {method!r}")
    w, U = np.linalg.eigh(hermitian_part(H))
    return SpectralDecomposition(w, U)


def singular_values(X) -> np.ndarray:
    return np.linalg.svd(as_matrix(X), compute_uv=False)


def svd_via_eigh(X, method: str = "lapack"):
    """Thin SVD from the eigendecomposition of ``X* X`` plus polar recovery.

    Returns ``(U, s, Vh)`` with singular values in descending order. Columns of
    ``U`` for (numerically) zero singular values are left as zeros.
    """
    X = as_matrix(X)
    dec = eigh(X.conj().T @ X, method=method)
    lam = np.clip(dec.eigenvalues[::-1], 0.0, None)
    V = dec.eigenvectors[:, ::-1]
    s = np.sqrt(lam)
    U = X @ V
    keep = s > KERNEL_TOL * max(s.max(initial=0.0), 1e-300)
    U[:, keep] /= s[keep]
    U[:, ~keep] = 0.0
    return U, s, V.conj().T


# ---------------------------------------------------------------------------
# norms and spectral calculus
# ---------------------------------------------------------------------------

def schatten_from_singular_values(s: np.ndarray, p: float) -> float:
    s = np.abs(np.asarray(s, dtype=float))
    if s.size == 0:
        return 0.0
    top = s.max()
    if top == 0.0:
        return 0.0
    if math.isinf(p):
        return float(top)
    # scale by the largest value so large p cannot overflow
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def schatten_norm(X, p: float) -> float:
    """Schatten p-norm ``(sum_i sigma_i^p)^(1/p)``; the operator norm at ``p = inf``."""
    p = check_exponent(p)
    return schatten_from_singular_values(singular_values(X), p)


def psd_power(A, s: float, kernel_tol: float = KERNEL_TOL, method: str = "lapack") -> np.ndarray:
    """Spectral power ``A^s`` of a positive semidefinite matrix.

    Eigenvalues at or below ``kernel_tol * max eigenvalue`` form the kernel.
    On the kernel the result vanishes: for ``s > 0`` because ``0^s = 0``, for
    ``s <= 0`` because those directions are excluded (the power is taken on
    the range of ``A`` only, so ``s = 0`` gives the support projection).
    """
    A = as_matrix(A)
    dec = eigh(A, method=method)
    lam = dec.eigenvalues
    top = max(np.abs(lam).max(initial=0.0), 0.0)
    if top == 0.0:
        return np.zeros_like(A)
    if lam.min() < -max(TOL_EIG, kernel_tol) * top * 10:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {lam.min():.3e})")
    support = lam > kernel_tol * top
    vals = np.zeros_like(lam)
    vals[support] = lam[support] ** s
    return (dec.eigenvectors * vals) @ dec.eigenvectors.conj().T


def sqrtm_psd(A, kernel_tol: float = KERNEL_TOL) -> np.ndarray:
    return psd_power(A, 0.5, kernel_tol)


def trace_inner(A: np.ndarray, B: np.ndarray) -> complex:
    """Trace pairing ``Tr(A* B)``."""
    return complex(np.vdot(A, B))


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_complex(shape, rng: np.random.Generator) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def random_psd(n: int, rng: np.random.Generator, spectrum=(0.1, 10.0)) -> np.ndarray:
    U = random_unitary(n, rng)
    lam = rng.uniform(spectrum[0], spectrum[1], size=n)
    return (U * lam) @ U.conj().T


def holder_dual_witness(X, p: float) -> np.ndarray:
    """Unit-ball element ``Y`` of ``S_{p'}`` with ``Re Tr(Y* X) = ||X||_p``.

    For ``X = U S V*`` this is ``U S^{p-1} V* / ||X||_p^{p-1}``; at ``p = 1`` the
    partial isometry ``U V*`` and at ``p = inf`` the top singular pair.
    """
    X = as_matrix(X)
    p = check_exponent(p)
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    norm = schatten_from_singular_values(s, p)
    if norm == 0.0:
        return np.zeros_like(X)
    if p == 1:
        keep = s > KERNEL_TOL * s[0]
        return (U[:, keep]) @ Vh[keep, :]
    if math.isinf(p):
        return np.outer(U[:, 0], Vh[0, :])
    w = (s / norm) ** (p - 1.0)
    return (U * w) @ Vh
