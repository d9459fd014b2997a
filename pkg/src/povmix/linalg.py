"""Dense complex linear algebra with pinned tolerance conventions.

Thin wrappers around numpy's Hermitian eigensolver and SVD that fix the
semantics the rest of the package relies on: ascending eigenvalue order,
relative rank cutoffs, and explicit clamping rules for almost-PSD input.
All functions are pure; nothing mutates its arguments.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

# A singular value sigma counts as zero when
#   sigma <= RANK_TOL * sigma_max * max(rows, cols).
RANK_TOL = 1e-10

# PSD acceptance: min eigenvalue >= -PSD_TOL * (1 + max |eigenvalue|).
PSD_TOL = 1e-10

# Hermiticity acceptance: ||M - M^dag||_max <= HERM_TOL * (1 + ||M||_max).
HERM_TOL = 1e-12


class SpectralDecomp(NamedTuple):
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""

    eigenvalues: np.ndarray   # real, shape (d,)
    eigenvectors: np.ndarray  # unitary columns, shape (d, d)


def as_square_matrix(m) -> np.ndarray:
    """Coerce to a square complex128 matrix, rejecting anything else."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    return a


def herm_defect(m) -> float:
    """Max-norm distance from Hermiticity, ||M - M^dag||_max."""
    a = np.asarray(m, dtype=np.complex128)
    return float(np.max(np.abs(a - a.conj().T)))


def hermitize(m) -> np.ndarray:
    """Hermitian part (M + M^dag) / 2 of a square matrix."""
    a = as_square_matrix(m)
    return (a + a.conj().T) / 2.0


def check_hermitian(m, tol: float = HERM_TOL) -> np.ndarray:
    """Return M coerced to complex128 after verifying it is Hermitian.

    The defect ||M - M^dag||_max must not exceed tol * (1 + ||M||_max).
    """
    a = as_square_matrix(m)
    scale = 1.0 + float(np.max(np.abs(a)))
    defect = herm_defect(a)
    if defect > tol * scale:
        raise ValueError(
            f"matrix is not Hermitian: defect {defect:.3e} exceeds {tol * scale:.3e}"
        )
    return a


def eig_hermitian(m, tol: float = HERM_TOL) -> SpectralDecomp:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending."""
    a = check_hermitian(m, tol)
    w, v = np.linalg.eigh(a)
    return SpectralDecomp(w, v)


def is_psd(m, tol: float = PSD_TOL) -> bool:
    """Whether the Hermitian matrix M is PSD up to a relative tolerance."""
    w = eig_hermitian(m).eigenvalues
    scale = 1.0 + float(np.max(np.abs(w)))
    return bool(w[0] >= -tol * scale)


def psd_sqrt(m, tol: float = PSD_TOL) -> np.ndarray:
    """Positive semidefinite square root S of M with S @ S ~= M.

    Eigenvalues in [-tol * (1 + max|eig|), 0) are clamped to zero; anything
    below that is an error, since the input then fails the PSD contract.
    """
    w, v = eig_hermitian(m)
    scale = 1.0 + float(np.max(np.abs(w)))
    if w[0] < -tol * scale:
        raise ValueError(
            f"matrix is not PSD: min eigenvalue {w[0]:.3e} below -{tol * scale:.3e}"
        )
    w = np.where(w < 0.0, 0.0, w)
    root = (v * np.sqrt(w)) @ v.conj().T
    return (root + root.conj().T) / 2.0


def range_isometry(m, tol: float = RANK_TOL) -> tuple[np.ndarray, int]:
    """Orthonormal basis of the numerical range of a PSD matrix.

    Returns (V, r): V is d x r with orthonormal columns spanning the
    eigenspaces with eigenvalue > tol * max(lambda_max, 1). The zero matrix
    yields r = 0 with an empty V.
    """
    w, v = eig_hermitian(m)
    scale = 1.0 + float(np.max(np.abs(w)))
    if w[0] < -PSD_TOL * scale:
        raise ValueError(
            f"matrix is not PSD: min eigenvalue {w[0]:.3e} below -{PSD_TOL * scale:.3e}"
        )
    cutoff = tol * max(float(w[-1]), 1.0)
    keep = w > cutoff
    return np.ascontiguousarray(v[:, keep]), int(np.count_nonzero(keep))


def kernel_basis(a, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the numerical null space of a rectangular matrix.

    Returns an n x m array whose columns are the right singular vectors with
    singular value <= tol * sigma_max * max(rows, cols). m = 0 means the
    matrix is numerically injective. A zero matrix returns the full identity
    basis of its domain.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {a.shape}")
    rows, cols = a.shape
    if cols == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    _, s, vh = np.linalg.svd(a, full_matrices=True)
    sigma_max = float(s[0]) if s.size else 0.0
    cutoff = tol * sigma_max * max(rows, cols)
    sigmas = np.zeros(cols)
    sigmas[: s.size] = s
    keep = sigmas <= cutoff
    return np.ascontiguousarray(vh.conj().T[:, keep])
