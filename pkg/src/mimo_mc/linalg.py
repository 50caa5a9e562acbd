"""Complex dense linear algebra and proximal operators.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Vectorisation is
column-major throughout, so that ``vec(B @ S @ A.T) == kron(A, B) @ vec(S)``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np


class DimensionError(ValueError):
    """Raised when matrix shapes are incompatible or invalid."""


class NumericalError(ArithmeticError):
    """Raised when a factorisation fails or produces non-finite values."""


class SvdFactors(NamedTuple):
    u: np.ndarray
    singular_values: np.ndarray
    v: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.singular_values) @ self.v.conj().T


class MatrixNorms(NamedTuple):
    frobenius: float
    nuclear: float
    entrywise_l1: float
    spectral: float


def as_matrix(a, name="matrix") -> np.ndarray:
    """Return `a` as a finite 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericalError(f"{name} contains non-finite entries")
    return arr


def dft_matrix(n: int) -> np.ndarray:
    """Normalised ``n x n`` DFT matrix, ``D[j, k] = exp(-2 pi i j k / n) / sqrt(n)``."""
    if n < 1:
        raise DimensionError(f"DFT size must be >= 1, got {n}")
    k = np.arange(n)
    # reduce j*k mod n before the exponential to keep the phase exact for large n
    phase = np.outer(k, k) % n
    return np.exp(-2j * np.pi * phase / n) / np.sqrt(n)


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def hadamard(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"hadamard shape mismatch: {a.shape} vs {b.shape}")
    return a * b


def vec(a) -> np.ndarray:
    """Stack the columns of `a` into a 1-D vector."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v, rows: int, cols: int) -> np.ndarray:
    v = np.asarray(v)
    if v.size != rows * cols:
        raise DimensionError(f"cannot unvec length {v.size} into {rows}x{cols}")
    return v.reshape(rows, cols, order="F")


def svd(a) -> SvdFactors:
    """Thin SVD with descending singular values.

    ``v`` holds the right singular vectors as columns, so
    ``a == u @ diag(s) @ v^H``.
    """
    a = as_matrix(a)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(a) if a.size else float("nan")
        raise NumericalError(
            f"SVD did not converge for {a.shape[0]}x{a.shape[1]} matrix "
            f"(condition number {cond:.3e})"
        ) from exc
    return SvdFactors(u, s, vh.conj().T)


def svt_shrink(w, threshold: float, return_singular_values: bool = False):
    """Singular value thresholding.

    Returns the minimiser of ``threshold * ||X||_* + 0.5 * ||X - W||_F^2``,
    i.e. ``U diag(max(sigma - threshold, 0)) V^H``. With
    `return_singular_values` the shrunk singular values are returned as well.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    f = svd(w)
    shrunk = np.maximum(f.singular_values - threshold, 0.0)
    keep = shrunk > 0
    out = (f.u[:, keep] * shrunk[keep]) @ f.v[:, keep].conj().T
    if return_singular_values:
        return out, shrunk
    return out


def soft_threshold_complex(v, tau_prime: float) -> np.ndarray:
    """Shrink real and imaginary parts independently by `tau_prime`.

    This is the proximal map of ``tau' * (|Re s|_1 + |Im s|_1)``.
    """
    if tau_prime < 0:
        raise ValueError(f"tau_prime must be nonnegative, got {tau_prime}")
    v = np.asarray(v, dtype=np.complex128)
    re = np.sign(v.real) * np.maximum(np.abs(v.real) - tau_prime, 0.0)
    im = np.sign(v.imag) * np.maximum(np.abs(v.imag) - tau_prime, 0.0)
    return re + 1j * im


def entrywise_l1(a) -> float:
    return float(np.sum(np.abs(a)))


def split_l1(a) -> float:
    """``sum |Re a_ij| + |Im a_ij|``, the penalty whose prox is `soft_threshold_complex`."""
    a = np.asarray(a)
    return float(np.sum(np.abs(a.real)) + np.sum(np.abs(a.imag)))


def nuclear_norm(a) -> float:
    a = as_matrix(a)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def norms(a) -> MatrixNorms:
    a = as_matrix(a)
    if a.size == 0:
        return MatrixNorms(0.0, 0.0, 0.0, 0.0)
    s = np.linalg.svd(a, compute_uv=False)
    return MatrixNorms(
        frobenius=float(np.linalg.norm(a)),
        nuclear=float(np.sum(s)),
        entrywise_l1=entrywise_l1(a),
        spectral=float(s[0]),
    )
