"""Dense matrix helpers: spectral norm, matrix exponential, commutators."""
from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import NumericalError


def _check_finite(A, what="matrix") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if not np.all(np.isfinite(A)):
        raise NumericalError(f"{what} has non-finite entries")
    return A


def spectral_norm(A) -> float:
    """``||A||_2 = sqrt(lambda_max(A^T A))``.

    The largest eigenvalue of the symmetric matrix ``A^T A`` comes from a
    symmetric eigensolver; it is always between ``max|a_ij|`` and
    ``n max|a_ij|``.
    """
    A = _check_finite(A)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {A.shape}")
    return float(spectral_norms(A[None])[0])


def spectral_norms(stack) -> np.ndarray:
    """Spectral norms of a stack of matrices with shape ``(n, N, M)``."""
    stack = np.asarray(stack, dtype=float)
    if stack.shape[-1] == 0 or stack.shape[-2] == 0:
        return np.zeros(stack.shape[:-2])
    gram = np.swapaxes(stack, -1, -2) @ stack
    gram = 0.5 * (gram + np.swapaxes(gram, -1, -2))
    lam = np.linalg.eigvalsh(gram)[..., -1]
    return np.sqrt(np.maximum(lam, 0.0))


def matrix_exp(A) -> np.ndarray:
    """Matrix exponential (scaling and squaring with a Pade core)."""
    A = _check_finite(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    out = scipy.linalg.expm(A)
    if not np.all(np.isfinite(out)):
        raise NumericalError("matrix exponential overflowed")
    return out


def commutator(A, B) -> np.ndarray:
    """``[A, B] = AB - BA``; broadcasts over leading axes."""
    return A @ B - B @ A
