"""Small dense symmetric-matrix helpers shared across modules."""

from __future__ import annotations

import numpy as np


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Exactly symmetric average (a + a.T) / 2."""
    return (a + a.T) / 2.0


def symmetric_sqrt(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Symmetric PSD square root via eigendecomposition.

    Eigenvalues in [-tol, 0) are clamped to zero; anything below -tol
    (relative to the top eigenvalue) is rejected.
    """
    w, v = np.linalg.eigh(symmetrize(a))
    scale = max(1.0, float(w[-1]))
    if w[0] < -tol * scale:
        raise ValueError(
            f"matrix is not positive semi-definite: min eigenvalue {w[0]:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return symmetrize((v * np.sqrt(w)) @ v.T)


def psd_eigvalsh(a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Ascending eigenvalues of a symmetric PSD matrix, clamped at zero.

    Rejects matrices with an eigenvalue below -tol * max(1, top eigenvalue).
    """
    w = np.linalg.eigvalsh(symmetrize(a))
    scale = max(1.0, float(w[-1]))
    if w[0] < -tol * scale:
        raise ValueError(
            f"matrix is not positive semi-definite: min eigenvalue {w[0]:.3e}"
        )
    return np.clip(w, 0.0, None)
