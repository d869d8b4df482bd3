"""Shared domain types: problem dimensions, teachers, covariances, feature maps.

Everything here is immutable after construction and safe to share across
parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .linalg import psd_eigvalsh, symmetrize


def _frozen_array(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ProblemDims:
    """Size triple of one learning problem.

    T is the input signal length, n the feature dimension and N the number
    of training samples; the ratio gamma = n / N governs the asymptotic
    regime and is always recomputed, never stored.
    """

    T: int
    n: int
    N: int

    def __post_init__(self):
        for name in ("T", "n", "N"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def gamma(self) -> float:
        return self.n / self.N

    @classmethod
    def ridge(cls, T: int, N: int) -> "ProblemDims":
        """Dimensions for the raw-input feature map (n is forced to T)."""
        return cls(T=T, n=T, N=N)

    @classmethod
    def esn(cls, T: int, n: int, N: int) -> "ProblemDims":
        return cls(T=T, n=n, N=N)


@dataclass(frozen=True, eq=False)
class TeacherSpec:
    """Ground-truth linear map plus label-noise variance.

    theta_star is indexed like the input signal (entry t multiplies u_{t+1},
    so the last entry weights the most recent input).  rho is recorded only
    when the vector was generated from the geometric memory profile.
    """

    theta_star: np.ndarray
    sigma2: float
    rho: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta_star", _frozen_array(self.theta_star))
        if self.theta_star.ndim != 1 or self.theta_star.size < 1:
            raise ValueError("theta_star must be a non-empty vector")
        if self.sigma2 < 0:
            raise ValueError(f"sigma2 must be nonnegative, got {self.sigma2}")
        if self.rho is not None and not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")

    @property
    def T(self) -> int:
        return self.theta_star.size


def make_memory_teacher(T: int, rho: float, normalize: bool = True) -> np.ndarray:
    """Teacher vector whose weight on the input j steps in the past is rho**j.

    Returned in input order (oldest first), so entry T-1 carries weight 1 on
    the most recent input.  Smaller rho concentrates the teacher on recent
    inputs.  With normalize the vector is scaled to unit Euclidean norm.
    """
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    lags = np.arange(T - 1, -1, -1, dtype=float)
    theta = rho ** lags
    if normalize:
        theta = theta / np.linalg.norm(theta)
    return theta


def memory_teacher(T: int, rho: float, sigma2: float, norm: float = 1.0) -> TeacherSpec:
    """TeacherSpec with a geometric memory profile scaled to the given norm.

    norm = 0 produces the null teacher (labels are pure noise).
    """
    if norm < 0:
        raise ValueError(f"norm must be nonnegative, got {norm}")
    theta = make_memory_teacher(T, rho, normalize=True) * norm
    return TeacherSpec(theta_star=theta, sigma2=sigma2, rho=rho)


_COV_KINDS = ("isotropic", "power_law", "ar1", "explicit")


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """Input covariance catalogue: identity, power-law diagonal, AR(1)
    Toeplitz, or an explicit user matrix."""

    kind: str
    T: int
    exponent: float | None = None
    c: float | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _COV_KINDS:
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.T < 1:
            raise ValueError(f"T must be >= 1, got {self.T}")
        if self.kind == "power_law" and self.exponent is None:
            raise ValueError("power_law covariance needs an exponent")
        if self.kind == "ar1":
            if self.c is None or not 0.0 <= self.c < 1.0:
                raise ValueError(f"ar1 covariance needs c in [0, 1), got {self.c}")
        if self.kind == "explicit":
            if self.matrix is None:
                raise ValueError("explicit covariance needs a matrix")
            object.__setattr__(self, "matrix", _frozen_array(self.matrix))
            if self.matrix.shape != (self.T, self.T):
                raise ValueError(
                    f"explicit covariance must be {self.T}x{self.T}, "
                    f"got {self.matrix.shape}"
                )

    @classmethod
    def isotropic(cls, T: int) -> "CovarianceSpec":
        return cls(kind="isotropic", T=T)

    @classmethod
    def power_law(cls, T: int, exponent: float) -> "CovarianceSpec":
        return cls(kind="power_law", T=T, exponent=exponent)

    @classmethod
    def ar1(cls, T: int, c: float) -> "CovarianceSpec":
        return cls(kind="ar1", T=T, c=c)

    @classmethod
    def explicit(cls, matrix: np.ndarray) -> "CovarianceSpec":
        matrix = np.asarray(matrix, dtype=float)
        return cls(kind="explicit", T=matrix.shape[0], matrix=matrix)


def materialize_covariance(spec: CovarianceSpec) -> np.ndarray:
    """Dense symmetric PSD covariance matrix for the given spec.

    Explicit matrices are rejected with a diagnostic if they are not
    symmetric PSD (min eigenvalue below -1e-10).
    """
    T = spec.T
    if spec.kind == "isotropic":
        out = np.eye(T)
    elif spec.kind == "power_law":
        out = np.diag(np.arange(1, T + 1, dtype=float) ** (-spec.exponent))
    elif spec.kind == "ar1":
        out = scipy.linalg.toeplitz(spec.c ** np.arange(T, dtype=float))
    else:
        m = np.asarray(spec.matrix, dtype=float)
        if not np.allclose(m, m.T, rtol=0.0, atol=1e-8 * max(1.0, np.abs(m).max())):
            raise ValueError("explicit covariance is not symmetric")
        w = np.linalg.eigvalsh(symmetrize(m))
        if w[0] < -1e-10:
            raise ValueError(
                f"explicit covariance is not PSD: min eigenvalue {w[0]:.6g} < 0"
            )
        out = m
    return symmetrize(out)


@dataclass(frozen=True)
class RidgeIdentity:
    """Feature map that passes raw inputs through: z = u."""


_RESERVOIR_KINDS = ("scaled_orthogonal", "scaled_gaussian")


@dataclass(frozen=True)
class LinearESN:
    """Linear echo-state feature map settings.

    n is the reservoir (feature) dimension, phi the leak factor in (0, 1]
    that bounds the spectral radius of the recurrent weights.  With
    resample_reservoir, Monte-Carlo trials each draw a fresh reservoir
    instead of sharing one fixed realization.
    """

    n: int
    phi: float
    weights: str = "scaled_orthogonal"
    resample_reservoir: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 < self.phi <= 1.0:
            raise ValueError(f"phi must lie in (0, 1], got {self.phi}")
        if self.weights not in _RESERVOIR_KINDS:
            raise ValueError(f"unknown reservoir weight kind {self.weights!r}")


FeatureMapKind = RidgeIdentity | LinearESN


@dataclass(frozen=True, eq=False)
class SecondOrderStats:
    """Second-order statistics (Sigma_u, Sigma_z, Sigma_uz) of one model.

    sigma_z is symmetrized on construction and must be PSD within 1e-10.
    For the raw-input feature map all three are the same matrix.
    """

    sigma_u: np.ndarray
    sigma_z: np.ndarray
    sigma_uz: np.ndarray

    def __post_init__(self):
        sigma_u = symmetrize(np.asarray(self.sigma_u, dtype=float))
        sigma_z = symmetrize(np.asarray(self.sigma_z, dtype=float))
        sigma_uz = np.array(self.sigma_uz, dtype=float, copy=True)
        T = sigma_u.shape[0]
        n = sigma_z.shape[0]
        if sigma_u.shape != (T, T) or sigma_z.shape != (n, n):
            raise ValueError("covariance blocks must be square")
        if sigma_uz.shape != (T, n):
            raise ValueError(
                f"sigma_uz must be {T}x{n}, got {sigma_uz.shape}"
            )
        psd_eigvalsh(sigma_z, tol=1e-10)
        for name, arr in (("sigma_u", sigma_u), ("sigma_z", sigma_z), ("sigma_uz", sigma_uz)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def T(self) -> int:
        return self.sigma_u.shape[0]

    @property
    def n(self) -> int:
        return self.sigma_z.shape[0]

    @classmethod
    def ridge(cls, sigma_u: np.ndarray) -> "SecondOrderStats":
        """Raw-input collapse: Sigma_z = Sigma_uz = Sigma_u."""
        return cls(sigma_u=sigma_u, sigma_z=sigma_u, sigma_uz=sigma_u)
