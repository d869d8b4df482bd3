"""Sampling of teacher-student datasets: Gaussian inputs, noisy labels,
held-out test pairs.  All draws are pure functions of (arguments, seed)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CovarianceSpec, ProblemDims, TeacherSpec, materialize_covariance
from .linalg import symmetric_sqrt
from .seeding import SeedDomain, substream


@dataclass(frozen=True, eq=False)
class Dataset:
    """Input matrix (columns are samples), labels, and the seed that made them."""

    U: np.ndarray
    y: np.ndarray
    seed: int

    def __post_init__(self):
        if self.U.ndim != 2 or self.y.ndim != 1 or self.U.shape[1] != self.y.size:
            raise ValueError("U must be T x count with one label per column")


def covariance_sqrt(sigma_u: np.ndarray) -> np.ndarray:
    """Symmetric square root of the input covariance (PSD-clamped)."""
    return symmetric_sqrt(sigma_u, tol=1e-10)


def sample_columns(root: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """count i.i.d. columns root @ g with g standard Gaussian."""
    return root @ rng.standard_normal((root.shape[0], count))


def noisy_labels(U: np.ndarray, teacher: TeacherSpec, rng: np.random.Generator) -> np.ndarray:
    """Labels theta^T u + eps with eps ~ N(0, sigma2) per column."""
    if U.shape[0] != teacher.T:
        raise ValueError(
            f"input dimension {U.shape[0]} does not match teacher length {teacher.T}"
        )
    y = U.T @ teacher.theta_star
    return y + np.sqrt(teacher.sigma2) * rng.standard_normal(U.shape[1])


def sample_inputs(dims: ProblemDims, cov: CovarianceSpec, count: int, seed: int) -> np.ndarray:
    """T x count matrix of i.i.d. Gaussian inputs with covariance cov."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if cov.T != dims.T:
        raise ValueError(f"covariance is for T={cov.T}, dims have T={dims.T}")
    root = covariance_sqrt(materialize_covariance(cov))
    return sample_columns(root, count, substream(seed, SeedDomain.INPUTS))


def label(U: np.ndarray, teacher: TeacherSpec, seed: int) -> np.ndarray:
    """Teacher labels for the columns of U; the noise stream is disjoint
    from the input stream."""
    return noisy_labels(U, teacher, substream(seed, SeedDomain.NOISE))


def make_test_set(
    dims: ProblemDims,
    cov: CovarianceSpec,
    teacher: TeacherSpec,
    M: int,
    seed: int,
) -> Dataset:
    """M fresh test pairs from the same law, on seed domains disjoint from
    the training domains."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if cov.T != dims.T:
        raise ValueError(f"covariance is for T={cov.T}, dims have T={dims.T}")
    root = covariance_sqrt(materialize_covariance(cov))
    U = sample_columns(root, M, substream(seed, SeedDomain.TEST_INPUTS))
    y = noisy_labels(U, teacher, substream(seed, SeedDomain.TEST_NOISE))
    return Dataset(U=U, y=y, seed=seed)
