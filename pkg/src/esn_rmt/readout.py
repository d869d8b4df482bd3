"""Ridge readout training, prediction, and Monte-Carlo risk estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    threadpool_limits = None

from .core import (
    CovarianceSpec,
    LinearESN,
    ProblemDims,
    RidgeIdentity,
    TeacherSpec,
    materialize_covariance,
)
from .datagen import covariance_sqrt, noisy_labels, sample_columns
from .parallel import parallel_map
from .reservoir import generate_reservoir, memory_matrix
from .seeding import SeedDomain, child_seed, substream


@dataclass(frozen=True, eq=False)
class RidgeReadout:
    """Trained readout weights and the regularization they were fit with."""

    w_out: np.ndarray
    lam: float


@dataclass(frozen=True, eq=False)
class EmpiricalRisk:
    """Monte-Carlo estimate of the out-of-sample risk over independent
    train/test repetitions."""

    estimate: float
    stderr: float
    M: int
    trials: int
    per_trial: np.ndarray


def fit(Z: np.ndarray, y: np.ndarray, lam: float, solver: str = "auto") -> RidgeReadout:
    """Closed-form ridge readout (Z Z^T / N + lam I)^-1 Z y / N.

    Solved by a symmetric positive-definite factorization, never an explicit
    inverse.  solver = "dual" works on the N x N Gram matrix instead and is
    picked automatically when n > N; both paths agree to 1e-8.
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 2 or y.shape != (Z.shape[1],):
        raise ValueError(f"need Z of shape n x N and y of length N, got {Z.shape} and {y.shape}")
    n, N = Z.shape
    if solver == "auto":
        solver = "dual" if n > N else "primal"
    if solver == "primal":
        A = Z @ Z.T / N + lam * np.eye(n)
        w = scipy.linalg.solve(A, Z @ y / N, assume_a="pos")
    elif solver == "dual":
        G = Z.T @ Z / N + lam * np.eye(N)
        w = Z @ scipy.linalg.solve(G, y, assume_a="pos") / N
    else:
        raise ValueError(f"unknown solver {solver!r}")
    return RidgeReadout(w_out=w, lam=lam)


def predict(readout: RidgeReadout, Z_test: np.ndarray) -> np.ndarray:
    """Predictions w_out^T z for every column of Z_test."""
    Z_test = np.asarray(Z_test, dtype=float)
    if Z_test.ndim != 2 or Z_test.shape[0] != readout.w_out.size:
        raise ValueError(
            f"Z_test must be {readout.w_out.size} x M, got {Z_test.shape}"
        )
    return readout.w_out @ Z_test


def empirical_risk(
    dims: ProblemDims,
    cov: CovarianceSpec,
    teacher: TeacherSpec,
    fmap: RidgeIdentity | LinearESN,
    lam: float,
    M: int = 2000,
    trials: int = 20,
    seed: int = 0,
) -> EmpiricalRisk:
    """Mean squared test error over independent train/test repetitions.

    Each trial draws fresh training data and M fresh test pairs from
    disjoint seed substreams, fits the readout, and records the mean squared
    prediction error.  For ESN features the reservoir is fixed across trials
    unless fmap.resample_reservoir is set; features are computed through the
    memory matrix, which matches the state recurrence exactly.
    """
    if M < 100:
        raise ValueError(f"M must be >= 100, got {M}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if teacher.T != dims.T:
        raise ValueError(f"teacher length {teacher.T} does not match T={dims.T}")
    if cov.T != dims.T:
        raise ValueError(f"covariance is for T={cov.T}, dims have T={dims.T}")
    if isinstance(fmap, RidgeIdentity) and dims.n != dims.T:
        raise ValueError("raw-input features force n == T")
    if isinstance(fmap, LinearESN) and fmap.n != dims.n:
        raise ValueError(f"feature map has n={fmap.n}, dims have n={dims.n}")

    root = covariance_sqrt(materialize_covariance(cov))
    if np.array_equal(root, np.eye(dims.T)):
        root = None  # identity root: multiplying is exact but wasted work
    shared_S = None
    if isinstance(fmap, LinearESN) and not fmap.resample_reservoir:
        res = generate_reservoir(fmap.n, fmap.phi, fmap.weights, seed)
        shared_S = memory_matrix(res, dims.T)

    def draw(count: int, rng) -> np.ndarray:
        if root is None:
            return rng.standard_normal((dims.T, count))
        return sample_columns(root, count, rng)

    def run_trial(i: int) -> float:
        if isinstance(fmap, LinearESN):
            if shared_S is not None:
                S = shared_S
            else:
                res_i = generate_reservoir(
                    fmap.n, fmap.phi, fmap.weights,
                    child_seed(seed, SeedDomain.RESERVOIR, i),
                )
                S = memory_matrix(res_i, dims.T)
        else:
            S = None
        U = draw(dims.N, substream(seed, SeedDomain.INPUTS, i))
        y = noisy_labels(U, teacher, substream(seed, SeedDomain.NOISE, i))
        Z = U if S is None else S @ U
        readout = fit(Z, y, lam)
        U_test = draw(M, substream(seed, SeedDomain.TEST_INPUTS, i))
        y_test = noisy_labels(U_test, teacher, substream(seed, SeedDomain.TEST_NOISE, i))
        Z_test = U_test if S is None else S @ U_test
        err = predict(readout, Z_test) - y_test
        return float(np.mean(err**2))

    # Trials are small dense problems: one BLAS thread per trial is both
    # faster and keeps results bitwise independent of the worker count.
    if threadpool_limits is not None:
        with threadpool_limits(limits=1, user_api="blas"):
            per_trial = np.array(parallel_map(run_trial, range(trials)))
    else:  # pragma: no cover
        per_trial = np.array(parallel_map(run_trial, range(trials)))
    estimate = float(per_trial.mean())
    stderr = float(per_trial.std(ddof=1) / np.sqrt(trials)) if trials > 1 else 0.0
    return EmpiricalRisk(
        estimate=estimate, stderr=stderr, M=M, trials=trials, per_trial=per_trial
    )
