"""Linear echo-state feature map: reservoir generation, the state recurrence,
the memory matrix, and second-order feature statistics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    LinearESN,
    RidgeIdentity,
    SecondOrderStats,
)
from .seeding import SeedDomain, substream


@dataclass(frozen=True, eq=False)
class Reservoir:
    """Fixed random recurrent weights W, unit-norm input weights w_in, and
    the leak factor phi bounding the spectral radius of W."""

    W: np.ndarray
    w_in: np.ndarray
    phi: float
    seed: int
    kind: str = "scaled_orthogonal"

    def __post_init__(self):
        W = np.array(self.W, dtype=float, copy=True)
        w_in = np.array(self.w_in, dtype=float, copy=True)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("W must be square")
        if w_in.shape != (W.shape[0],):
            raise ValueError("w_in must be a vector of length n")
        if not 0.0 < self.phi <= 1.0:
            raise ValueError(f"phi must lie in (0, 1], got {self.phi}")
        if abs(np.linalg.norm(w_in) - 1.0) > 1e-12:
            raise ValueError("w_in must have unit norm")
        W.setflags(write=False)
        w_in.setflags(write=False)
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "w_in", w_in)

    @property
    def n(self) -> int:
        return self.W.shape[0]


def generate_reservoir(
    n: int,
    phi: float,
    kind: str = "scaled_orthogonal",
    seed: int = 0,
) -> Reservoir:
    """Draw a random reservoir with spectral radius phi.

    scaled_orthogonal: W = phi * Q with Q Haar-orthogonal (QR of a Gaussian
    matrix with sign-fixed R diagonal), so every singular value of W is phi
    and ||W^t w_in|| = phi^t exactly.
    scaled_gaussian: i.i.d. Gaussian entries rescaled to spectral radius phi.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 < phi <= 1.0:
        raise ValueError(f"phi must lie in (0, 1], got {phi}")
    rng = substream(seed, SeedDomain.RESERVOIR)
    if kind == "scaled_orthogonal":
        g = rng.standard_normal((n, n))
        q, r = np.linalg.qr(g)
        d = np.sign(np.diag(r))
        d[d == 0] = 1.0
        W = phi * (q * d)
    elif kind == "scaled_gaussian":
        g = rng.standard_normal((n, n)) / np.sqrt(n)
        radius = np.abs(np.linalg.eigvals(g)).max()
        if radius == 0.0:
            raise RuntimeError("degenerate Gaussian draw: zero spectral radius")
        W = g * (phi / radius)
    else:
        raise ValueError(f"unknown reservoir weight kind {kind!r}")
    w_in = rng.standard_normal(n)
    norm = np.linalg.norm(w_in)
    if norm == 0.0:
        raise RuntimeError("degenerate Gaussian draw: zero input vector")
    w_in = w_in / norm
    return Reservoir(W=W, w_in=w_in, phi=phi, seed=seed, kind=kind)


def esn_features(res: Reservoir, U: np.ndarray) -> np.ndarray:
    """Final reservoir states for every column of U.

    Runs x <- W x + w_in * u_t over t = 1..T from the zero state, which
    equals sum_t W^t w_in u_{T-t} column by column.
    """
    if U.ndim != 2:
        raise ValueError("U must be a T x count matrix")
    T, count = U.shape
    x = np.zeros((res.n, count))
    for t in range(T):
        x = res.W @ x + res.w_in[:, None] * U[t]
    return x


def memory_matrix(res: Reservoir, T: int) -> np.ndarray:
    """n x T matrix S with column t equal to W^(T-t) w_in, so that the
    feature map is exactly S @ u.  Built right-to-left by repeated
    multiplication with W; the last column is w_in."""
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    S = np.empty((res.n, T))
    S[:, T - 1] = res.w_in
    for t in range(T - 2, -1, -1):
        S[:, t] = res.W @ S[:, t + 1]
    return S


def esn_second_order_stats(res: Reservoir, sigma_u: np.ndarray) -> SecondOrderStats:
    """Feature statistics of one fixed reservoir realization:
    Sigma_uz = Sigma_u S^T and Sigma_z = S Sigma_u S^T."""
    sigma_u = np.asarray(sigma_u, dtype=float)
    if sigma_u.ndim != 2 or sigma_u.shape[0] != sigma_u.shape[1]:
        raise ValueError("sigma_u must be square")
    S = memory_matrix(res, sigma_u.shape[0])
    sigma_uz = sigma_u @ S.T
    sigma_z = S @ sigma_uz
    return SecondOrderStats(sigma_u=sigma_u, sigma_z=sigma_z, sigma_uz=sigma_uz)


def apply_feature_map(
    fmap: RidgeIdentity | LinearESN,
    U: np.ndarray,
    res: Reservoir | None = None,
) -> np.ndarray:
    """Batch feature extraction for either feature-map kind."""
    if isinstance(fmap, RidgeIdentity):
        return U
    if res is None:
        raise ValueError("a Reservoir is required for the ESN feature map")
    return esn_features(res, U)


def second_order_stats(
    fmap: RidgeIdentity | LinearESN,
    sigma_u: np.ndarray,
    res: Reservoir | None = None,
) -> SecondOrderStats:
    """Second-order statistics for either feature-map kind."""
    if isinstance(fmap, RidgeIdentity):
        return SecondOrderStats.ridge(sigma_u)
    if res is None:
        raise ValueError("a Reservoir is required for the ESN feature map")
    return esn_second_order_stats(res, sigma_u)
