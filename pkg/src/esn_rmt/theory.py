"""Analytic risk engine: self-consistent fixed point, effective complexity,
exact asymptotic bias/variance, the spectral leak-kernel form for linear
echo-state features, and closed-form optimal regularization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import SecondOrderStats
from .linalg import symmetric_sqrt, symmetrize

MAX_FIXED_POINT_ITER = 100_000


class TheoryError(RuntimeError):
    """Analytic evaluation failed (ill-conditioning or inconsistent inputs)."""


class ConvergenceError(TheoryError):
    """Fixed-point iteration failed to reach its residual target."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class InterpolationThresholdError(TheoryError):
    """Effective complexity reached 1; the asymptotic formulas diverge."""


@dataclass(frozen=True, eq=False)
class FixedPointSolution:
    """Solution of delta = (1/N) tr(Sigma_z Q) with Q = (Sigma_z/(1+delta) + lam I)^-1.

    spectrum holds the eigenvalues of Sigma_z (descending); alpha is the
    effective complexity at the fixed point.
    """

    delta: float
    alpha: float
    q_bar: np.ndarray
    lam: float
    iterations: int
    residual: float
    spectrum: np.ndarray
    N: int


@dataclass(frozen=True)
class RiskDecomposition:
    """Asymptotic out-of-sample risk split into bias^2, variance and noise."""

    bias2: float
    variance: float
    noise: float

    @property
    def total(self) -> float:
        return self.bias2 + self.variance + self.noise


@dataclass(frozen=True, eq=False)
class SpectralRisk:
    """Per-eigenvalue view of the linear-ESN risk.

    (mu, basis) diagonalize Sigma_u^(1/2) D Sigma_u^(1/2) with D the leak
    kernel; alpha_t and beta_t are the per-mode regularization and
    sensitivity weights at the fixed point.
    """

    mu: np.ndarray
    basis: np.ndarray
    alpha_t: np.ndarray
    beta_t: np.ndarray
    phi: float
    delta: float
    alpha: float


@dataclass(frozen=True)
class OptimalRegularization:
    """Closed-form regularization lambda_star = (T/N) * SNR for isotropic
    inputs, with SNR = ||theta||^2 / sigma^2."""

    lambda_star: float
    snr: float


@dataclass(frozen=True)
class LeakKernel:
    """Convention for the effective memory kernel D of a linear ESN.

    The decaying default D = diag(phi^(power*(T-t))) matches the measured
    Gram matrix S^T S of a scaled-orthogonal reservoir (power = 2).  Setting
    decaying=False flips the exponent sign, which grows into the past.
    """

    power: float = 2.0
    decaying: bool = True

    def diagonal(self, T: int, phi: float) -> np.ndarray:
        if T < 1:
            raise ValueError(f"T must be >= 1, got {T}")
        if not 0.0 < phi <= 1.0:
            raise ValueError(f"phi must lie in (0, 1], got {phi}")
        ages = np.arange(T - 1, -1, -1, dtype=float)
        exponent = self.power * ages
        if not self.decaying:
            exponent = -exponent
        return phi ** exponent


def _fixed_point_map(delta: float, mu: np.ndarray, N: int, lam: float) -> float:
    return float(np.sum(mu * (1.0 + delta) / (mu + lam * (1.0 + delta))) / N)


def _newton_polish(delta: float, mu: np.ndarray, N: int, lam: float) -> tuple[float, float]:
    """Newton steps on g(d) = d - map(d); g'(d) = 1 - alpha(d) > 0 near the root."""
    residual = abs(_fixed_point_map(delta, mu, N, lam) - delta)
    for _ in range(8):
        mapped = _fixed_point_map(delta, mu, N, lam)
        slope = 1.0 - effective_complexity(mu, N, lam, delta)
        if slope <= 0.0:
            break
        step = (mapped - delta) / slope
        candidate = delta + step
        if candidate < 0.0:
            break
        cand_residual = abs(_fixed_point_map(candidate, mu, N, lam) - candidate)
        if cand_residual >= residual:
            break
        delta, residual = candidate, cand_residual
        if abs(step) <= 2.0 * np.finfo(float).eps * (1.0 + abs(delta)):
            break
    return delta, residual


def fixed_point_spectrum(
    mu: np.ndarray, N: int, lam: float, max_iter: int = MAX_FIXED_POINT_ITER
) -> tuple[float, int, float]:
    """Unique positive fixed point of the self-consistent trace equation,
    computed on the eigenvalues of Sigma_z.

    Damped iteration (eta = 0.5) from delta0 = tr(Sigma_z)/(N lam), with a
    bisection fallback if the iteration oscillates or stalls.  Returns
    (delta, iterations, residual).
    """
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    mu = np.clip(np.asarray(mu, dtype=float), 0.0, None)
    upper = float(mu.sum()) / (N * lam)
    if upper == 0.0:
        return 0.0, 0, 0.0

    delta = upper
    previous_step = 0.0
    converged = False
    oscillated = False
    for iteration in range(1, max_iter + 1):
        mapped = _fixed_point_map(delta, mu, N, lam)
        residual = abs(mapped - delta)
        if residual <= 5e-14 * (1.0 + abs(delta)):
            converged = True
            break
        step = 0.5 * (mapped - delta)
        if previous_step * step < 0.0:
            oscillated = True
            break
        previous_step = step
        delta = delta + step

    if not converged:
        # Bisection on g(d) = d - map(d); g(0) < 0 <= g(upper), single crossing.
        lo, hi = 0.0, upper
        iteration = iteration if oscillated else max_iter
        for _ in range(200):
            iteration += 1
            mid = 0.5 * (lo + hi)
            if mid == lo or mid == hi:
                break
            if mid - _fixed_point_map(mid, mu, N, lam) < 0.0:
                lo = mid
            else:
                hi = mid
        delta = 0.5 * (lo + hi)

    delta, residual = _newton_polish(delta, mu, N, lam)
    if residual > 1e-9 * (1.0 + abs(delta)):
        raise ConvergenceError(
            f"fixed point did not converge after {iteration} iterations", residual
        )
    return delta, iteration, residual


def effective_complexity(mu: np.ndarray, N: int, lam: float, delta: float) -> float:
    """alpha = (1/N) sum_t mu_t^2 / (mu_t + lam (1 + delta))^2."""
    mu = np.asarray(mu, dtype=float)
    return float(np.sum((mu / (mu + lam * (1.0 + delta))) ** 2) / N)


def solve_fixed_point(sigma_z: np.ndarray, N: int, lam: float) -> FixedPointSolution:
    """Solve the trace fixed point for a dense PSD feature covariance.

    Sigma_z is eigendecomposed once; the iteration runs on eigenvalues and
    the resolvent q_bar is reconstructed from the eigenbasis.
    """
    sigma_z = np.asarray(sigma_z, dtype=float)
    if sigma_z.ndim != 2 or sigma_z.shape[0] != sigma_z.shape[1]:
        raise ValueError("sigma_z must be square")
    w, v = np.linalg.eigh(symmetrize(sigma_z))
    scale = max(1.0, float(w[-1]))
    if w[0] < -1e-10 * scale:
        raise ValueError(f"sigma_z is not PSD: min eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    delta, iterations, residual = fixed_point_spectrum(w, N, lam)
    alpha = effective_complexity(w, N, lam, delta)
    if alpha >= 1.0:
        raise InterpolationThresholdError(
            f"interpolation threshold reached: alpha = {alpha:.6f} >= 1"
        )
    q_bar = symmetrize((v / (w / (1.0 + delta) + lam)) @ v.T)
    return FixedPointSolution(
        delta=delta,
        alpha=alpha,
        q_bar=q_bar,
        lam=lam,
        iterations=iterations,
        residual=residual,
        spectrum=w[::-1].copy(),
        N=N,
    )


def risk_from_stats(
    stats: SecondOrderStats,
    theta_star: np.ndarray,
    sigma2: float,
    fp: FixedPointSolution,
) -> RiskDecomposition:
    """Asymptotic bias/variance for any fixed feature map, from its
    second-order statistics and the fixed point of its Sigma_z.

    The bias is the quadratic-form bracket
        theta' Su theta - 2 a' Q a / (1+delta) + a' Q Sz Q a / (1+delta)^2
    with a = Suz' theta, inflated by 1/(1-alpha); the variance is
    sigma^2 alpha / (1-alpha).
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    theta = np.asarray(theta_star, dtype=float)
    if theta.shape != (stats.T,):
        raise ValueError(
            f"theta_star must have length {stats.T}, got {theta.shape}"
        )
    if fp.alpha >= 1.0:
        raise InterpolationThresholdError(
            f"interpolation threshold reached: alpha = {fp.alpha:.6f} >= 1"
        )
    one_plus = 1.0 + fp.delta
    a = stats.sigma_uz.T @ theta
    qa = fp.q_bar @ a
    signal = float(theta @ (stats.sigma_u @ theta))
    cross = float(a @ qa)
    curvature = float(qa @ (stats.sigma_z @ qa))
    bracket = signal - 2.0 * cross / one_plus + curvature / one_plus**2
    if bracket < -1e-6 * max(signal, 1e-30):
        raise TheoryError(
            f"inconsistent bias quadratic forms: bracket {bracket:.6e} "
            f"with signal power {signal:.6e}"
        )
    bracket = max(bracket, 0.0)
    bias2 = bracket / (1.0 - fp.alpha)
    variance = sigma2 * fp.alpha / (1.0 - fp.alpha)
    return RiskDecomposition(bias2=bias2, variance=variance, noise=sigma2)


def effective_esn_stats(
    sigma_u: np.ndarray, phi: float, kernel: LeakKernel = LeakKernel()
) -> SecondOrderStats:
    """Deterministic-equivalent ESN statistics from the leak kernel:
    Sigma_z = D^(1/2) Sigma_u D^(1/2) and Sigma_uz = Sigma_u D^(1/2).

    The fixed-realization statistics of a wide scaled-orthogonal reservoir
    converge to these as n grows.
    """
    sigma_u = symmetrize(np.asarray(sigma_u, dtype=float))
    d_root = np.sqrt(kernel.diagonal(sigma_u.shape[0], phi))
    sigma_z = symmetrize(d_root[:, None] * sigma_u * d_root[None, :])
    sigma_uz = sigma_u * d_root[None, :]
    return SecondOrderStats(sigma_u=sigma_u, sigma_z=sigma_z, sigma_uz=sigma_uz)


def esn_spectral_risk(
    sigma_u: np.ndarray,
    theta_star: np.ndarray,
    sigma2: float,
    phi: float,
    lam: float,
    N: int,
    kernel: LeakKernel = LeakKernel(),
) -> tuple[RiskDecomposition, SpectralRisk]:
    """Linear-ESN risk in the eigenbasis of Sigma_u^(1/2) D Sigma_u^(1/2).

    Per eigenpair (mu_t, v_t):
        alpha_t = lam^2 / (mu_t + lam (1+delta))^2
        beta_t  = mu_t  / (mu_t + lam (1+delta))^2
        bias^2  = (1+delta)^2 / (1-alpha) * sum_t alpha_t (theta' Su^(1/2) v_t)^2
    The variance uses the aggregate identity sigma^2 alpha / (1 - alpha),
    which keeps this route exactly consistent with risk_from_stats; beta_t
    is reported as the per-mode sensitivity profile.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    sigma_u = symmetrize(np.asarray(sigma_u, dtype=float))
    T = sigma_u.shape[0]
    theta = np.asarray(theta_star, dtype=float)
    if theta.shape != (T,):
        raise ValueError(f"theta_star must have length {T}, got {theta.shape}")
    root_u = symmetric_sqrt(sigma_u)
    d = kernel.diagonal(T, phi)
    m = symmetrize(root_u @ (d[:, None] * root_u))
    w, v = np.linalg.eigh(m)
    mu = np.clip(w[::-1], 0.0, None)
    basis = v[:, ::-1]
    delta, _, _ = fixed_point_spectrum(mu, N, lam)
    alpha = effective_complexity(mu, N, lam, delta)
    if alpha >= 1.0:
        raise InterpolationThresholdError(
            f"interpolation threshold reached: alpha = {alpha:.6f} >= 1"
        )
    shifted = mu + lam * (1.0 + delta)
    alpha_t = lam**2 / shifted**2
    beta_t = mu / shifted**2
    proj = basis.T @ (root_u @ theta)
    bias2 = (1.0 + delta) ** 2 / (1.0 - alpha) * float(np.sum(alpha_t * proj**2))
    variance = sigma2 * alpha / (1.0 - alpha)
    risk = RiskDecomposition(bias2=bias2, variance=variance, noise=sigma2)
    spectral = SpectralRisk(
        mu=mu,
        basis=basis,
        alpha_t=alpha_t,
        beta_t=beta_t,
        phi=phi,
        delta=delta,
        alpha=alpha,
    )
    return risk, spectral


def optimal_regularization(
    T: int, N: int, theta_star: np.ndarray, sigma2: float
) -> OptimalRegularization:
    """Closed-form lambda_star = (T/N) * SNR for isotropic inputs.

    Only claimed for Sigma_u = I; the caller is responsible for isotropy.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive (SNR undefined otherwise)")
    if T < 1 or N < 1:
        raise ValueError("T and N must be >= 1")
    norm2 = float(np.asarray(theta_star, dtype=float) @ np.asarray(theta_star, dtype=float))
    if norm2 == 0.0:
        raise ValueError("theta_star must be nonzero (SNR would vanish)")
    snr = norm2 / sigma2
    return OptimalRegularization(lambda_star=(T / N) * snr, snr=snr)


def minimize_lambda(
    total_risk, lo: float, hi: float, tol: float = 1e-4, iters: int = 200
) -> float:
    """Golden-section search for the lambda minimizing total_risk(lambda),
    run in log space over [lo, hi]."""
    if not 0 < lo < hi:
        raise ValueError("need 0 < lo < hi")
    inv_golden = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = np.log(lo), np.log(hi)
    c = b - inv_golden * (b - a)
    d = a + inv_golden * (b - a)
    fc = total_risk(np.exp(c))
    fd = total_risk(np.exp(d))
    for _ in range(iters):
        if b - a < tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_golden * (b - a)
            fc = total_risk(np.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + inv_golden * (b - a)
            fd = total_risk(np.exp(d))
    return float(np.exp(0.5 * (a + b)))


@dataclass(frozen=True, eq=False)
class RiskQuery:
    """One analytic grid point: a model family at a sweep coordinate."""

    coordinate: float | tuple
    model: str  # "ridge" | "esn"
    sigma_u: np.ndarray
    theta_star: np.ndarray
    sigma2: float
    lam: float
    N: int
    phi: float | None = None
    kernel: LeakKernel = LeakKernel()

    def __post_init__(self):
        if self.model not in ("ridge", "esn"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "esn" and self.phi is None:
            raise ValueError("esn queries need phi")


@dataclass(frozen=True)
class RiskCurvePoint:
    """Analytic risk at one grid point, or a diverged marker."""

    coordinate: float | tuple
    model: str
    risk: RiskDecomposition | None
    alpha: float | None
    delta: float | None
    diverged: bool


def evaluate_query(query: RiskQuery) -> tuple[RiskDecomposition, float, float]:
    """(risk, alpha, delta) for one analytic grid point."""
    if query.model == "ridge":
        fp = solve_fixed_point(query.sigma_u, query.N, query.lam)
        risk = risk_from_stats(
            SecondOrderStats.ridge(query.sigma_u), query.theta_star, query.sigma2, fp
        )
        return risk, fp.alpha, fp.delta
    risk, spectral = esn_spectral_risk(
        query.sigma_u,
        query.theta_star,
        query.sigma2,
        query.phi,
        query.lam,
        query.N,
        query.kernel,
    )
    return risk, spectral.alpha, spectral.delta


def risk_curve(queries: Iterable[RiskQuery]) -> list[RiskCurvePoint]:
    """Evaluate a sweep of analytic grid points.

    Points where the formulas diverge (interpolation threshold or
    non-convergence) are flagged rather than aborting the sweep.
    """
    points: list[RiskCurvePoint] = []
    for query in queries:
        try:
            risk, alpha, delta = evaluate_query(query)
        except (InterpolationThresholdError, ConvergenceError):
            points.append(
                RiskCurvePoint(
                    coordinate=query.coordinate,
                    model=query.model,
                    risk=None,
                    alpha=None,
                    delta=None,
                    diverged=True,
                )
            )
        else:
            points.append(
                RiskCurvePoint(
                    coordinate=query.coordinate,
                    model=query.model,
                    risk=risk,
                    alpha=alpha,
                    delta=delta,
                    diverged=False,
                )
            )
    return points
